from __future__ import annotations

from logging import getLogger
from typing import Any, TYPE_CHECKING

from tabulate import tabulate

from app.core.flags import Flags, flag
from app.core.helpers import command
from app.database import audit
from config import ExitCodes

if TYPE_CHECKING:
    from app.core.flags import FlagNamespace

log = getLogger(__name__)


class AuditFlags(Flags):
    """Recomputes a run summary from its shot log."""

    run_dir: str = flag(short='r', required=True, description='Directory written by "run" or "qdrift".')


@command(flags=AuditFlags)
def cmd_audit(flags: FlagNamespace[Any]) -> int:
    """Checks that every number in a run summary follows from the shot log."""
    report = audit(flags.run_dir)

    rows = [
        (key, (report.stored or {}).get(key), value, 'MISMATCH' if key in report.mismatches else 'ok')
        for key, value in report.recomputed.items()
    ]
    print(tabulate(rows, headers=('field', 'stored', 'recomputed', ''), floatfmt='.12g'))

    if not report.ok:
        log.error('Summary of %s disagrees with its shot log: %s', flags.run_dir, ', '.join(report.mismatches))
        return ExitCodes.numerical_failure
    return ExitCodes.success
