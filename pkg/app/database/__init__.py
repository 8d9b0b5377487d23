from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from logging import getLogger
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence, TYPE_CHECKING

from app.core.helpers import BadArgument
from app.util.structures import ShotAccumulator

if TYPE_CHECKING:
    from app.features.simulator import EstimatorResult, ShotRecord

__all__ = (
    'RunStore',
    'AuditReport',
    'audit',
    'dump_json',
    'write_csv',
)

log = getLogger(__name__)

HEADER_FILE = 'header.json'
SHOTS_FILE = 'shots.jsonl'
SUMMARY_FILE = 'summary.json'
# Wall-clock data is kept out of the summary so that summaries are reproducible byte for byte
TIMING_FILE = 'timing.json'


def dump_json(data: Any, *, indent: int | None = 2) -> str:
    return json.dumps(data, sort_keys=True, indent=indent, allow_nan=False, separators=None if indent else (',', ':'))


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> Path:
    """Writes ``rows`` with a header line; an empty ``rows`` still produces the header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as fp:
        writer = csv.DictWriter(fp, fieldnames=list(columns), extrasaction='ignore', lineterminator='\n')
        writer.writeheader()
        writer.writerows(rows)
    return path


class RunStore:
    """The artifact directory of one run: header, JSON-lines shot log, summary."""

    def __init__(self, directory: str | Path) -> None:
        self.directory: Path = Path(directory)

    def _path(self, name: str) -> Path:
        return self.directory / name

    @property
    def header_path(self) -> Path:
        return self._path(HEADER_FILE)

    @property
    def shots_path(self) -> Path:
        return self._path(SHOTS_FILE)

    @property
    def summary_path(self) -> Path:
        return self._path(SUMMARY_FILE)

    def prepare(self) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        # a rerun into the same directory starts a fresh shot log
        self.shots_path.unlink(missing_ok=True)
        self.summary_path.unlink(missing_ok=True)

    def write_header(self, header: Mapping[str, Any]) -> Path:
        self.prepare()
        self.header_path.write_text(dump_json(header) + '\n')
        log.info('Wrote run header to %s', self.header_path)
        return self.header_path

    def append_shots(self, records: Iterable[ShotRecord]) -> int:
        count = 0
        with self.shots_path.open('a') as fp:
            for record in records:
                fp.write(dump_json(record.to_json(), indent=None) + '\n')
                count += 1
        return count

    def write_summary(self, result: EstimatorResult, **extra: Any) -> Path:
        summary = {**result.to_json(), 'nu_mean': result.nu_mean, **extra}
        self.summary_path.write_text(dump_json(summary) + '\n')
        log.info('Wrote run summary to %s', self.summary_path)
        return self.summary_path

    def write_timing(self, wall_time: float, workers: int) -> Path:
        path = self._path(TIMING_FILE)
        path.write_text(dump_json({'wall_time': wall_time, 'workers': workers}) + '\n')
        return path

    def read_header(self) -> dict[str, Any]:
        return self._read(self.header_path)

    def read_summary(self) -> dict[str, Any] | None:
        return self._read(self.summary_path) if self.summary_path.exists() else None

    def iter_shots(self) -> Iterator[dict[str, Any]]:
        if not self.shots_path.exists():
            return

        with self.shots_path.open() as fp:
            for lineno, line in enumerate(fp, start=1):
                if not line.strip():
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError as exc:
                    raise BadArgument(f'{self.shots_path}:{lineno}: corrupt shot record ({exc.msg})') from exc

    @staticmethod
    def _read(path: Path) -> dict[str, Any]:
        if not path.is_file():
            raise BadArgument(f'{path} does not exist', field='run_dir')
        return json.loads(path.read_text())

    def __repr__(self) -> str:
        return f'<RunStore directory={str(self.directory)!r}>'


@dataclass(frozen=True)
class AuditReport:
    recomputed: dict[str, Any]
    stored: dict[str, Any] | None
    mismatches: dict[str, tuple[Any, Any]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def audit(run_dir: str | Path) -> AuditReport:
    """Recomputes every summary number from the shot log and compares it with the stored summary."""
    store = RunStore(run_dir)
    header = store.read_header()

    acc = ShotAccumulator()
    nus = []
    indices = []
    for record in store.iter_shots():
        acc.add(record['value'])
        nus.append(record['nu'])
        indices.append(record['index'])

    if indices != sorted(indices) or len(set(indices)) != len(indices):
        log.warning('Shot log of %s is out of order or has duplicate indices', run_dir)

    recomputed: dict[str, Any] = {'shots': acc.count}
    if acc.count:
        recomputed |= {
            'mean': acc.mean,
            'std_error': acc.std_error,
            'nu_mean': math.fsum(nus) / len(nus),
            'mode': header.get('config', {}).get('mode'),
        }

    stored = store.read_summary()
    mismatches = {}
    if stored is not None:
        for key, value in recomputed.items():
            if stored.get(key) != value:
                mismatches[key] = (stored.get(key), value)
    elif acc.count:
        mismatches['summary'] = (None, 'missing')

    return AuditReport(recomputed, stored, mismatches)
