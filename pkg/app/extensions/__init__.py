from __future__ import annotations

import importlib
import os
import re
from pathlib import Path
from typing import Any, TYPE_CHECKING

import config
from app.core.flags import Flags, angle, flag, store_true
from app.core.helpers import BadArgument
from app.core.models import RunConfig
from app.data.presets import Presets
from app.features.simulator import NoiseModel

if TYPE_CHECKING:
    from app.core.flags import FlagNamespace

__all__ = (
    'ConfigFlags',
    'load_extensions',
    'load_run_config',
    'default_run_dir',
)

SLUG_REGEX: re.Pattern[str] = re.compile(r'[^a-z0-9]+')


def load_extensions() -> list[str]:
    """Imports every subcommand module so that it registers itself."""
    loaded = []
    for file in sorted(os.listdir(Path(__file__).parent)):
        if not file.startswith('_') and file.endswith('.py'):
            importlib.import_module(f'app.extensions.{file[:-3]}')
            loaded.append(file[:-3])
    return loaded


class ConfigFlags(Flags):
    """Flags shared by every command that runs an experiment."""

    config_path: str = flag(name='config', short='c', description='Path to a JSON run configuration.')
    preset: str = flag(short='p', description='Name of a bundled configuration.')
    T: float = flag(name='time', short='T', converter=angle, description='Total evolution time.')
    N: int = flag(name='steps', short='N', description='Number of product-formula steps.')
    delta: float = flag(short='d', converter=angle, description='Fixed rotation angle, e.g. pi/128.')
    Q: float = flag(name='q', short='Q', description='Log-overhead trade-off parameter (replaces delta).')
    shots: int = flag(short='s', description='Number of sampled circuits.')
    observable: str = flag(short='o', description='Pauli observable, e.g. "X0" or "Z0 Z1".')
    initial_state: str = flag(short='i', description='"plus_all", "zero" or a bitstring.')
    mode: str = flag(short='m', description='sampled_shot or per_circuit_expectation.')
    seed: int = flag(description='Master seed.')
    workers: int = flag(short='w', description='Worker processes.')
    output: str = flag(description='Output path.')
    noise: bool = store_true(description='Enable depolarizing noise.')
    p1: float = flag(description='Single-qubit depolarizing probability.')
    p2: float = flag(description='Multi-qubit depolarizing probability.')


def load_run_config(flags: FlagNamespace[Any]) -> RunConfig:
    """Builds a RunConfig from ``--config`` or ``--preset`` and applies the remaining flags on top."""
    if flags.config_path and flags.preset:
        raise BadArgument('--config and --preset are mutually exclusive', field='config')

    if flags.config_path:
        cfg = RunConfig.from_file(flags.config_path)
    elif flags.preset:
        cfg = RunConfig.from_file(Presets.get(flags.preset).path)
    else:
        raise BadArgument('one of --config or --preset is required', field='config')

    noise = cfg.noise
    if flags.noise or flags.p1 is not None or flags.p2 is not None:
        noise = NoiseModel(
            p1=noise.p1 if flags.p1 is None else flags.p1,
            p2=noise.p2 if flags.p2 is None else flags.p2,
            enabled=noise.enabled or flags.noise,
        )

    return cfg.with_overrides(
        T=flags.T,
        N=flags.N,
        delta=flags.delta,
        Q=flags.Q,
        shots=flags.shots,
        observable=flags.observable,
        initial_state=flags.initial_state,
        mode=flags.mode,
        seed=flags.seed,
        workers=flags.workers,
        output=flags.output,
        noise=noise if noise != cfg.noise else None,
    )


def default_run_dir(cfg: RunConfig, command: str) -> Path:
    if cfg.output:
        return Path(cfg.output)

    label = SLUG_REGEX.sub('-', cfg.hamiltonian.label.lower()).strip('-')
    return Path(config.output_dir) / f'{command}-{label}-seed{cfg.seed}'
