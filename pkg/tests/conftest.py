from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Callable

import pytest

from app.core.hamiltonian import Hamiltonian, build_spin_ring


@pytest.fixture
def ring5() -> Hamiltonian:
    return build_spin_ring(5, seed=1)


@pytest.fixture
def two_qubit() -> Hamiltonian:
    """A small constant Hamiltonian with anticommuting terms."""
    return Hamiltonian.from_constants(2, [('X0', 0.8), ('Z0 Z1', -0.5), ('Y1', 0.3)])


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[..., Path]:
    """Writes a run configuration for a 5-qubit ring with the given overrides and returns its path."""

    written = 0

    def factory(**overrides: Any) -> Path:
        nonlocal written
        data = {
            'model': {'kind': 'spin_ring', 'n': 5, 'seed': 3},
            'T': 0.5,
            'N': 50,
            'delta': 'pi/32',
            'shots': 40,
            'observable': 'X0',
            'initial_state': 'plus_all',
            'seed': 11,
            'workers': 1,
        }
        data.update(overrides)
        # Each call gets its own file so earlier paths stay valid
        written += 1
        path = tmp_path / f'config{written}.json'
        path.write_text(json.dumps(data))
        return path

    return factory
