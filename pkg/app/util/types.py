from __future__ import annotations

from typing import Literal, Sequence, TypeAlias

import numpy as np
import numpy.typing as npt

__all__ = (
    'FloatArray',
    'ComplexArray',
    'IntArray',
    'BoolArray',
    'Seed',
    'EstimatorMode',
    'SweepAxis',
)

FloatArray: TypeAlias = npt.NDArray[np.float64]
ComplexArray: TypeAlias = npt.NDArray[np.complex128]
IntArray: TypeAlias = npt.NDArray[np.int64]
BoolArray: TypeAlias = npt.NDArray[np.bool_]

# Anything numpy.random.default_rng accepts as entropy
Seed: TypeAlias = int | Sequence[int]

EstimatorMode: TypeAlias = Literal['sampled_shot', 'per_circuit_expectation']
SweepAxis: TypeAlias = Literal['T', 'delta', 'N']
