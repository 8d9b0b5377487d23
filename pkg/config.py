from os import getenv as env

import psutil
from dotenv import load_dotenv

load_dotenv()

__all__ = (
    'name',
    'version',
    'description',
    'dense_limit',
    'statevector_limit',
    'pair_limit',
    'default_workers',
    'default_seed',
    'output_dir',
    'log_level',
    'ExitCodes',
)

name: str = 'tepai'
version: str = '0.1.0'
description: str = (
    'Randomized fixed-angle circuits whose sign-weighted averages reproduce exact Hamiltonian time evolution.'
)

# Largest qubit count for which dense 2^n x 2^n matrices are built (oracles, spectral commutator norms)
dense_limit: int = int(env('TEPAI_DENSE_LIMIT', 12))
# 2^24 complex doubles plus workspace is roughly the 16 GiB ceiling
statevector_limit: int = int(env('TEPAI_STATEVECTOR_LIMIT', 24))
# Maximum number of terms for O(L^2) Pauli-pair computations
pair_limit: int = int(env('TEPAI_PAIR_LIMIT', 5000))

default_workers: int = int(env('TEPAI_WORKERS', 0)) or psutil.cpu_count(logical=False) or 1
default_seed: int = int(env('TEPAI_SEED', 0))
output_dir: str = env('TEPAI_OUTPUT_DIR', 'runs')
log_level: str = env('TEPAI_LOG_LEVEL', 'INFO')


class ExitCodes:
    success: int = 0
    validation: int = 2
    resource_limit: int = 3
    numerical_failure: int = 4
