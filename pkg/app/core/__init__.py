from .helpers import (
    AnglePreconditionError,
    BadArgument,
    DimensionMismatch,
    HierarchyError,
    NumericalFailure,
    ResourceLimitError,
    TepaiError,
    TermFileError,
    UnsupportedConfiguration,
    command,
)
from .pauli import PauliString
