"""State-vector simulation of Berry-phase estimation circuits for the SSH model and a twisted Heisenberg ring."""

__version__ = "0.1.0"

from .errors import (
    AdiabaticityError,
    BerryPhaseError,
    ConfigError,
    DegeneracyError,
    InvariantViolation,
    NumericalPreconditionError,
    TrotterError,
)

__all__ = [
    "__version__",
    "AdiabaticityError",
    "BerryPhaseError",
    "ConfigError",
    "DegeneracyError",
    "InvariantViolation",
    "NumericalPreconditionError",
    "TrotterError",
]
