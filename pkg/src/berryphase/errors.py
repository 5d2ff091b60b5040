"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class BerryPhaseError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(BerryPhaseError, ValueError):
    """Invalid user-supplied configuration or arguments."""

    exit_code = 2


class NumericalPreconditionError(BerryPhaseError):
    """A numerical precondition (gap, adiabaticity, Trotter accuracy) failed."""

    exit_code = 3


class DegeneracyError(NumericalPreconditionError):
    """Ground state is degenerate or a gap closes where one must stay open."""


class AdiabaticityError(NumericalPreconditionError):
    """The register did not return to its initial state after the loop."""


class TrotterError(NumericalPreconditionError):
    """Trotterized propagator is too far from the exact one."""


class InvariantViolation(BerryPhaseError):
    """An internal invariant (norm, unitarity, normalization) was broken."""

    exit_code = 4
