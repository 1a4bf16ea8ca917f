"""Exception hierarchy shared by all fisherctl modules."""


class FisherctlError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(FisherctlError, ValueError):
    """Operands have incompatible matrix or Hilbert-space dimensions."""


class InvariantViolation(FisherctlError, ValueError):
    """A value failed one of its structural invariants (Hermiticity,
    positivity, normalization, finiteness)."""


class SingularContribution(FisherctlError, ValueError):
    """An outcome has (numerically) zero probability but a non-negligible
    probability derivative, so its Fisher-information contribution is
    genuinely singular and cannot be silently dropped."""


class PropagationError(FisherctlError, RuntimeError):
    """Numerical propagation produced a state violating its invariants."""
