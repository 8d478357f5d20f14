"""Exception hierarchy.

Two broad classes matter for the command line front end: precondition
violations (a run was asked for outside the regime where the model is
defined) and numeric failures (the truncated basis or a matrix size cannot
support the request). Everything derives from ``TriwellError``.
"""


class TriwellError(Exception):
    """Base class for all errors raised by this package."""


class PreconditionError(TriwellError):
    """A physics precondition of the requested operation is not met."""


class NumericError(TriwellError):
    """The computation cannot be carried out at the requested precision."""


class ConfigError(TriwellError):
    """Invalid run configuration (bad key, unparsable value, bad schema)."""


class ShapeMismatch(PreconditionError, ValueError):
    """Operands live in incompatible Fock spaces (modes or cutoff differ)."""


class CutoffTooSmall(NumericError):
    """Truncation leakage exceeds the configured bound for this state."""


class DegenerateSuperposition(PreconditionError):
    """The requested superposition has (numerically) zero norm."""


class ZeroProbabilityBranch(NumericError):
    """A conditional state was requested for an outcome of ~zero probability."""


class FrequencyConditionViolated(PreconditionError):
    """Mode frequency and collision rate do not satisfy the required ratio."""


class DimensionTooLarge(NumericError):
    """Dense-matrix oracle refused: the full Hilbert space exceeds the cap."""


class ValidityDomainExceeded(PreconditionError):
    """Perturbative formula evaluated outside its validity domain."""


class AmbiguousSupport(PreconditionError):
    """Phase discrimination requested for branches that are not distinguishable."""


class ZeroImaginaryPart(PreconditionError):
    """Virtual displacement undefined: reference amplitude is purely real."""


class NonMonotoneTime(PreconditionError):
    """Schedule time samples are not strictly increasing."""


class RangeError(PreconditionError, ValueError):
    """A probability or similar bounded quantity is outside its range."""
