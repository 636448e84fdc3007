"""Exception types shared across the package.

Every failure mode that callers are expected to branch on gets its own class;
the CLI maps them to distinct exit codes.
"""


class PrlocusError(Exception):
    """Base class for all package errors."""


class ValidationError(PrlocusError):
    """Malformed input data (bad shapes, bad parameters)."""


class BadMultiplicity(ValidationError):
    """A polygon slope multiplicity has a denominator not dividing the granularity."""


class EndpointMismatch(ValidationError):
    """Two polygons with different widths or total heights were compared."""


class NotFree(ValidationError):
    """An ambient module failed the required freeness over its polynomial ring."""


class BudgetExceeded(PrlocusError):
    """A search or enumeration exceeded its configured budget."""

    def __init__(self, message, bound=None):
        super().__init__(message)
        self.bound = bound


class PrecisionExhausted(PrlocusError):
    """A p-adic quantity could not be certified below the precision ceiling."""


class PrecisionTooLow(ValidationError):
    """Requested precision is too small for the operation to be meaningful."""


class RelationViolated(ValidationError):
    """A crystal relation (FV = VF = p) failed at the working precision."""


class PairingViolated(ValidationError):
    """A supplied pairing failed antihermitian symmetry, perfectness, or adjunction."""


class NotDivisible(PrlocusError):
    """An exact division by a pi-power failed; indicates a profile or precision bug."""


class UnsupportedCase(PrlocusError):
    """The requested operation does not support this case tag (typically AR)."""


class StageDataInvalid(ValidationError):
    """Deformation stage data (the claimed maximal Frobenius order) failed its check."""


class AlreadyMinimal(PrlocusError):
    """The e=2 deformation step was asked to lower an already minimal profile."""
