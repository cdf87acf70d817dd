"""Exception hierarchy shared across the package."""


class FwdVolError(Exception):
    """Base class for all package-specific errors."""


class DomainError(FwdVolError, ValueError):
    """Inputs outside the mathematical domain of an operation."""


class InversionRangeError(DomainError):
    """Ratio value outside the open range of the maturity map, so no rate exists."""


class DegenerateStatisticError(FwdVolError):
    """A ratio statistic has a (near-)zero denominator, e.g. identical price rows."""


class IllConditionedError(FwdVolError):
    """The 2x2 curve-separation system is numerically singular at some grid time."""


class ScoreDomainError(FwdVolError):
    """Score evaluation would divide by an underflowing cube denominator."""


class DataFormatError(FwdVolError):
    """Malformed input file; message carries the offending line number."""


class DataValidationError(FwdVolError):
    """Well-formed input whose values violate the data contract."""


class NumericalError(FwdVolError):
    """A downstream numerical step produced an unusable value (non-positive variance, ...)."""
