"""Exception types raised across the package."""


class CcfCompareError(ValueError):
    """Base class for input and numerical failures."""


class ValidationError(CcfCompareError):
    """Input data or configuration violates a documented precondition."""


class DegenerateError(CcfCompareError):
    """A statistic cannot be formed because the data carry no variability."""
