"""Exception hierarchy shared by every module."""


class GRVError(Exception):
    """Base class for all package errors."""


class ValidationError(GRVError, ValueError):
    """Input does not satisfy a structural precondition."""


class DimensionError(ValidationError):
    """Matrix shapes are incompatible or too small."""


class DegenerateInputError(GRVError, ValueError):
    """Input is well formed but carries no usable variation (zero norm, zero variance)."""


class NumericError(GRVError, ArithmeticError):
    """A numerical routine failed or would be unreliable."""


class BudgetError(GRVError, ValueError):
    """A requested computation exceeds its enumeration budget."""
