"""Exception hierarchy shared across the package."""

import numpy as np


class NGDLabError(Exception):
    """Base class for all package errors."""


class ShapeError(NGDLabError, ValueError):
    pass


class NumericError(NGDLabError, ArithmeticError):
    """Raised when a computation produced NaN/Inf."""


class SingularMatrixError(NGDLabError, np.linalg.LinAlgError):
    pass


class CapacityError(NGDLabError, MemoryError):
    """Raised when a dense p x p allocation would exceed the configured cap."""


class StateError(NGDLabError, RuntimeError):
    pass


class DataError(NGDLabError, ValueError):
    pass


class SearchError(NGDLabError, RuntimeError):
    pass
