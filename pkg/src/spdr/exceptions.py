"""Exception hierarchy shared by all spdr modules."""


class SpdrError(Exception):
    """Base class for every error raised by spdr."""


class DataError(SpdrError, ValueError):
    """Input data is malformed: wrong shapes, bad labels, invalid matrices."""


class NumericalError(SpdrError, ArithmeticError):
    """A numerical routine failed or produced an unusable result."""


class NotSquareError(DataError):
    pass


class AsymmetryError(DataError):
    pass


class NotPositiveDefiniteError(DataError):
    pass


class DimMismatchError(DataError):
    pass


class MatrixOverflowError(NumericalError):
    pass


class MetricUnsupportedError(SpdrError, ValueError):
    pass


class InvalidParameterError(SpdrError, ValueError):
    pass


class MissingLabelsError(DataError):
    pass


class ClassTooSmallError(DataError):
    pass


class RankDeficientError(DataError):
    pass


class TooFewObservationsError(DataError):
    pass


class SingularProjectedMatrixError(NumericalError):
    """W^T X W lost positive definiteness, usually a sign of rank collapse."""


class EigFailureError(NumericalError):
    pass


class NoConvergenceError(NumericalError):
    """An iterative solver ran out of iterations.

    The best iterate found so far is kept on ``best`` so callers can still
    use it.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class InvalidKError(InvalidParameterError):
    pass


class LengthMismatchError(DataError):
    pass


class FormatError(DataError):
    """A bundle or projection file does not follow the binary layout."""


class ConfigError(InvalidParameterError):
    pass
