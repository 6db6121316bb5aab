"""Exception types raised across the package."""


class RPCAError(ValueError):
    """Base class for all validation and numerical errors in rpca_dswl."""


class EmptyMatrix(RPCAError):
    pass


class NonFiniteEntry(RPCAError):
    def __init__(self, row, col):
        super().__init__(f"non-finite entry at row {row}, column {col}")
        self.row = row
        self.col = col


class DimensionMismatch(RPCAError):
    pass


class LengthMismatch(DimensionMismatch):
    pass


class InvalidWeights(RPCAError):
    pass


class InvalidModel(RPCAError):
    pass


class InvalidConfig(RPCAError):
    pass


class NotSymmetric(RPCAError):
    pass


class RankRequestTooLarge(RPCAError):
    pass


class ConvergenceFailure(RPCAError):
    def __init__(self, iterations, message=None):
        super().__init__(message or f"no convergence after {iterations} iterations")
        self.iterations = iterations


class NonPositiveTau(RPCAError):
    pass


class DegenerateData(RPCAError):
    pass


class InvalidP(RPCAError):
    pass


class InvalidCorrelation(RPCAError):
    pass


class FractionOutOfRange(RPCAError):
    pass


class ShapeMismatch(RPCAError):
    pass


class ParseError(RPCAError):
    def __init__(self, message, line=None, file=None):
        where = []
        if file is not None:
            where.append(str(file))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.file = file


class InconsistentDimensions(RPCAError):
    pass


class TooFewSamples(RPCAError):
    pass


class DegenerateMask(RPCAError):
    pass
