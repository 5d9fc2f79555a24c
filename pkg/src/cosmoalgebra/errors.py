"""Exception types shared across the package."""


class CosmoAlgebraError(Exception):
    """Base class for all package errors."""


class ZeroDenominator(CosmoAlgebraError):
    pass


class ZeroPolynomial(CosmoAlgebraError):
    pass


class NotSquare(CosmoAlgebraError):
    pass


class VariableMismatch(CosmoAlgebraError):
    pass


class InvalidSubgraph(CosmoAlgebraError):
    pass


class NonPositivePoint(CosmoAlgebraError):
    pass


class DivergentParameters(CosmoAlgebraError):
    pass


class MissingTableEntry(CosmoAlgebraError):
    pass


class DimensionMismatch(CosmoAlgebraError):
    pass


class DegeneratePoint(CosmoAlgebraError):
    pass


class RankNotDetermined(CosmoAlgebraError):
    pass


class NotSolvable(CosmoAlgebraError):
    pass


class SingularGauge(CosmoAlgebraError):
    pass


class ParseError(CosmoAlgebraError):
    def __init__(self, message, line=1, column=0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnknownVariable(ParseError):
    pass
