"""Exception hierarchy shared across the package."""


class BsufsError(ValueError):
    """Base class for all errors raised by bsufs."""


class DataError(BsufsError):
    pass


class NonFiniteEntry(DataError):
    def __init__(self, row, col):
        self.row, self.col = int(row), int(col)
        super().__init__(f"non-finite entry at ({self.row}, {self.col})")


class TooFewSamples(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ShapeMismatch(BsufsError):
    pass


class InvalidQ(BsufsError):
    pass


class InvalidP(BsufsError):
    pass


class NewtonNoConvergence(ArithmeticError):
    pass


class NotTangent(BsufsError):
    pass


class RankDeficient(ArithmeticError):
    pass


class BadFeatureCount(BsufsError):
    pass


class BadK(BsufsError):
    pass


class BadSpec(BsufsError):
    pass
