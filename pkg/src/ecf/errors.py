"""Exception hierarchy.

``ValidationError`` subclasses signal bad input (CLI exit code 1); everything
else that escapes is treated as a runtime failure (exit code 2).
"""


class EcfError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(EcfError, ValueError):
    """Input data or configuration violates a documented contract."""


class DimensionMismatch(ValidationError):
    def __init__(self, what: str, expected: int, actual: int):
        self.what = what
        self.expected = expected
        self.actual = actual
        super().__init__(f"dimension mismatch on {what}: expected {expected}, got {actual}")


class NonFiniteValue(ValidationError):
    def __init__(self, row: int, column: int, where: str = "values"):
        self.row = row
        self.column = column
        super().__init__(f"non-finite entry in {where} at row {row}, column {column}")


class EmptyClass(ValidationError):
    def __init__(self, label: int):
        self.label = label
        super().__init__(f"class label {label} has no members")


class DegenerateInput(ValidationError):
    """Statistic is undefined for the given input (e.g. constant sequence)."""


class BothEmpty(ValidationError):
    def __init__(self):
        super().__init__("Jaccard index is undefined for two empty sets")


class DuplicateInitialCentroids(ValidationError):
    def __init__(self, first: int, second: int):
        self.first = first
        self.second = second
        super().__init__(f"initial centroids {first} and {second} are identical")


class EmptyInput(ValidationError):
    pass


class TooManyFeatures(ValidationError):
    def __init__(self, m: int, limit: int):
        super().__init__(f"exact Shapley refuses m={m} features (limit {limit})")


class AllPredictionsEqual(ValidationError):
    def __init__(self):
        super().__init__("cannot bin predictions: all values are equal")


class ClassTooSmall(ValidationError):
    def __init__(self, label: int, count: int, fraction: float):
        self.label = label
        super().__init__(
            f"class {label} has {count} members; fraction {fraction} selects fewer than one"
        )


class RankDeficient(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, path, line: int, column: int, token: str):
        self.path = path
        self.line = line
        self.column = column
        self.token = token
        super().__init__(f"{path}: line {line}, column {column}: cannot parse {token!r}")


class EmptyFile(ValidationError):
    def __init__(self, path):
        self.path = path
        super().__init__(f"{path}: no data rows")


class SchemaMismatch(ValidationError):
    pass


class ExplainerFailure(EcfError, RuntimeError):
    def __init__(self, row: int, message: str):
        self.row = row
        super().__init__(f"explainer failed on row {row}: {message}")


class DegenerateWeights(EcfError, RuntimeError):
    def __init__(self):
        super().__init__("all surrogate kernel weights underflowed (< 1e-300)")
