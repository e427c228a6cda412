"""Exception hierarchy shared across the package."""


class FloodRiskError(Exception):
    """Base class for every error raised by floodrisk."""


class GridFormatError(FloodRiskError, ValueError):
    """An ASCII grid file could not be parsed."""


class HeaderError(GridFormatError):
    def __init__(self, key, message):
        self.key = key
        super().__init__(f"header key {key!r}: {message}")


class CellCountError(GridFormatError):
    def __init__(self, expected, found):
        self.expected = expected
        self.found = found
        super().__init__(f"cell count mismatch: expected {expected}, found {found}")


class TokenError(GridFormatError):
    def __init__(self, token, row, col):
        self.token = token
        self.row = row
        self.col = col
        super().__init__(f"non-numeric token {token!r} at row {row}, col {col}")


class AlignmentError(FloodRiskError, ValueError):
    """Two grids that must share a lattice do not."""


class RoutingError(FloodRiskError):
    """Flow directions contain a cycle."""


class DelineationError(FloodRiskError):
    """Sub-watersheds could not be delineated."""


class DomainError(FloodRiskError, ValueError):
    """An input value lies outside the domain of a ranking."""


class ClassificationError(FloodRiskError, ValueError):
    """Input cannot be classified (unknown code or too few distinct values)."""


class ConfigurationError(FloodRiskError, ValueError):
    """A run was configured inconsistently."""


class ConvergenceError(FloodRiskError, ArithmeticError):
    """An iterative numeric routine failed to converge."""
