"""Exception hierarchy shared across the toolkit."""


class ArenaError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(ArenaError):
    """Dimension or probability-vector mismatch."""


class GridError(ArenaError):
    """Value is off the bid grid, or the grid is too small/coarse."""


class ParameterError(ArenaError):
    """Parameter outside its admissible range."""


class HorizonError(ArenaError):
    """Stepping a learner or simulation past its horizon."""


class DomainError(ArenaError):
    """Input outside a function's mathematical domain."""


class ConfigError(ArenaError):
    """Scenario configuration is malformed (CLI exit code 2)."""


class NumericError(ArenaError):
    """A numerical routine stalled or lost too much precision (CLI exit code 3)."""
