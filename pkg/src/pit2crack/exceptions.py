"""Exception hierarchy. The CLI maps these onto exit codes."""


class Pit2CrackError(Exception):
    """Base class for all errors raised by the package."""


class MaterialError(Pit2CrackError, ValueError):
    """A material record violates one of its bounds."""


class ConfigError(Pit2CrackError, ValueError):
    """Invalid generator or analysis configuration.

    ``path`` is the JSON-style location of the offending field, when known.
    """

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class GenerationError(Pit2CrackError):
    pass


class DimensionError(Pit2CrackError, ValueError):
    pass


class ParseError(Pit2CrackError, ValueError):
    def __init__(self, message, row=None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class GeometryError(Pit2CrackError, ValueError):
    pass


class MorrowDomainError(Pit2CrackError, ValueError):
    """Mean normal stress at or above the fatigue strength coefficient."""


class ConvergenceError(Pit2CrackError, ArithmeticError):
    pass
