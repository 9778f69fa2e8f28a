"""Exception hierarchy.

The CLI maps these onto exit codes: ``ConfigError`` -> 2, ``DataError``
(and subclasses) -> 3, ``InvariantError`` -> 4.
"""


class StockGridError(Exception):
    """Base class for all package errors."""


class ConfigError(StockGridError):
    """Invalid or inconsistent run configuration."""


class DataError(StockGridError):
    """Input data is malformed or violates a documented contract."""


class ParseError(DataError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class StructuralError(DataError):
    """Wrong length, gaps, missing keys or misaligned series."""


class ValidationError(DataError):
    """A value lies outside its documented physical range."""


class InvariantError(StockGridError):
    """An internal consistency check failed."""
