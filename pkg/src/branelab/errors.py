"""Exception types raised across the package."""


class BranelabError(Exception):
    """Base class for all package errors."""


class DimensionError(BranelabError, ValueError):
    pass


class SignatureError(BranelabError, ValueError):
    pass


class NumericalError(BranelabError, ArithmeticError):
    pass


class DomainError(BranelabError, ValueError):
    """Raised when a root term has an inadmissible radicand.

    ``rank`` is the rank of the offending symmetric tensor term (if known),
    ``where`` carries extra location info such as a lattice cell.
    """

    def __init__(self, message, rank=None, where=None):
        super().__init__(message)
        self.rank = rank
        self.where = where


class DegenerateError(BranelabError, ValueError):
    pass


class BoundaryError(BranelabError, IndexError):
    pass


class IntegrationError(BranelabError, RuntimeError):
    pass


class GaugeError(BranelabError, ValueError):
    pass


class ConfigError(BranelabError, ValueError):
    """Scenario validation failure; ``path`` is the offending key path."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class ScenarioError(BranelabError, RuntimeError):
    """A downstream failure while running a named scenario."""

    def __init__(self, scenario, cause):
        super().__init__(f"scenario {scenario!r}: {type(cause).__name__}: {cause}")
        self.scenario = scenario
        self.cause = cause
