"""Exception hierarchy shared by all knotgas modules."""


class KnotGasError(Exception):
    """Base class for every error raised by this package."""


class InvalidGeometryError(KnotGasError, ValueError):
    pass


class DegenerateTopologyError(KnotGasError, ValueError):
    pass


class DomainError(KnotGasError, ValueError):
    """An argument lies outside the domain of a function."""


class DivergenceError(DomainError):
    """Bose statistics evaluated at or beyond the condensation point."""


class TruncationError(KnotGasError, ArithmeticError):
    """A level sum did not reach its tail bound before the hard cap."""


class BracketError(KnotGasError, ArithmeticError):
    pass


class ConvergenceError(KnotGasError, ArithmeticError):
    def __init__(self, message, residual=float("nan"), last=float("nan")):
        super().__init__(message)
        self.residual = residual
        self.last = last


class NoSolutionError(BracketError):
    pass


class ConfigError(KnotGasError, ValueError):
    pass
