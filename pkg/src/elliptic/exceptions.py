"""Error types raised by the solvers."""


class EllipticError(Exception):
    """Base class; the CLI reports ``type(err).__name__`` on failure."""


class NotCoercive(EllipticError):
    pass


class NoConvergence(EllipticError):
    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class MaxIterExceeded(NoConvergence):
    pass


class SingularJacobian(EllipticError):
    pass


class UnknownName(EllipticError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ParamOutOfRange(EllipticError, ValueError):
    pass


class GrowthBoundUnavailable(EllipticError):
    pass


class EpsilonExhausted(EllipticError):
    pass


class OrderingViolated(EllipticError):
    pass


class NoFold(EllipticError):
    pass


class StepCollapse(EllipticError):
    pass


class PathCollapsed(EllipticError):
    pass


class NoMountainGeometry(EllipticError):
    pass


class OrderingFailed(EllipticError):
    pass
