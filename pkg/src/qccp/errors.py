"""Exception hierarchy shared across the package."""


class QccpError(Exception):
    """Base class for all errors raised by this package."""


class InstanceInfeasible(QccpError):
    """The graph admits no cycle cover."""


class LimitExceeded(QccpError):
    """An enumeration produced more results than the caller allowed."""


class TooLarge(QccpError):
    """Input too large for an exhaustive routine."""


class GenerationFailed(QccpError):
    """A random generator could not produce a feasible instance."""


class ParseError(QccpError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ValidationError(QccpError):
    """Instance data is well-formed but violates a structural rule."""


class RankDeficient(QccpError):
    """Numerical rank lower than the construction guarantees."""


class NoConvergence(QccpError):
    """An iterative numerical routine hit its iteration cap."""


class Infeasible(QccpError):
    """An optimization subproblem has no feasible point."""


class NoFeasibleExtension(QccpError):
    """Randomized rounding exhausted its resampling budget."""


class W0NearZero(QccpError):
    """Leading Perron entry vanished; the SDP iterate is badly converged."""


class RoundBudgetExceeded(QccpError):
    """Oversampling did not reach a 2-factor within its round budget."""


class EmptyPool(QccpError):
    """No cycle was ever constructed."""
