"""Exception hierarchy.

Every error raised by the library derives from :class:`TwoGridError`.
Errors that signal a violated hypothesis of one of the convergence
results derive from :class:`HypothesisError`; the CLI maps those to
exit status 3.
"""


class TwoGridError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(TwoGridError, ValueError):
    pass


class InvalidDimension(TwoGridError, ValueError):
    pass


class InvalidCondition(TwoGridError, ValueError):
    pass


class InvalidRank(TwoGridError, ValueError):
    """Coarse rank outside ``1 <= r < n``."""


class IncompatibleShape(TwoGridError, ValueError):
    pass


class ParseError(TwoGridError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(TwoGridError, ValueError):
    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class HypothesisError(TwoGridError, ArithmeticError):
    """An input fails a precondition of a theorem being applied."""


class NotHermitian(HypothesisError):
    pass


class NotPositiveDefinite(HypothesisError):
    pass


class RankDeficient(HypothesisError):
    pass


class NoComplement(HypothesisError):
    pass


class SingularA(HypothesisError):
    pass


class SingularCoarseMatrix(HypothesisError):
    pass


class SingularRXP(HypothesisError):
    pass


class SingularComplementGram(HypothesisError):
    pass


class SingularX(HypothesisError):
    pass


class SingularSmoother(HypothesisError):
    pass


class ZeroDiagonal(HypothesisError):
    pass


class NotAConvergent(HypothesisError):
    """``M + M^H - A`` is not positive definite."""


class NotConvergent(HypothesisError):
    """``rho(I - M^{-1} A) >= 1``."""


class SmootherNotDominating(HypothesisError):
    """``M - A`` is not positive definite."""


class HypothesisViolated(HypothesisError):
    pass


class SolverError(TwoGridError, RuntimeError):
    """Iterative solve did not reach tolerance; ``result`` holds the best iterate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class MaxIterExceeded(SolverError):
    pass


class Diverged(SolverError):
    pass
