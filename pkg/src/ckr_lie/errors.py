"""Exception hierarchy shared by all modules."""


class CkrLieError(Exception):
    """Base class for every error raised by this package."""


class ParseError(CkrLieError, ValueError):
    """Syntax error in an expression string; ``offset`` is a byte offset."""

    def __init__(self, message: str, offset: int, text: str = ""):
        self.message = message
        self.offset = offset
        self.text = text
        super().__init__(f"{message} (at byte offset {offset})")


class ExprDomainError(CkrLieError, ArithmeticError):
    """An expression node is undefined at ``x`` (log of non-positive, ...)."""

    def __init__(self, kind: str, x: float):
        self.kind = kind
        self.x = x
        super().__init__(f"{kind} at x={x!r}")


class InvariantError(CkrLieError, ValueError):
    """A model or configuration invariant does not hold.

    ``invariant`` names the violated condition so the CLI can report it.
    """

    def __init__(self, invariant: str, message: str):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")


class ChartDomainError(CkrLieError, ValueError):
    """A geometric quantity was requested on the p1 = 0 axis."""


class NumericalError(CkrLieError, RuntimeError):
    """An iterative or integration procedure failed."""

    def __init__(self, message: str, x: float | None = None):
        self.x = x
        super().__init__(message if x is None else f"{message} at x={x!r}")
