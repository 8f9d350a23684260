"""Exception hierarchy shared across jetcalc."""


class JetcalcError(Exception):
    pass


class ExprSyntaxError(JetcalcError, ValueError):
    """Malformed expression text; ``pos`` is the 0-based character offset."""

    def __init__(self, pos: int, message: str, src: str = ""):
        self.pos = pos
        self.message = message
        self.src = src
        super().__init__(f"SyntaxError at position {pos}: {message}")


class UnknownIdentifier(JetcalcError, ValueError):
    def __init__(self, name: str, pos: int = -1):
        self.name = name
        self.pos = pos
        super().__init__(f"UnknownIdentifier: {name!r}")


class MissingVariable(JetcalcError, KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"MissingVariable: {name!r}")

    def __str__(self):
        return self.args[0]


class DomainError(JetcalcError, ArithmeticError):
    def __init__(self, message: str, point=None):
        self.point = point
        super().__init__(message)


class CapExceeded(JetcalcError, ValueError):
    pass


class ChartMismatch(JetcalcError, ValueError):
    pass


class DegreeOverflow(JetcalcError, ValueError):
    pass


class ZeroDegree(JetcalcError, ValueError):
    pass


class StrayCoordinate(JetcalcError, ValueError):
    def __init__(self, names):
        self.names = tuple(sorted(names))
        super().__init__(f"StrayCoordinate: {', '.join(self.names)} not in the J1E chart")


class NotASection(JetcalcError, ValueError):
    pass


class SingularHessian(JetcalcError, ArithmeticError):
    def __init__(self, point, rank: int):
        self.point = dict(point)
        self.rank = rank
        super().__init__(f"SingularHessian: rank {rank} at {self.point}")


class NoConvergence(JetcalcError, ArithmeticError):
    def __init__(self, point, residual: float, iterations: int):
        self.point = dict(point)
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"NoConvergence: residual {residual:.3e} after {iterations} iterations"
        )
