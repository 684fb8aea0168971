"""Exception hierarchy shared by every module."""


class WirecalcError(Exception):
    """Base class for library errors."""


# core
class InvalidPoint(WirecalcError, ValueError):
    pass


class NotEnumerable(WirecalcError, TypeError):
    pass


class IndexOutOfRange(WirecalcError, IndexError):
    pass


class MixedPortKinds(WirecalcError, TypeError):
    pass


class TypeMismatch(WirecalcError, TypeError):
    pass


# wiring
class BoxMismatch(WirecalcError, ValueError):
    pass


class NotDifferentiable(WirecalcError, TypeError):
    pass


class WrongInterpretation(WirecalcError, TypeError):
    pass


# semirings and matrices
class ArithmeticOverflow(WirecalcError, OverflowError):
    pass


class ShapeMismatch(WirecalcError, ValueError):
    pass


class SizeCapExceeded(WirecalcError, MemoryError):
    pass


class TraceTypeMismatch(WirecalcError, TypeError):
    pass


class DisjointnessViolation(WirecalcError, ValueError):
    pass


# expressions and continuous systems
class ExprSyntaxError(WirecalcError, SyntaxError):
    def __init__(self, message, line=1, col=1):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.bare_message = message


class UnknownFunction(ExprSyntaxError):
    pass


class MissingVariable(WirecalcError, KeyError):
    def __str__(self):
        return f"missing variable {self.args[0]!r}"


class NonFiniteResult(WirecalcError, ArithmeticError):
    pass


class InvalidEpsilon(WirecalcError, ValueError):
    pass


class NotAffine(WirecalcError, ValueError):
    pass


# linear
class SizeUnsupported(WirecalcError, ValueError):
    pass


class NumericalFailure(WirecalcError, ArithmeticError):
    pass


class IncompleteSystem(WirecalcError, ValueError):
    """A transition or readout table is not total or not consistent."""
