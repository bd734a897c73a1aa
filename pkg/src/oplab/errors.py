"""Exception hierarchy shared across the package."""

from __future__ import annotations


class OplabError(Exception):
    """Base class for all package errors."""


class JetMismatchError(OplabError, ValueError):
    """Two jets with different centers or orders were combined."""


class PoleError(OplabError, ZeroDivisionError):
    """A series division hit a vanishing constant term."""


class DomainError(OplabError, ValueError):
    """A point left the open unit disk, or a parameter is outside its range."""


class ParseError(OplabError, ValueError):
    """Malformed expression or scenario input."""


class DeltaSystemError(OplabError, ArithmeticError):
    """The Pochhammer interpolation system could not be solved."""


class UnboundedOperatorError(OplabError):
    """An analysis that assumes boundedness was asked about an unbounded operator."""


class NonFiniteError(OplabError, FloatingPointError):
    """An evaluation produced inf or nan; carries the offending point."""

    def __init__(self, message: str, point: complex | None = None):
        super().__init__(message)
        self.point = point
