"""Exception hierarchy. The CLI maps these onto exit codes."""
from __future__ import annotations



class MMFieldError(Exception):
    """Base class for library errors."""


class ValidationError(MMFieldError, ValueError):
    """Input violates a structural invariant (shape, axiom, Lipschitz bound)."""


class InfeasibleError(MMFieldError):
    """A transport or extension problem has no feasible solution."""


class SizeLimitError(MMFieldError):
    """An exact/brute-force routine was asked to run beyond its size limit."""


class InputFormatError(MMFieldError):
    """A JSON input is malformed or ambiguous; ``line``/``col`` locate parse errors."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)
        self.line = line
        self.col = col
