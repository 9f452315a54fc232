"""Exception types raised by the qflow modules."""

from typing import Optional


class QFlowError(Exception):
    """Base class for every error raised by qflow."""


class NodeError(QFlowError):
    """Density fell below the floor where hydrodynamic fields are defined."""


class DomainError(QFlowError, ValueError):
    """An argument lies outside the domain of an operation."""


class ArityError(QFlowError, ValueError):
    """A model has the wrong number of components for an operation."""


class OverflowGuard(QFlowError, OverflowError):
    """A series term or wave value is not representable."""


class SingularityError(QFlowError, ZeroDivisionError):
    """A closed-form expression hit its singular denominator."""


class MissingArtifact(QFlowError, FileNotFoundError):
    """A manifest refers to an artifact that was never written."""


class _LocatedError(QFlowError):
    def __init__(
        self,
        message: str,
        key: Optional[str] = None,
        line: Optional[int] = None,
        suggestion: Optional[str] = None,
    ):
        self.message = message
        self.key = key
        self.line = line
        self.suggestion = suggestion
        super().__init__(str(self))

    def __str__(self) -> str:
        parts = []
        if self.line is not None:
            parts.append(f"line {self.line}")
        if self.key:
            parts.append(f"key '{self.key}'")
        where = f" ({', '.join(parts)})" if parts else ""
        hint = f"; did you mean '{self.suggestion}'?" if self.suggestion else ""
        return f"{self.message}{where}{hint}"


class ParseError(_LocatedError):
    """Config text is not valid TOML."""


class ValidationError(_LocatedError):
    """Config parsed but a value or key is not acceptable."""


class ConvergenceWarning(UserWarning):
    """A sampled measurement changed more than allowed under refinement."""
