"""Exception hierarchy with stable machine-readable codes.

Every error raised by the engine maps to exactly one code so the HTTP
layer and CLI can translate failures without string matching.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base error. `code` is stable across releases; `field` names the offending input."""

    code = "internal_error"

    def __init__(self, message: str, *, field: str | None = None):
        super().__init__(message)
        self.field = field

    @property
    def message(self) -> str:
        return str(self)


class ValidationError(EngineError):
    code = "validation_error"


class NotFoundError(EngineError):
    code = "not_found"


class StateError(EngineError):
    """Operation not allowed in the entity's current lifecycle state."""

    code = "conflict"


class BudgetExhaustedError(EngineError):
    code = "budget_exhausted"


class ConsentRequiredError(EngineError):
    code = "consent_required"


class CorruptLogError(EngineError):
    code = "corrupt_log"

    def __init__(self, message: str, *, seq: int | None = None):
        super().__init__(message)
        self.seq = seq
