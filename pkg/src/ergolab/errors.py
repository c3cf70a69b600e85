"""Exception types shared across modules."""

from __future__ import annotations


class NonSingularError(ValueError):
    """Operation needs a certified non-singular family and none was given."""


class ToleranceError(ValueError):
    """Requested truncation tolerance is unachievable within the coordinate cap."""


class CertifiedFailure(RuntimeError):
    """A search certifiably failed (e.g. subsequence horizon exhausted)."""

    def __init__(self, message: str, step: int | None = None) -> None:
        super().__init__(message)
        self.step = step


class ConfigError(ValueError):
    """Experiment configuration failed validation."""
