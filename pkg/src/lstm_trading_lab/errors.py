"""Exception hierarchy shared by the library and the command-line tools."""

from __future__ import annotations


class LabError(Exception):
    """Root of every error raised on purpose by lstm-trading-lab."""


class ConfigError(LabError, ValueError):
    """Invalid or out-of-range configuration."""


class DataError(LabError, ValueError):
    """Input prices that cannot support the requested operation."""


class TrainingError(LabError, RuntimeError):
    """Training diverged (non-finite loss or gradients)."""

    def __init__(self, message: str, epoch: int | None = None, batch: int | None = None) -> None:
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class LedgerError(LabError, RuntimeError):
    """A trade would break the one-share, long-only book."""


class StaleCacheError(LabError, RuntimeError):
    """A forward cache was replayed against parameters it was not computed with."""
