"""Min-max scaling and sliding-window datasets shared by both strategies."""

from __future__ import annotations

from dataclasses import dataclass
from typing import overload

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DataError
from .types import PriceSeries


@dataclass(frozen=True, slots=True)
class MinMaxScaler:
    """Bounds of the training prices; maps [min, max] onto [0, 1] without clipping."""

    min: float
    max: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.min) and np.isfinite(self.max)):
            raise ValueError("Scaler bounds must be finite.")
        if self.max < self.min:
            raise ValueError(f"Scaler max ({self.max}) is below min ({self.min}).")

    @property
    def is_degenerate(self) -> bool:
        return self.max == self.min

    @property
    def span(self) -> float:
        return self.max - self.min


@dataclass(frozen=True, slots=True)
class WindowedDataset:
    """Rows of `lookback` consecutive normalized values and the value that follows each row."""

    inputs: np.ndarray
    targets: np.ndarray
    lookback: int

    def __post_init__(self) -> None:
        if self.inputs.ndim != 2 or self.inputs.shape[1] != self.lookback:
            raise ValueError(
                f"inputs must have shape (samples, {self.lookback}), got {self.inputs.shape}."
            )
        if self.targets.shape != (self.inputs.shape[0],):
            raise ValueError("targets must hold one value per input row.")

    def __len__(self) -> int:
        return int(self.inputs.shape[0])


def fit_scaler(train: PriceSeries) -> MinMaxScaler:
    values = train.values()
    return MinMaxScaler(min=float(values.min()), max=float(values.max()))


@overload
def transform(scaler: MinMaxScaler, x: float) -> float: ...


@overload
def transform(scaler: MinMaxScaler, x: np.ndarray) -> np.ndarray: ...


def transform(scaler: MinMaxScaler, x: float | np.ndarray) -> float | np.ndarray:
    """(x - min) / (max - min); a degenerate scaler maps everything to 0.0."""

    if scaler.is_degenerate:
        if isinstance(x, np.ndarray):
            return np.zeros_like(x, dtype=np.float64)
        return 0.0
    scaled = (np.asarray(x, dtype=np.float64) - scaler.min) / scaler.span
    if isinstance(x, np.ndarray):
        return scaled
    return float(scaled)


@overload
def inverse_transform(scaler: MinMaxScaler, y: float) -> float: ...


@overload
def inverse_transform(scaler: MinMaxScaler, y: np.ndarray) -> np.ndarray: ...


def inverse_transform(scaler: MinMaxScaler, y: float | np.ndarray) -> float | np.ndarray:
    if scaler.is_degenerate:
        raise DataError(
            f"degenerate scaler (min = max = {scaler.min}): inverse transform is undefined"
        )
    restored = np.asarray(y, dtype=np.float64) * scaler.span + scaler.min
    if isinstance(y, np.ndarray):
        return restored
    return float(restored)


def sliding_windows(values: np.ndarray, lookback: int) -> np.ndarray:
    """Every run of `lookback` consecutive values: `len - lookback + 1` rows (copied)."""

    if lookback < 1:
        raise ValueError(f"lookback must be >= 1, got {lookback}.")
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("values must be one-dimensional.")
    if len(values) < lookback:
        raise DataError(f"need at least {lookback} values for one window, got {len(values)}")
    return sliding_window_view(values, lookback).copy()


def make_windows(normalized: np.ndarray, lookback: int) -> WindowedDataset:
    """Row i is values[i : i + lookback]; its target is values[i + lookback]."""

    normalized = np.asarray(normalized, dtype=np.float64)
    if lookback < 1:
        raise ValueError(f"lookback must be >= 1, got {lookback}.")
    if len(normalized) <= lookback:
        raise DataError(
            f"series of {len(normalized)} values is too short for lookback {lookback} "
            f"(need at least {lookback + 1})"
        )
    inputs = sliding_windows(normalized[:-1], lookback)
    targets = normalized[lookback:].copy()
    return WindowedDataset(inputs=inputs, targets=targets, lookback=lookback)
