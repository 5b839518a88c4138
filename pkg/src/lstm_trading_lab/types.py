from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from decimal import Decimal
from typing import Iterable, Sequence, Tuple

import numpy as np


def _validate_price(value: Decimal) -> Decimal:
    if not value.is_finite() or value <= 0:
        raise ValueError(f"Adjusted close must be a positive finite price, got {value}.")
    return value


def _validate_fraction(value: float, label: str) -> float:
    if not 0.0 < value < 1.0:
        raise ValueError(f"{label} must be in (0, 1), got {value}.")
    return value


@dataclass(frozen=True, slots=True)
class Bar:
    """One trading day: date and dividend/split adjusted close in dollars."""

    date: date
    adj_close: Decimal

    def __post_init__(self) -> None:
        if not isinstance(self.adj_close, Decimal):
            object.__setattr__(self, "adj_close", Decimal(str(self.adj_close)))
        _validate_price(self.adj_close)


@dataclass(frozen=True, slots=True)
class PriceSeries:
    """Ordered daily bars for one ticker, indexed by trading-day ordinal."""

    ticker: str
    bars: Tuple[Bar, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bars", tuple(self.bars))
        if not self.bars:
            raise ValueError(f"Price series '{self.ticker}' has no bars.")
        for index in range(1, len(self.bars)):
            if self.bars[index].date <= self.bars[index - 1].date:
                raise ValueError(
                    f"Bars must be strictly increasing by date; "
                    f"{self.bars[index].date} follows {self.bars[index - 1].date}."
                )

    def __len__(self) -> int:
        return len(self.bars)

    @property
    def dates(self) -> Tuple[date, ...]:
        return tuple(bar.date for bar in self.bars)

    @property
    def closes(self) -> Tuple[Decimal, ...]:
        return tuple(bar.adj_close for bar in self.bars)

    def values(self) -> np.ndarray:
        """Adjusted closes as float64, the representation the networks consume."""

        return np.array([float(bar.adj_close) for bar in self.bars], dtype=np.float64)

    def head(self, count: int) -> PriceSeries:
        return PriceSeries(self.ticker, self.bars[:count])

    def tail(self, count: int) -> PriceSeries:
        return PriceSeries(self.ticker, self.bars[len(self.bars) - count :])

    def join(self, other: PriceSeries) -> PriceSeries:
        return PriceSeries(self.ticker, self.bars + other.bars)


@dataclass(frozen=True, slots=True)
class SplitSeries:
    """Chronological train prefix and test suffix of one series."""

    train: PriceSeries
    test: PriceSeries
    split_ratio: float

    def __post_init__(self) -> None:
        _validate_fraction(self.split_ratio, "split_ratio")
        if self.test.bars[0].date <= self.train.bars[-1].date:
            raise ValueError("Test bars must start after the last training bar.")

    @property
    def full(self) -> PriceSeries:
        return self.train.join(self.test)


@dataclass(frozen=True, slots=True)
class PredictionSeries:
    """One-step-ahead predictions in dollars, aligned date-for-date with actual closes."""

    dates: Tuple[date, ...]
    predicted: Tuple[float, ...]
    actual: Tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "predicted", tuple(float(v) for v in self.predicted))
        object.__setattr__(self, "actual", tuple(float(v) for v in self.actual))
        if not len(self.dates) == len(self.predicted) == len(self.actual):
            raise ValueError(
                "dates, predicted and actual must share one length; got "
                f"{len(self.dates)}, {len(self.predicted)}, {len(self.actual)}."
            )

    def __len__(self) -> int:
        return len(self.dates)


@dataclass(frozen=True, slots=True)
class AnomalyLabel:
    """Reconstruction error of the window ending on `date` and its breakout flag."""

    date: date
    reconstruction_mae: float
    is_anomaly: bool

    def __post_init__(self) -> None:
        if not math.isfinite(self.reconstruction_mae) or self.reconstruction_mae < 0.0:
            raise ValueError(
                f"reconstruction_mae must be finite and >= 0, got {self.reconstruction_mae}."
            )


@dataclass(frozen=True, slots=True)
class BreakoutSeries:
    """Prices annotated with anomaly labels, one label per bar."""

    series: PriceSeries
    labels: Tuple[AnomalyLabel, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        ensure_aligned(self.series.dates, (label.date for label in self.labels), "labels")

    @property
    def anomaly_count(self) -> int:
        return sum(1 for label in self.labels if label.is_anomaly)


def ensure_aligned(expected: Sequence[date], actual: Iterable[date], label: str) -> None:
    actual_dates = tuple(actual)
    if len(actual_dates) != len(expected):
        raise ValueError(
            f"Misaligned {label}: {len(actual_dates)} entries for {len(expected)} bars."
        )
    for index, (want, got) in enumerate(zip(expected, actual_dates)):
        if want != got:
            raise ValueError(f"Misaligned {label} at index {index}: {got} != {want}.")


@dataclass(frozen=True, slots=True)
class Position:
    """The single open share: trading-day ordinal, date and fill price of the entry."""

    entry_index: int
    entry_date: date
    entry_price: Decimal
