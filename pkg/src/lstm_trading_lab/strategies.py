from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Sequence, Tuple

from .types import Position

STRATEGY1_RULES = ("trend", "level")


class TradingRule(ABC):
    """Interface for long-only rules driving a one-share book, one decision pass per bar."""

    name = "rule"

    def __init__(self, length: int) -> None:
        if length < 1:
            raise ValueError("A trading rule needs at least one bar.")
        self._length = length

    @property
    def length(self) -> int:
        return self._length

    @abstractmethod
    def wants_entry(self, day: int) -> bool:
        """Buy one share at this bar's close while flat."""

    @abstractmethod
    def wants_exit(self, day: int, position: Position) -> bool:
        """Sell the held share at this bar's close."""

    def _has_next(self, day: int) -> bool:
        return day + 1 < self._length


class PredictedTrendRule(TradingRule):
    """Buy when tomorrow's predicted price rises; sell on a predicted local peak."""

    name = "trend"

    def __init__(self, predicted: Sequence[float]) -> None:
        super().__init__(len(predicted))
        self._predicted = tuple(predicted)

    def wants_entry(self, day: int) -> bool:
        return self._has_next(day) and self._predicted[day + 1] > self._predicted[day]

    def wants_exit(self, day: int, position: Position) -> bool:
        return self._has_next(day) and self._predicted[day + 1] <= self._predicted[day]


class PredictedLevelRule(TradingRule):
    """Buy when tomorrow's predicted price beats today's actual close; sell when it does not."""

    name = "level"

    def __init__(self, predicted: Sequence[float], actual: Sequence[float]) -> None:
        if len(predicted) != len(actual):
            raise ValueError("predicted and actual must have the same length.")
        super().__init__(len(predicted))
        self._predicted = tuple(predicted)
        self._actual = tuple(actual)

    def wants_entry(self, day: int) -> bool:
        return self._has_next(day) and self._predicted[day + 1] > self._actual[day]

    def wants_exit(self, day: int, position: Position) -> bool:
        return self._has_next(day) and self._predicted[day + 1] <= self._actual[day]


class BreakoutHoldRule(TradingRule):
    """Buy on every breakout bar while flat and sell `hold_days` trading days later."""

    name = "breakout"

    def __init__(self, signals: Sequence[bool], hold_days: int = 3) -> None:
        super().__init__(len(signals))
        if hold_days < 1:
            raise ValueError(f"hold_days must be >= 1, got {hold_days}.")
        self._signals: Tuple[bool, ...] = tuple(bool(flag) for flag in signals)
        self._hold_days = hold_days

    @property
    def hold_days(self) -> int:
        return self._hold_days

    def wants_entry(self, day: int) -> bool:
        return self._signals[day]

    def wants_exit(self, day: int, position: Position) -> bool:
        return day - position.entry_index >= self._hold_days


def create_strategy1_rule(
    name: str, predicted: Sequence[float], actual: Sequence[float]
) -> TradingRule:
    if name == "trend":
        return PredictedTrendRule(predicted)
    if name == "level":
        return PredictedLevelRule(predicted, actual)
    raise ValueError(f"Unsupported Strategy-1 rule '{name}'; expected one of {STRATEGY1_RULES}.")
