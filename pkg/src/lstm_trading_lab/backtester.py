from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date
from decimal import Decimal
from typing import Dict, List, Sequence, Tuple

from .errors import DataError, LedgerError
from .strategies import BreakoutHoldRule, TradingRule, create_strategy1_rule
from .types import AnomalyLabel, Position, PredictionSeries, PriceSeries, ensure_aligned

logger = logging.getLogger(__name__)

ZERO = Decimal(0)


@dataclass(frozen=True, slots=True)
class Trade:
    """One round trip of a single share; pnl is exact decimal dollars."""

    entry_date: date
    entry_price: Decimal
    exit_date: date
    exit_price: Decimal
    entry_index: int = 0
    exit_index: int = 0
    forced_exit: bool = False
    pnl: Decimal = field(init=False)

    def __post_init__(self) -> None:
        if self.exit_date <= self.entry_date:
            raise LedgerError(
                f"Trade must exit after it enters; {self.exit_date} <= {self.entry_date}."
            )
        object.__setattr__(self, "pnl", self.exit_price - self.entry_price)

    @property
    def holding_days(self) -> int:
        return self.exit_index - self.entry_index


@dataclass(slots=True)
class Ledger:
    """Closed trades plus the (at most one) open position."""

    trades: List[Trade] = field(default_factory=list)
    position: Position | None = None

    @property
    def is_flat(self) -> bool:
        return self.position is None

    def open(self, index: int, day: date, price: Decimal) -> Position:
        if self.position is not None:
            raise LedgerError(
                f"Cannot buy on {day}: already holding the share bought {self.position.entry_date}."
            )
        if self.trades and day < self.trades[-1].exit_date:
            raise LedgerError(f"Cannot buy on {day}: previous trade closed later.")
        self.position = Position(entry_index=index, entry_date=day, entry_price=price)
        return self.position

    def close(self, index: int, day: date, price: Decimal, forced: bool = False) -> Trade:
        if self.position is None:
            raise LedgerError(f"Cannot sell on {day}: no share held.")
        trade = Trade(
            entry_date=self.position.entry_date,
            entry_price=self.position.entry_price,
            exit_date=day,
            exit_price=price,
            entry_index=self.position.entry_index,
            exit_index=index,
            forced_exit=forced,
        )
        self.trades.append(trade)
        self.position = None
        return trade

    @property
    def profit(self) -> Decimal:
        return sum((trade.pnl for trade in self.trades), ZERO)


@dataclass(frozen=True, slots=True)
class BacktestReport:
    """Table-style outcome of one strategy; counts are None where they do not apply."""

    profit: Decimal
    profitable: int | None = None
    unprofitable: int | None = None
    total: int | None = None
    forced_exits: int | None = None

    def __post_init__(self) -> None:
        counts = (self.profitable, self.unprofitable, self.total)
        if any(value is None for value in counts) and not all(value is None for value in counts):
            raise ValueError("Trade counts must be all present or all absent.")
        if self.total is not None and self.total != self.profitable + self.unprofitable:
            raise ValueError(
                f"total {self.total} != profitable {self.profitable} + "
                f"unprofitable {self.unprofitable}."
            )

    @property
    def has_counts(self) -> bool:
        return self.total is not None

    @property
    def success_rate(self) -> float | None:
        if not self.total:
            return None
        return self.profitable / self.total

    def summary(self) -> Dict[str, object]:
        return {
            "profitable": self.profitable,
            "unprofitable": self.unprofitable,
            "total": self.total,
            "success_rate": self.success_rate,
            "profit": str(self.profit),
            "forced_exits": self.forced_exits,
        }


class BacktestSimulator:
    """Executes a trading rule over a price series with a one-share, long-only book.

    Each bar first offers the rule an exit (when holding), then an entry (when flat).
    Entries are never taken on the final bar; a position still open there is
    liquidated at the final close and flagged as a forced exit.
    """

    def __init__(self, rule: TradingRule) -> None:
        self._rule = rule

    def run(self, series: PriceSeries) -> Ledger:
        if self._rule.length != len(series):
            raise ValueError(
                f"Misaligned rule: {self._rule.length} signals for {len(series)} bars."
            )
        ledger = Ledger()
        last = len(series) - 1
        for day, bar in enumerate(series.bars):
            if ledger.position is not None and self._rule.wants_exit(day, ledger.position):
                ledger.close(day, bar.date, bar.adj_close)
            if ledger.position is None and day < last and self._rule.wants_entry(day):
                ledger.open(day, bar.date, bar.adj_close)
        if ledger.position is not None:
            final = series.bars[last]
            ledger.close(last, final.date, final.adj_close, forced=True)
        logger.debug(
            "%s %s rule: %d trades, profit %s",
            series.ticker,
            self._rule.name,
            len(ledger.trades),
            ledger.profit,
        )
        return ledger


def compute_report(ledger: Ledger) -> BacktestReport:
    if ledger.position is not None:
        raise LedgerError(
            f"Cannot report on an open position (held since {ledger.position.entry_date})."
        )
    profitable = sum(1 for trade in ledger.trades if trade.pnl > 0)
    return BacktestReport(
        profit=ledger.profit,
        profitable=profitable,
        unprofitable=len(ledger.trades) - profitable,
        total=len(ledger.trades),
        forced_exits=sum(1 for trade in ledger.trades if trade.forced_exit),
    )


def run_buy_and_hold(series: PriceSeries) -> BacktestReport:
    """Strategy 0: one share bought at the first close and sold at the last."""

    if len(series) < 2:
        raise DataError(f"{series.ticker}: buy-and-hold needs at least 2 bars, got {len(series)}")
    return BacktestReport(profit=series.bars[-1].adj_close - series.bars[0].adj_close)


def run_strategy1(
    test: PriceSeries, predictions: PredictionSeries, rule: str = "trend"
) -> Tuple[Ledger, BacktestReport]:
    """Strategy 1: trade on the predicted next-day move, filling at actual closes."""

    ensure_aligned(test.dates, predictions.dates, "predictions")
    actual = [float(close) for close in test.closes]
    ledger = BacktestSimulator(
        create_strategy1_rule(rule, predictions.predicted, actual)
    ).run(test)
    return ledger, compute_report(ledger)


def run_strategy2(
    test: PriceSeries, labels: Sequence[AnomalyLabel], hold_days: int = 3
) -> Tuple[Ledger, BacktestReport]:
    """Strategy 2: buy on a breakout close and sell `hold_days` trading days later."""

    ensure_aligned(test.dates, (label.date for label in labels), "labels")
    rule = BreakoutHoldRule([label.is_anomaly for label in labels], hold_days=hold_days)
    ledger = BacktestSimulator(rule).run(test)
    return ledger, compute_report(ledger)
