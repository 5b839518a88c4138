import unittest
from datetime import date
from decimal import Decimal

from lstm_trading_lab.strategies import (
    BreakoutHoldRule,
    PredictedLevelRule,
    PredictedTrendRule,
    create_strategy1_rule,
)
from lstm_trading_lab.types import Position


def held_since(index: int) -> Position:
    return Position(entry_index=index, entry_date=date(2020, 1, 1), entry_price=Decimal("1"))


class TrendRuleTests(unittest.TestCase):
    def test_entries_and_exits_follow_predicted_direction(self) -> None:
        rule = PredictedTrendRule([1.0, 2.0, 1.0, 2.0, 1.0])
        self.assertEqual([rule.wants_entry(day) for day in range(5)], [True, False, True, False, False])
        self.assertEqual(
            [rule.wants_exit(day, held_since(0)) for day in range(5)],
            [False, True, False, True, False],
        )

    def test_flat_prediction_is_an_exit_not_an_entry(self) -> None:
        rule = PredictedTrendRule([3.0, 3.0])
        self.assertFalse(rule.wants_entry(0))
        self.assertTrue(rule.wants_exit(0, held_since(0)))


class LevelRuleTests(unittest.TestCase):
    def test_compares_prediction_with_todays_close(self) -> None:
        rule = PredictedLevelRule([10.0, 10.5, 9.0], [10.0, 10.0, 10.0])
        self.assertTrue(rule.wants_entry(0))
        self.assertTrue(rule.wants_exit(1, held_since(0)))
        self.assertFalse(rule.wants_entry(2))

    def test_lengths_must_match(self) -> None:
        with self.assertRaises(ValueError):
            PredictedLevelRule([1.0, 2.0], [1.0])


class BreakoutRuleTests(unittest.TestCase):
    def test_holds_for_configured_days(self) -> None:
        rule = BreakoutHoldRule([False, True, False, False, False, False], hold_days=3)
        self.assertTrue(rule.wants_entry(1))
        self.assertFalse(rule.wants_exit(3, held_since(1)))
        self.assertTrue(rule.wants_exit(4, held_since(1)))
        self.assertEqual(rule.hold_days, 3)

    def test_hold_days_must_be_positive(self) -> None:
        with self.assertRaises(ValueError):
            BreakoutHoldRule([True], hold_days=0)


class FactoryTests(unittest.TestCase):
    def test_names(self) -> None:
        self.assertIsInstance(create_strategy1_rule("trend", [1.0], [1.0]), PredictedTrendRule)
        self.assertIsInstance(create_strategy1_rule("level", [1.0], [1.0]), PredictedLevelRule)
        with self.assertRaises(ValueError):
            create_strategy1_rule("momentum", [1.0], [1.0])
        with self.assertRaises(ValueError):
            PredictedTrendRule([])
