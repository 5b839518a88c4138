import tempfile
import unittest
from datetime import date
from decimal import Decimal
from pathlib import Path

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from lstm_trading_lab.errors import DataError
from lstm_trading_lab.market_data import parse_csv, split_train_test, write_csv
from lstm_trading_lab.types import Bar, PriceSeries


def write_text(directory: str, text: str, name: str = "prices.csv") -> Path:
    path = Path(directory) / name
    path.write_text(text)
    return path


def linear_series(count: int) -> PriceSeries:
    start = date(2000, 1, 3).toordinal()
    return PriceSeries(
        "LIN",
        tuple(Bar(date.fromordinal(start + i), Decimal(100 + i)) for i in range(count)),
    )


class ParseCsvTests(unittest.TestCase):
    def test_parses_two_rows_in_date_order(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = write_text(tmp, "Date,Adj Close\n2020-01-02,100.0\n2020-01-03,101.5\n")
            series = parse_csv(path, "SPY")
        self.assertEqual(series.ticker, "SPY")
        self.assertEqual(series.dates, (date(2020, 1, 2), date(2020, 1, 3)))
        self.assertEqual(series.closes, (Decimal("100.0"), Decimal("101.5")))

    def test_accepts_vendor_columns_case_insensitively(self) -> None:
        text = "date,Open,Close,adj_close,Volume\n2020-01-02,1,2,3.25,9\n2020-01-03,1,2,3.50,9\n"
        with tempfile.TemporaryDirectory() as tmp:
            series = parse_csv(write_text(tmp, text), "GME")
        self.assertEqual(series.closes, (Decimal("3.25"), Decimal("3.50")))

    def test_non_positive_price_names_row(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = write_text(tmp, "Date,Adj Close\n2020-01-02,-5.0\n2020-01-03,1.0\n")
            with self.assertRaisesRegex(DataError, "non-positive price at row 2"):
                parse_csv(path, "X")

    def test_duplicate_date_is_rejected(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = write_text(tmp, "Date,Adj Close\n2020-01-02,1.0\n2020-01-02,2.0\n")
            with self.assertRaisesRegex(DataError, "duplicate date 2020-01-02 at row 3"):
                parse_csv(path, "X")

    def test_unparseable_values_name_row(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            bad_date = write_text(tmp, "Date,Adj Close\n2020-01-02,1.0\nnot-a-date,2.0\n", "a.csv")
            bad_price = write_text(tmp, "Date,Adj Close\n2020-01-02,abc\n2020-01-03,2.0\n", "b.csv")
            with self.assertRaisesRegex(DataError, "unparseable date at row 3"):
                parse_csv(bad_date, "X")
            with self.assertRaisesRegex(DataError, "unparseable price at row 2"):
                parse_csv(bad_price, "X")

    def test_missing_file_and_column(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            missing = Path(tmp) / "nope.csv"
            with self.assertRaisesRegex(DataError, "nope.csv"):
                parse_csv(missing, "X")
            no_adj = write_text(tmp, "Date,Close\n2020-01-02,1.0\n2020-01-03,2.0\n")
            with self.assertRaisesRegex(DataError, "adjusted-close"):
                parse_csv(no_adj, "X")

    def test_single_row_is_too_short(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = write_text(tmp, "Date,Adj Close\n2020-01-02,1.0\n")
            with self.assertRaisesRegex(DataError, "at least 2"):
                parse_csv(path, "X")

    def test_unsorted_rows_are_sorted_with_warning(self) -> None:
        text = "Date,Adj Close\n2020-01-03,2.0\n2020-01-02,1.0\n"
        with tempfile.TemporaryDirectory() as tmp:
            path = write_text(tmp, text)
            with self.assertLogs("lstm_trading_lab.market_data", level="WARNING"):
                series = parse_csv(path, "X")
        self.assertEqual(series.closes, (Decimal("1.0"), Decimal("2.0")))

    @settings(max_examples=40, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.dates(min_value=date(1990, 1, 1), max_value=date(2030, 12, 31)),
                st.decimals(
                    min_value=Decimal("0.01"),
                    max_value=Decimal("99999"),
                    places=2,
                    allow_nan=False,
                    allow_infinity=False,
                ),
            ),
            min_size=2,
            max_size=30,
            unique_by=lambda row: row[0],
        )
    )
    def test_write_then_parse_preserves_bars(self, rows: list) -> None:
        bars = tuple(Bar(day, price) for day, price in sorted(rows))
        series = PriceSeries("RT", bars)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "out.csv"
            write_csv(series, path)
            self.assertEqual(parse_csv(path, "RT"), series)


class SplitTests(unittest.TestCase):
    def test_hundred_bars_at_point_eight(self) -> None:
        series = linear_series(100)
        split = split_train_test(series, 0.8)
        self.assertEqual(split.train.bars, series.bars[:80])
        self.assertEqual(split.test.bars, series.bars[80:])

    def test_five_bars_leave_one_test_bar(self) -> None:
        split = split_train_test(linear_series(5), 0.8)
        self.assertEqual((len(split.train), len(split.test)), (4, 1))

    def test_empty_side_is_rejected(self) -> None:
        with self.assertRaisesRegex(DataError, "test side empty"):
            split_train_test(linear_series(10), 0.99)
        with self.assertRaisesRegex(DataError, "train side empty"):
            split_train_test(linear_series(3), 0.1)

    def test_ratio_outside_unit_interval(self) -> None:
        for ratio in (0.0, 1.0, -0.5, 1.5):
            with self.assertRaises(ValueError):
                split_train_test(linear_series(10), ratio)

    def test_numpy_scalar_ratio(self) -> None:
        split = split_train_test(linear_series(100), np.float64(0.8))
        self.assertEqual((len(split.train), len(split.test)), (80, 20))
        self.assertIsInstance(split.split_ratio, float)

    @settings(max_examples=200, deadline=None)
    @given(
        st.integers(min_value=2, max_value=300),
        st.floats(min_value=0.01, max_value=0.99, allow_nan=False),
    )
    def test_split_concatenates_back_to_series(self, length: int, ratio: float) -> None:
        series = linear_series(length)
        try:
            split = split_train_test(series, ratio)
        except DataError as exc:
            self.assertIn("side empty", str(exc))
            return
        self.assertEqual(split.train.bars + split.test.bars, series.bars)
        self.assertEqual(split.test.dates[0].toordinal(), split.train.dates[-1].toordinal() + 1)

    @settings(max_examples=100, deadline=None)
    @given(st.data())
    def test_exact_fraction_gives_exact_train_size(self, data: st.DataObject) -> None:
        length = data.draw(st.integers(min_value=2, max_value=300))
        train_size = data.draw(st.integers(min_value=1, max_value=length - 1))
        split = split_train_test(linear_series(length), train_size / length)
        self.assertEqual(len(split.train), train_size)
