import tempfile
import unittest
import xml.etree.ElementTree as ET
from datetime import date, timedelta
from decimal import Decimal
from pathlib import Path

import numpy as np
import pandas as pd

from lstm_trading_lab.backtester import BacktestReport
from lstm_trading_lab.reporting import (
    TABLE_COLUMNS,
    ComparisonRow,
    comparison_to_records,
    emit_overlay,
    emit_price_overlay,
    error_histogram,
    format_profit,
    format_success_rate,
    gaussian_kde,
    render_comparison_table,
    write_density,
    write_histogram,
)
from lstm_trading_lab.types import AnomalyLabel, Bar, BreakoutSeries, PredictionSeries, PriceSeries

SVG = "{http://www.w3.org/2000/svg}"
START = date(2023, 5, 1)


def days(count: int) -> tuple:
    return tuple(START + timedelta(days=i) for i in range(count))


class DensityTests(unittest.TestCase):
    def test_standard_normal_density(self) -> None:
        samples = np.random.default_rng(0).standard_normal(10_000)
        estimate = gaussian_kde(samples)
        at_zero = float(np.interp(0.0, estimate.grid, estimate.density))
        self.assertAlmostEqual(at_zero, 0.3989, delta=0.03989)
        self.assertTrue(0.99 <= estimate.integral() <= 1.01)
        self.assertGreater(estimate.bandwidth, 0.0)
        self.assertEqual(estimate.grid.shape, (512,))

    def test_sample_order_does_not_matter(self) -> None:
        samples = np.random.default_rng(1).exponential(size=300)
        first = gaussian_kde(samples)
        second = gaussian_kde(samples[::-1])
        np.testing.assert_allclose(first.density, second.density, rtol=1e-12, atol=1e-15)

    def test_degenerate_samples(self) -> None:
        with self.assertRaises(ValueError):
            gaussian_kde([1.0, 1.0, 1.0])
        with self.assertRaises(ValueError):
            gaussian_kde([1.0])
        with self.assertRaises(ValueError):
            gaussian_kde([1.0, np.inf])

    def test_histogram_holds_about_fifty_per_bin(self) -> None:
        samples = np.random.default_rng(2).random(1000)
        histogram = error_histogram(samples)
        self.assertEqual(len(histogram.counts), 20)
        self.assertEqual(int(histogram.counts.sum()), 1000)
        self.assertEqual(len(error_histogram([0.5] * 10).counts), 1)

    def test_density_and_histogram_files(self) -> None:
        samples = np.random.default_rng(3).random(200)
        with tempfile.TemporaryDirectory() as tmp:
            density_path = Path(tmp) / "density.csv"
            histogram_path = Path(tmp) / "histogram.csv"
            write_density(gaussian_kde(samples, grid_points=64), density_path)
            write_histogram(error_histogram(samples), histogram_path)
            density = pd.read_csv(density_path)
            histogram = pd.read_csv(histogram_path)
        self.assertEqual(list(density.columns), ["squared_error", "density"])
        self.assertEqual(len(density), 64)
        self.assertEqual(list(histogram.columns), ["bin_start", "bin_end", "count"])
        self.assertEqual(int(histogram["count"].sum()), 200)


class TableTests(unittest.TestCase):
    def rows(self) -> list:
        return [
            ComparisonRow("GME", "Buy and Hold", BacktestReport(Decimal("150.5"))),
            ComparisonRow(
                "GME",
                "LSTM Prediction",
                BacktestReport(Decimal("-3.25"), profitable=462, unprofitable=401, total=863),
            ),
            ComparisonRow(
                "GME",
                "Breakout Detection",
                BacktestReport(Decimal("0"), profitable=0, unprofitable=0, total=0),
            ),
        ]

    def test_formatting_helpers(self) -> None:
        self.assertEqual(format_success_rate(462 / 863), "53.53%")
        self.assertEqual(format_success_rate(None), "N/A")
        self.assertEqual(format_profit(Decimal("2")), "2.00")
        self.assertEqual(format_profit(Decimal("-0.125")), "-0.12")

    def test_render(self) -> None:
        lines = render_comparison_table(self.rows()).splitlines()
        self.assertEqual(lines[0].split("  ")[0], "Stock")
        for column in TABLE_COLUMNS:
            self.assertIn(column, lines[0])
        self.assertTrue(set(lines[1]) <= {"-", " "})
        self.assertEqual(lines[2].split()[-5:], ["N/A", "N/A", "N/A", "N/A", "150.50"])
        self.assertEqual(lines[3].split()[-5:], ["462", "401", "863", "53.53%", "-3.25"])
        self.assertEqual(lines[4].split()[-5:], ["0", "0", "0", "N/A", "0.00"])

    def test_empty_table(self) -> None:
        with self.assertRaises(ValueError):
            render_comparison_table([])

    def test_records_keep_exact_profit(self) -> None:
        records = comparison_to_records(self.rows())
        self.assertEqual(records[0]["profit"], "150.5")
        self.assertIsNone(records[0]["total"])
        self.assertEqual(records[1]["total"], 863)
        self.assertEqual(records[1]["stock"], "GME")


class OverlayTests(unittest.TestCase):
    def test_prediction_overlay(self) -> None:
        predictions = PredictionSeries(
            days(10), tuple(float(i) for i in range(10)), tuple(float(i) + 0.5 for i in range(10))
        )
        with tempfile.TemporaryDirectory() as tmp:
            csv_path, svg_path = emit_overlay(predictions, Path(tmp) / "predictions")
            frame = pd.read_csv(csv_path)
            root = ET.parse(svg_path).getroot()
        self.assertEqual(csv_path.name, "predictions.csv")
        self.assertEqual(list(frame.columns), ["date", "actual", "predicted"])
        self.assertEqual(len(frame), 10)
        classes = [line.get("class") for line in root.iter(f"{SVG}polyline")]
        self.assertEqual(classes, ["actual", "predicted"])
        self.assertEqual(len(list(root.iter(f"{SVG}circle"))), 0)

    def test_breakout_overlay_marks_anomalies(self) -> None:
        dates = days(10)
        series = PriceSeries(
            "GME", tuple(Bar(day, Decimal(10 + i)) for i, day in enumerate(dates))
        )
        labels = tuple(AnomalyLabel(day, 0.1 * i, i in (3, 7)) for i, day in enumerate(dates))
        with tempfile.TemporaryDirectory() as tmp:
            csv_path, svg_path = emit_overlay(BreakoutSeries(series, labels), Path(tmp) / "breakouts")
            frame = pd.read_csv(csv_path)
            root = ET.parse(svg_path).getroot()
        self.assertEqual(
            list(frame.columns), ["date", "adj_close", "reconstruction_mae", "is_anomaly"]
        )
        self.assertEqual(int(frame["is_anomaly"].sum()), 2)
        self.assertEqual(len(list(root.iter(f"{SVG}circle"))), 2)
        self.assertIn("2 flagged", root.find(f"{SVG}title").text or "")

    def test_price_overlay_and_empty_predictions(self) -> None:
        series = PriceSeries("X", (Bar(START, Decimal("1.5")), Bar(START + timedelta(days=1), Decimal(2))))
        with tempfile.TemporaryDirectory() as tmp:
            csv_path, svg_path = emit_price_overlay(series, Path(tmp) / "price")
            self.assertTrue(svg_path.is_file())
            self.assertEqual(pd.read_csv(csv_path)["adj_close"].tolist(), [1.5, 2.0])
            with self.assertRaises(ValueError):
                emit_overlay(PredictionSeries((), (), ()), Path(tmp) / "empty")
