import io
import json
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from decimal import Decimal
from pathlib import Path

from lstm_trading_lab.backtester import BacktestReport
from lstm_trading_lab.compare import main, sort_summaries, summarize
from lstm_trading_lab.errors import DataError
from lstm_trading_lab.records import write_report


class CompareTests(unittest.TestCase):
    def test_summarize_reads_metadata(self) -> None:
        report = BacktestReport(Decimal("4.5"), profitable=2, unprofitable=1, total=3)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "report.json"
            write_report(
                path,
                report,
                metadata={"label": "exp1", "ticker": "SPY", "strategy_name": "LSTM Prediction"},
            )
            summary = summarize(str(path))
        self.assertEqual(summary.label, "exp1")
        self.assertEqual(summary.ticker, "SPY")
        self.assertEqual(summary.strategy, "LSTM Prediction")
        self.assertEqual(summary.report, report)

    def test_label_falls_back_to_directory(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "strategy2" / "report.json"
            path.parent.mkdir()
            write_report(path, BacktestReport(Decimal("1")))
            summary = summarize(str(path))
        self.assertEqual(summary.label, "strategy2")
        self.assertEqual(summary.ticker, "-")

    def test_malformed_report(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "report.json"
            path.write_text(json.dumps({"profit": "1", "total": 3}))
            with self.assertRaises(DataError):
                summarize(str(path))

    def test_sorting_puts_missing_counts_first(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            paths = []
            for name, report in (
                ("hold", BacktestReport(Decimal("9"))),
                ("lstm", BacktestReport(Decimal("2"), profitable=1, unprofitable=1, total=2)),
                ("breakout", BacktestReport(Decimal("5"), profitable=3, unprofitable=0, total=3)),
            ):
                path = Path(tmp) / f"{name}.json"
                write_report(path, report, metadata={"label": name})
                paths.append(str(path))
            summaries = [summarize(path) for path in paths]
        by_profit = sort_summaries(summaries, "profit", descending=True)
        self.assertEqual([item.label for item in by_profit], ["hold", "breakout", "lstm"])
        by_success = sort_summaries(summaries, "success")
        self.assertEqual([item.label for item in by_success], ["hold", "lstm", "breakout"])

    def test_main_prints_table_and_writes_json(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            first = Path(tmp) / "best.json"
            second = Path(tmp) / "worst.json"
            write_report(first, BacktestReport(Decimal("10")), metadata={"label": "best"})
            write_report(second, BacktestReport(Decimal("-3")), metadata={"label": "worst"})
            out_json = Path(tmp) / "table.json"
            stdout = io.StringIO()
            with redirect_stdout(stdout):
                code = main([str(first), str(second), "--sort-by", "profit", "--out-json", str(out_json)])
            records = json.loads(out_json.read_text())
        self.assertEqual(code, 0)
        self.assertIn("Profits ($)", stdout.getvalue())
        self.assertEqual([record["label"] for record in records], ["worst", "best"])

    def test_main_reports_missing_file(self) -> None:
        stderr = io.StringIO()
        with redirect_stderr(stderr):
            code = main(["/nonexistent/report.json"])
        self.assertEqual(code, 1)
        self.assertIn("error:", stderr.getvalue())
