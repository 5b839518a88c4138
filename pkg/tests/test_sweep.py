import io
import json
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import numpy as np

from lstm_trading_lab import cli, sweep
from lstm_trading_lab.errors import ConfigError
from lstm_trading_lab.records import load_report


def write_prices(path: Path, count: int = 80) -> Path:
    closes = 40.0 + 5.0 * np.sin(np.arange(count) / 4.0) + np.arange(count) * 0.1
    lines = ["Date,Adj Close"]
    start = np.datetime64("2021-03-01")
    for offset, close in enumerate(closes):
        lines.append(f"{start + np.timedelta64(offset, 'D')},{close:.2f}")
    path.write_text("\n".join(lines) + "\n")
    return path


class SweepParsingTests(unittest.TestCase):
    def test_parse_run_spec(self) -> None:
        label, overrides = sweep.parse_run_spec("long:hold_days=5,rule=level")
        self.assertEqual(label, "long")
        self.assertEqual(overrides, {"hold_days": "5", "rule": "level"})
        with self.assertRaises(ConfigError):
            sweep.parse_run_spec("hold_days=5")
        with self.assertRaises(ConfigError):
            sweep.parse_run_spec("x:hold_days")

    def test_apply_overrides_only_touches_backtest_settings(self) -> None:
        base = cli.RunConfig()
        changed = sweep.apply_overrides(base, {"threshold": "0.4", "strict": "yes"})
        self.assertEqual((changed.threshold, changed.strict_threshold), (0.4, True))
        self.assertEqual(changed.epochs, base.epochs)
        with self.assertRaisesRegex(ConfigError, "unsupported override"):
            sweep.apply_overrides(base, {"epochs": "5"})
        with self.assertRaises(ConfigError):
            sweep.apply_overrides(base, {"hold_days": "three"})
        with self.assertRaises(ConfigError):
            sweep.apply_overrides(base, {"threshold": "2.0"})

    def test_log_level_is_validated_as_config(self) -> None:
        args = sweep.build_parser().parse_args(["--run-dir", "x", "--log-level", "debug"])
        self.assertEqual(args.log_level, "DEBUG")
        stderr = io.StringIO()
        with redirect_stderr(stderr):
            code = sweep.main(["--run-dir", "x", "--run", "a:hold_days=2", "--log-level", "LOUD"])
        self.assertEqual(code, 1)
        self.assertIn("--log-level", stderr.getvalue())


class SweepRunTests(unittest.TestCase):
    def test_sweep_reuses_checkpoints(self) -> None:
        with tempfile.TemporaryDirectory() as tmp_name:
            tmp = Path(tmp_name)
            prices = write_prices(tmp / "prices.csv")
            run_dir = tmp / "run"
            argv = [
                "--input", f"{prices}=SWP",
                "--out", str(run_dir),
                "--strategies", "1,2",
                "--lookback", "5",
                "--ae-lookback", "4",
                "--epochs", "2",
                "--hidden-sizes", "4",
                "--ae-hidden-sizes", "4,2",
            ]
            with redirect_stdout(io.StringIO()), redirect_stderr(io.StringIO()):
                self.assertEqual(cli.run(cli.validate_config(argv, {})), 0)
            args = sweep.build_parser().parse_args(
                [
                    "--run-dir", str(run_dir),
                    "--run", "base:hold_days=3",
                    "--run", "level:rule=level,hold_days=1",
                ]
            )
            with redirect_stdout(io.StringIO()):
                results = sweep.run_sweep(args)
            self.assertEqual(len(results), 4)
            base_report, metadata = load_report(run_dir / "sweep" / "base" / "SWP" / "strategy1.json")
            original, _ = load_report(run_dir / "SWP" / "strategy1" / "report.json")
            self.assertEqual(base_report, original)
            self.assertEqual(metadata["label"], "base")
            self.assertTrue((run_dir / "sweep" / "level" / "SWP" / "strategy2.json").is_file())
            summary = json.loads((run_dir / "sweep" / "summary.json").read_text())
            self.assertEqual({entry["label"] for entry in summary}, {"base", "level"})

    def test_missing_run_directory(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            stderr = io.StringIO()
            with redirect_stderr(stderr):
                code = sweep.main(["--run-dir", tmp, "--run", "x:hold_days=2"])
        self.assertEqual(code, 2)
        self.assertIn("resolved_config.json", stderr.getvalue())
