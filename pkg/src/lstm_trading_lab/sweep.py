from __future__ import annotations

import argparse
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence, Tuple

from .anomaly import AutoencoderModel
from .backtester import BacktestReport
from .cli import (
    LOG_LEVELS,
    ConfigArgumentParser,
    RunConfig,
    backtest_strategy1,
    backtest_strategy2,
    config_from_dict,
    configure_logging,
    parse_input_spec,
    report_failure,
)
from .compare import SORT_KEYS
from .errors import ConfigError, DataError, LabError
from .market_data import parse_csv, split_train_test
from .predictor import PricePredictor
from .records import dump_json, load_checkpoint, write_report
from .reporting import STRATEGY_NAMES, ComparisonRow, comparison_to_records, render_comparison_table

logger = logging.getLogger(__name__)

RUN_OVERRIDE_FIELDS: Dict[str, str] = {
    "hold_days": "hold_days",
    "threshold": "threshold",
    "rule": "strategy1_rule",
    "strict": "strict_threshold",
}


def _parse_bool(raw: str) -> bool:
    text = raw.strip().lower()
    if text in {"1", "true", "yes", "on"}:
        return True
    if text in {"0", "false", "no", "off"}:
        return False
    raise ValueError(raw)


RUN_OVERRIDE_TYPES: Dict[str, Callable[[str], object]] = {
    "hold_days": int,
    "threshold": float,
    "rule": str,
    "strict": _parse_bool,
}


@dataclass(slots=True)
class SweepResult:
    label: str
    ticker: str
    strategy: int
    report: BacktestReport
    path: str
    overrides: Dict[str, str]

    def row(self) -> ComparisonRow:
        return ComparisonRow(self.ticker, f"{self.label}: {STRATEGY_NAMES[self.strategy]}", self.report)


def parse_run_spec(spec: str) -> Tuple[str, Dict[str, str]]:
    if ":" not in spec:
        raise ConfigError(f"run spec '{spec}' is missing its label prefix (label:key=value,...)")
    label, remainder = spec.split(":", 1)
    label = label.strip()
    if not label:
        raise ConfigError("run label cannot be empty")
    overrides: Dict[str, str] = {}
    for token in remainder.split(","):
        token = token.strip()
        if not token:
            continue
        if "=" not in token:
            raise ConfigError(f"invalid token '{token}' in run spec '{spec}'; expected key=value")
        key, value = (part.strip() for part in token.split("=", 1))
        if not key:
            raise ConfigError(f"missing key in run token '{token}'")
        overrides[key] = value
    return label, overrides


def apply_overrides(base: RunConfig, overrides: Dict[str, str]) -> RunConfig:
    """A copy of `base` with backtest-only settings replaced; training settings never change."""

    changes: Dict[str, Any] = {}
    for key, raw_value in overrides.items():
        if key not in RUN_OVERRIDE_TYPES:
            raise ConfigError(
                f"unsupported override '{key}' (choose from {', '.join(RUN_OVERRIDE_TYPES)})"
            )
        try:
            changes[RUN_OVERRIDE_FIELDS[key]] = RUN_OVERRIDE_TYPES[key](raw_value)
        except ValueError as exc:
            raise ConfigError(f"failed to parse override '{key}={raw_value}'") from exc
    return replace(base, **changes)


def load_run_config(run_dir: Path) -> RunConfig:
    path = run_dir / "resolved_config.json"
    if not path.is_file():
        raise DataError(f"{run_dir}: no resolved_config.json; is this a finished run directory?")
    return config_from_dict(json.loads(path.read_text()))


def _load_models(
    base: RunConfig, run_dir: Path, ticker: str
) -> Tuple[PricePredictor | None, AutoencoderModel | None]:
    predictor: PricePredictor | None = None
    autoencoder: AutoencoderModel | None = None
    if 1 in base.strategies:
        model, _ = load_checkpoint(run_dir / ticker / "strategy1" / "checkpoint.npz")
        if not isinstance(model, PricePredictor):
            raise DataError(f"{ticker}: strategy1 checkpoint does not hold a price predictor")
        predictor = model
    if 2 in base.strategies:
        model, _ = load_checkpoint(run_dir / ticker / "strategy2" / "checkpoint.npz")
        if not isinstance(model, AutoencoderModel):
            raise DataError(f"{ticker}: strategy2 checkpoint does not hold an autoencoder")
        autoencoder = model
    return predictor, autoencoder


def run_sweep(args: argparse.Namespace) -> List[SweepResult]:
    """Re-run the backtests of a finished run under each --run variant, reusing its checkpoints."""

    run_dir = Path(args.run_dir)
    base = load_run_config(run_dir)
    run_specs = [parse_run_spec(spec) for spec in args.run or []]
    if not run_specs:
        raise ConfigError("at least one --run specification is required")
    labels = [label for label, _ in run_specs]
    if len(set(labels)) != len(labels):
        raise ConfigError("run labels must be unique")
    inputs = [parse_input_spec(spec) for spec in args.input] if args.input else list(base.inputs)
    if not inputs:
        raise ConfigError("no inputs: pass --input PATH=TICKER")
    variants = [(label, overrides, apply_overrides(base, overrides)) for label, overrides in run_specs]
    output_dir = Path(args.output_dir) if args.output_dir else run_dir / "sweep"

    results: List[SweepResult] = []
    for path, ticker in inputs:
        split = split_train_test(parse_csv(path, ticker), base.split_ratio)
        predictor, autoencoder = _load_models(base, run_dir, ticker)
        for label, overrides, config in variants:
            target = output_dir / label / ticker
            target.mkdir(parents=True, exist_ok=True)
            reports: List[Tuple[int, BacktestReport]] = []
            if predictor is not None:
                reports.append((1, backtest_strategy1(config, split, predictor).report))
            if autoencoder is not None:
                reports.append((2, backtest_strategy2(config, split, autoencoder).report))
            for strategy, report in reports:
                report_path = target / f"strategy{strategy}.json"
                write_report(
                    report_path,
                    report,
                    {
                        "label": label,
                        "ticker": ticker,
                        "strategy": strategy,
                        "strategy_name": STRATEGY_NAMES[strategy],
                        "seed": base.seed,
                        "overrides": overrides,
                    },
                )
                results.append(
                    SweepResult(label, ticker, strategy, report, str(report_path), overrides)
                )
            logger.info("Sweep %s on %s: %d reports", label, ticker, len(reports))

    results.sort(key=lambda item: SORT_KEYS[args.sort_by](item), reverse=args.descending)
    if results:
        rows = [item.row() for item in results]
        print(render_comparison_table(rows))
        records = comparison_to_records(rows)
        for record, item in zip(records, results):
            record["label"] = item.label
            record["overrides"] = item.overrides
            record["path"] = item.path
        dump_json(records, output_dir / "summary.json")
    return results


def build_parser() -> argparse.ArgumentParser:
    parser = ConfigArgumentParser(
        prog="lstm-trading-lab-sweep",
        description="Re-run backtests of a finished run with strategy hyperparameter overrides.",
    )
    parser.add_argument("--run-dir", required=True, help="Output directory of a finished run.")
    parser.add_argument(
        "--input",
        action="append",
        metavar="PATH=TICKER",
        help="Price CSV and ticker (defaults to the run's own inputs).",
    )
    parser.add_argument(
        "--run",
        action="append",
        help="Run spec formatted as label:hold_days=5,threshold=0.4,rule=level,strict=true",
    )
    parser.add_argument("--output-dir", help="Where variant reports go (default RUN_DIR/sweep).")
    parser.add_argument(
        "--sort-by",
        choices=("profit", "success", "trades"),
        default="profit",
        help="Metric used to sort the summary table.",
    )
    parser.add_argument(
        "--descending",
        action="store_true",
        help="Sort in descending order.",
    )
    parser.add_argument(
        "--log-level",
        type=str.upper,
        choices=LOG_LEVELS,
        default="WARNING",
        help=f"Logging level: {', '.join(LOG_LEVELS)}.",
    )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level)
        run_sweep(args)
    except (LabError, ValueError, OSError) as exc:
        return report_failure(exc)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
