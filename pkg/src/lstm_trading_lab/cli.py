from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Sequence, Tuple

from . import visualize
from .anomaly import AutoencoderModel, fit_autoencoder, label_anomalies, reconstruction_errors
from .backtester import BacktestReport, Ledger, run_buy_and_hold, run_strategy1, run_strategy2
from .errors import ConfigError, DataError, LabError, TrainingError
from .market_data import parse_csv, split_train_test
from .neural import TrainConfig
from .predictor import PricePredictor, fit_predictor, predict_test, squared_errors
from .presets import load_preset
from .records import (
    dump_json,
    save_checkpoint,
    write_anomalies,
    write_ledger,
    write_loss_history,
    write_predictions,
    write_report,
)
from .reporting import (
    STRATEGY_NAMES,
    ComparisonRow,
    comparison_to_records,
    emit_overlay,
    emit_price_overlay,
    error_histogram,
    gaussian_kde,
    render_comparison_table,
    write_density,
    write_histogram,
)
from .strategies import STRATEGY1_RULES
from .types import AnomalyLabel, BreakoutSeries, PredictionSeries, PriceSeries, SplitSeries

logger = logging.getLogger(__name__)

ENV_PREFIX = "LSTM_TRADING_LAB_"
LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
INCOMPLETE_MARKER = "INCOMPLETE"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_TRAINING = 3


@dataclass(frozen=True)
class RunConfig:
    """Resolved run settings; defaults are the published hyperparameters."""

    inputs: Tuple[Tuple[Path, str], ...] = ()
    strategies: Tuple[int, ...] = (0, 1, 2)
    split_ratio: float = 0.8
    lookback: int = 60
    ae_lookback: int = 30
    dropout: float = 0.2
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.001
    clip_norm: float = 5.0
    hidden_sizes: Tuple[int, ...] = (50, 50)
    ae_hidden_sizes: Tuple[int, ...] = (32, 16)
    threshold: float = 0.55
    strict_threshold: bool = False
    hold_days: int = 3
    strategy1_rule: str = "trend"
    no_context: bool = False
    seed: int = 0
    out: Path = field(default_factory=lambda: Path("out"))
    plot: bool = False
    log_level: str = "WARNING"
    preset: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(f"--split-ratio must be in (0, 1), got {self.split_ratio}")
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError(f"--threshold must be in (0, 1], got {self.threshold}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"--dropout must be in [0, 1), got {self.dropout}")
        for name in ("lookback", "ae_lookback", "epochs", "batch_size", "hold_days"):
            value = getattr(self, name)
            if value < 1:
                raise ConfigError(f"{_flag(name)} must be >= 1, got {value}")
        for name in ("learning_rate", "clip_norm"):
            value = getattr(self, name)
            if not value > 0.0:
                raise ConfigError(f"{_flag(name)} must be > 0, got {value}")
        for name in ("hidden_sizes", "ae_hidden_sizes"):
            widths = getattr(self, name)
            if not widths or min(widths) < 1:
                raise ConfigError(f"{_flag(name)} must list positive widths, got {widths}")
        if self.seed < 0:
            raise ConfigError(f"--seed must be >= 0, got {self.seed}")
        if not self.strategies or not set(self.strategies) <= {0, 1, 2}:
            raise ConfigError(f"--strategies must be a subset of 0,1,2, got {self.strategies}")
        if self.strategy1_rule not in STRATEGY1_RULES:
            raise ConfigError(
                f"--strategy1-rule must be one of {', '.join(STRATEGY1_RULES)}, "
                f"got '{self.strategy1_rule}'"
            )
        if self.log_level not in LOG_LEVELS:
            raise ConfigError(f"--log-level must be one of {', '.join(LOG_LEVELS)}")
        tickers = [ticker for _, ticker in self.inputs]
        duplicates = sorted({ticker for ticker in tickers if tickers.count(ticker) > 1})
        if duplicates:
            raise ConfigError(f"duplicate ticker(s) in --input: {', '.join(duplicates)}")

    def predictor_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lookback=self.lookback,
            dropout=self.dropout,
            learning_rate=self.learning_rate,
            seed=self.seed,
            hidden_sizes=self.hidden_sizes,
            clip_norm=self.clip_norm,
        )

    def autoencoder_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lookback=self.ae_lookback,
            dropout=self.dropout,
            learning_rate=self.learning_rate,
            seed=self.seed,
            hidden_sizes=self.ae_hidden_sizes,
            clip_norm=self.clip_norm,
        )

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {}
        for item in fields(self):
            value = getattr(self, item.name)
            if item.name == "inputs":
                value = [f"{path}={ticker}" for path, ticker in value]
            elif isinstance(value, Path):
                value = str(value)
            elif isinstance(value, tuple):
                value = list(value)
            data[item.name] = value
        return data


def _flag(name: str) -> str:
    if name == "inputs":
        return "--input"
    return "--" + name.replace("_", "-")


def env_name(name: str) -> str:
    return ENV_PREFIX + _flag(name)[2:].upper().replace("-", "_")


def parse_input_spec(spec: str) -> Tuple[Path, str]:
    if "=" not in spec:
        raise ConfigError(f"invalid --input '{spec}'; expected PATH=TICKER")
    raw_path, ticker = spec.rsplit("=", 1)
    raw_path, ticker = raw_path.strip(), ticker.strip()
    if not raw_path or not ticker:
        raise ConfigError(f"invalid --input '{spec}'; expected PATH=TICKER")
    return Path(raw_path), ticker


def _items(raw: Any) -> List[Any]:
    if isinstance(raw, (list, tuple)):
        return list(raw)
    return [token for token in str(raw).split(",") if token.strip()]


def _to_bool(raw: Any) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in {"1", "true", "yes", "on"}:
        return True
    if text in {"0", "false", "no", "off", ""}:
        return False
    raise ValueError(raw)


def _to_int(raw: Any) -> int:
    if isinstance(raw, bool):
        raise ValueError(raw)
    return int(str(raw).strip())


def _to_int_tuple(raw: Any) -> Tuple[int, ...]:
    return tuple(_to_int(item) for item in _items(raw))


def _to_inputs(raw: Any) -> Tuple[Tuple[Path, str], ...]:
    return tuple(parse_input_spec(str(item)) for item in _items(raw))


CONVERTERS: Dict[str, Callable[[Any], Any]] = {
    "inputs": _to_inputs,
    "strategies": _to_int_tuple,
    "split_ratio": float,
    "lookback": _to_int,
    "ae_lookback": _to_int,
    "dropout": float,
    "epochs": _to_int,
    "batch_size": _to_int,
    "learning_rate": float,
    "clip_norm": float,
    "hidden_sizes": _to_int_tuple,
    "ae_hidden_sizes": _to_int_tuple,
    "threshold": float,
    "strict_threshold": _to_bool,
    "hold_days": _to_int,
    "strategy1_rule": lambda raw: str(raw).strip(),
    "no_context": _to_bool,
    "seed": _to_int,
    "out": lambda raw: Path(str(raw)),
    "plot": _to_bool,
    "log_level": lambda raw: str(raw).strip().upper(),
}
BOOLEAN_FLAGS = {
    "strict_threshold": "Flag breakouts only when the MAE strictly exceeds the threshold.",
    "no_context": "Do not prepend training bars to the test split before windowing.",
    "plot": "Also write PNG figures (requires matplotlib).",
}
FLAG_HELP = {
    "inputs": "Price CSV and its ticker as PATH=TICKER (repeatable).",
    "strategies": "Comma-separated subset of 0 (buy and hold), 1 (prediction), 2 (breakout).",
    "split_ratio": "Fraction of bars used for training, in (0, 1).",
    "lookback": "Prediction window in trading days.",
    "ae_lookback": "Autoencoder window in trading days.",
    "dropout": "Dropout rate after every LSTM layer, in [0, 1).",
    "epochs": "Training epochs for both networks.",
    "batch_size": "Mini-batch size for both networks.",
    "learning_rate": "Adam learning rate.",
    "clip_norm": "Global gradient-norm clip.",
    "hidden_sizes": "Prediction LSTM widths, e.g. 50,50.",
    "ae_hidden_sizes": "Autoencoder encoder widths; the last is the latent size.",
    "threshold": "Reconstruction-MAE breakout threshold, in (0, 1].",
    "hold_days": "Trading days a breakout position is held.",
    "strategy1_rule": f"Prediction trading rule: {', '.join(STRATEGY1_RULES)}.",
    "seed": "Seed for initialization, shuffling and dropout.",
    "out": "Output directory.",
    "log_level": f"Logging level: {', '.join(LOG_LEVELS)}.",
}


class ConfigArgumentParser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as ConfigError instead of exiting."""

    def error(self, message: str) -> Any:  # type: ignore[override]
        raise ConfigError(message)


def build_parser(prog: str = "lstm-trading-lab") -> ConfigArgumentParser:
    parser = ConfigArgumentParser(
        prog=prog,
        description="Backtest LSTM price-prediction and breakout-detection trading strategies.",
        allow_abbrev=False,
    )
    parser.add_argument("--preset", help="Named preset supplying defaults (e.g. baseline, desk).")
    for name in CONVERTERS:
        if name in BOOLEAN_FLAGS:
            parser.add_argument(
                _flag(name), dest=name, action="store_true", default=None, help=BOOLEAN_FLAGS[name]
            )
        elif name == "inputs":
            parser.add_argument(
                "--input", dest="inputs", action="append", metavar="PATH=TICKER", help=FLAG_HELP[name]
            )
        else:
            parser.add_argument(_flag(name), dest=name, help=FLAG_HELP[name])
    return parser


def config_from_dict(values: Mapping[str, Any], preset: str | None = None) -> RunConfig:
    """Coerce raw values (strings, JSON scalars or lists) into a validated RunConfig."""

    coerced: Dict[str, Any] = {}
    for name, raw in values.items():
        if name == "preset":
            preset = preset or raw
            continue
        if name not in CONVERTERS:
            raise ConfigError(f"unknown setting '{name}'")
        try:
            coerced[name] = CONVERTERS[name](raw)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{_flag(name)}: invalid value {raw!r}") from exc
    return RunConfig(preset=preset, **coerced)


def validate_config(
    argv: Sequence[str] | None = None, environ: Mapping[str, str] | None = None
) -> RunConfig:
    """Resolve settings with precedence flag > environment > preset > defaults."""

    args = build_parser().parse_args(None if argv is None else list(argv))
    environ = os.environ if environ is None else environ
    preset = args.preset or environ.get(ENV_PREFIX + "PRESET") or None
    values: Dict[str, Any] = {}
    if preset:
        values.update(load_preset(preset))
    for name in CONVERTERS:
        if env_name(name) in environ:
            values[name] = environ[env_name(name)]
    for name in CONVERTERS:
        given = getattr(args, name)
        if given is not None:
            values[name] = given
    return config_from_dict(values, preset)


def configure_logging(level: str) -> None:
    logging.basicConfig(level=level, stream=sys.stderr, format=LOG_FORMAT)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, TrainingError):
        return EXIT_TRAINING
    if isinstance(exc, (DataError, ValueError)) and not isinstance(exc, ConfigError):
        return EXIT_DATA
    return EXIT_CONFIG


def report_failure(exc: BaseException) -> int:
    message = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
    print(f"error: {message}", file=sys.stderr)
    return exit_code_for(exc)


@dataclass(slots=True)
class Strategy1Outcome:
    test: PriceSeries
    predictions: PredictionSeries
    ledger: Ledger
    report: BacktestReport


@dataclass(slots=True)
class Strategy2Outcome:
    test: PriceSeries
    labels: List[AnomalyLabel]
    ledger: Ledger
    report: BacktestReport


def backtest_strategy1(
    config: RunConfig, split: SplitSeries, predictor: PricePredictor
) -> Strategy1Outcome:
    predictions = predict_test(predictor, split, prepend_context=not config.no_context)
    test = split.test.tail(len(predictions))
    ledger, report = run_strategy1(test, predictions, rule=config.strategy1_rule)
    return Strategy1Outcome(test, predictions, ledger, report)


def backtest_strategy2(
    config: RunConfig, split: SplitSeries, model: AutoencoderModel
) -> Strategy2Outcome:
    context = None if config.no_context else split.train
    errors = reconstruction_errors(model, split.test, context=context)
    labels = label_anomalies(errors, config.threshold, inclusive=not config.strict_threshold)
    test = split.test.tail(len(labels))
    ledger, report = run_strategy2(test, labels, hold_days=config.hold_days)
    return Strategy2Outcome(test, labels, ledger, report)


def _metadata(config: RunConfig, ticker: str, strategy: int, **extra: Any) -> Dict[str, Any]:
    metadata: Dict[str, Any] = {
        "ticker": ticker,
        "strategy": strategy,
        "strategy_name": STRATEGY_NAMES[strategy],
        "seed": config.seed,
    }
    metadata.update(extra)
    return metadata


def _try_plot(plot: Callable[..., None], *args: Any, output_path: Path) -> None:
    try:
        plot(*args, output_path=str(output_path))
    except ImportError as exc:
        logger.warning("Skipping %s: %s", output_path.name, exc)


def _write_strategy1(config: RunConfig, job_dir: Path, split: SplitSeries) -> ComparisonRow:
    ticker = split.test.ticker
    out = job_dir / "strategy1"
    out.mkdir(parents=True, exist_ok=True)
    train_config = config.predictor_config()
    predictor = fit_predictor(split, train_config)
    outcome = backtest_strategy1(config, split, predictor)
    write_report(
        out / "report.json",
        outcome.report,
        _metadata(
            config,
            ticker,
            1,
            rule=config.strategy1_rule,
            test_start=outcome.test.dates[0].isoformat(),
            test_end=outcome.test.dates[-1].isoformat(),
        ),
    )
    write_ledger(outcome.ledger, out / "ledger.csv")
    write_predictions(outcome.predictions, out / "predictions.csv")
    emit_overlay(outcome.predictions, out / "overlay")
    errors = squared_errors(outcome.predictions)
    try:
        density = gaussian_kde(errors)
    except ValueError as exc:
        density = None
        logger.warning("%s: no error density (%s)", ticker, exc)
    else:
        write_density(density, out / "error_density.csv")
    write_histogram(error_histogram(errors), out / "error_histogram.csv")
    write_loss_history(predictor.losses, out / "loss_history.csv")
    save_checkpoint(out / "checkpoint.npz", predictor, train_config)
    if config.plot:
        _try_plot(visualize.plot_predictions, outcome.predictions, output_path=out / "predictions.png")
        _try_plot(
            visualize.plot_loss_curves, [predictor.losses], ["prediction"], output_path=out / "loss.png"
        )
        if density is not None:
            _try_plot(visualize.plot_error_density, density, output_path=out / "error_density.png")
    return ComparisonRow(ticker, STRATEGY_NAMES[1], outcome.report)


def _write_strategy2(config: RunConfig, job_dir: Path, split: SplitSeries) -> ComparisonRow:
    ticker = split.test.ticker
    out = job_dir / "strategy2"
    out.mkdir(parents=True, exist_ok=True)
    train_config = config.autoencoder_config()
    model = fit_autoencoder(split, train_config)
    outcome = backtest_strategy2(config, split, model)
    breakouts = BreakoutSeries(outcome.test, tuple(outcome.labels))
    write_report(
        out / "report.json",
        outcome.report,
        _metadata(
            config,
            ticker,
            2,
            threshold=config.threshold,
            strict_threshold=config.strict_threshold,
            hold_days=config.hold_days,
            anomalies=breakouts.anomaly_count,
            test_start=outcome.test.dates[0].isoformat(),
            test_end=outcome.test.dates[-1].isoformat(),
        ),
    )
    write_ledger(outcome.ledger, out / "ledger.csv")
    write_anomalies(outcome.labels, out / "anomalies.csv")
    emit_overlay(breakouts, out / "overlay")
    write_loss_history(model.losses, out / "loss_history.csv")
    save_checkpoint(out / "checkpoint.npz", model, train_config)
    if config.plot:
        _try_plot(visualize.plot_breakouts, breakouts, output_path=out / "breakouts.png")
        _try_plot(
            visualize.plot_loss_curves, [model.losses], ["autoencoder"], output_path=out / "loss.png"
        )
    return ComparisonRow(ticker, STRATEGY_NAMES[2], outcome.report)


def run_ticker(config: RunConfig, path: Path, ticker: str, job_dir: Path) -> List[ComparisonRow]:
    """One independent job: every requested strategy for one input file."""

    series = parse_csv(path, ticker)
    job_dir.mkdir(parents=True, exist_ok=True)
    emit_price_overlay(series, job_dir / "prices")
    if config.plot:
        _try_plot(visualize.plot_price_history, series, output_path=job_dir / "prices.png")
    split = split_train_test(series, config.split_ratio)
    rows: List[ComparisonRow] = []
    if 0 in config.strategies:
        out = job_dir / "strategy0"
        out.mkdir(parents=True, exist_ok=True)
        report = run_buy_and_hold(series)
        write_report(
            out / "report.json",
            report,
            _metadata(
                config,
                ticker,
                0,
                start=series.dates[0].isoformat(),
                end=series.dates[-1].isoformat(),
            ),
        )
        rows.append(ComparisonRow(ticker, STRATEGY_NAMES[0], report))
    if 1 in config.strategies:
        rows.append(_write_strategy1(config, job_dir, split))
    if 2 in config.strategies:
        rows.append(_write_strategy2(config, job_dir, split))
    return rows


def run(config: RunConfig) -> int:
    """Run every ticker job, then write and print the comparison of the completed ones."""

    if not config.inputs:
        raise ConfigError("at least one --input PATH=TICKER is required")
    config.out.mkdir(parents=True, exist_ok=True)
    dump_json(config.to_dict(), config.out / "resolved_config.json")
    rows: List[ComparisonRow] = []
    status = EXIT_OK
    for path, ticker in config.inputs:
        job_dir = config.out / ticker
        marker = job_dir / INCOMPLETE_MARKER
        marker.unlink(missing_ok=True)
        logger.info("Running %s from %s into %s", ticker, path, job_dir)
        try:
            rows.extend(run_ticker(config, path, ticker, job_dir))
        except (LabError, ValueError, OSError) as exc:
            code = report_failure(exc)
            status = status or code
            job_dir.mkdir(parents=True, exist_ok=True)
            marker.write_text(f"{exc}\n")
    if rows:
        table = render_comparison_table(rows)
        (config.out / "comparison.txt").write_text(table + "\n")
        dump_json(comparison_to_records(rows), config.out / "comparison.json")
        print(table)
    return status


def main(argv: Sequence[str] | None = None) -> int:
    try:
        config = validate_config(argv)
    except LabError as exc:
        return report_failure(exc)
    configure_logging(config.log_level)
    try:
        return run(config)
    except (LabError, OSError) as exc:
        return report_failure(exc)


if __name__ == "__main__":
    raise SystemExit(main())
