"""LSTM trading-strategy backtesting helpers."""

from .anomaly import (
    AutoencoderModel,
    LstmAutoencoder,
    fit_autoencoder,
    label_anomalies,
    reconstruction_errors,
)
from .backtester import (
    BacktestReport,
    BacktestSimulator,
    Ledger,
    Trade,
    compute_report,
    run_buy_and_hold,
    run_strategy1,
    run_strategy2,
)
from .errors import ConfigError, DataError, LabError, LedgerError, TrainingError
from .market_data import parse_csv, split_train_test, write_csv
from .neural import LstmRegressor, TrainConfig, train
from .predictor import PricePredictor, fit_predictor, predict_test
from .presets import list_presets, load_preset
from .records import load_checkpoint, load_report, save_checkpoint, write_report
from .reporting import emit_overlay, gaussian_kde, render_comparison_table
from .strategies import BreakoutHoldRule, PredictedLevelRule, PredictedTrendRule, TradingRule
from .types import (
    AnomalyLabel,
    Bar,
    BreakoutSeries,
    PredictionSeries,
    PriceSeries,
    SplitSeries,
)

__all__ = [
    "AnomalyLabel",
    "AutoencoderModel",
    "BacktestReport",
    "BacktestSimulator",
    "Bar",
    "BreakoutHoldRule",
    "BreakoutSeries",
    "ConfigError",
    "DataError",
    "LabError",
    "Ledger",
    "LedgerError",
    "LstmAutoencoder",
    "LstmRegressor",
    "PredictedLevelRule",
    "PredictedTrendRule",
    "PredictionSeries",
    "PriceSeries",
    "PricePredictor",
    "SplitSeries",
    "Trade",
    "TradingRule",
    "TrainConfig",
    "TrainingError",
    "compute_report",
    "emit_overlay",
    "fit_autoencoder",
    "fit_predictor",
    "gaussian_kde",
    "label_anomalies",
    "list_presets",
    "load_checkpoint",
    "load_preset",
    "load_report",
    "parse_csv",
    "predict_test",
    "reconstruction_errors",
    "render_comparison_table",
    "run_buy_and_hold",
    "run_strategy1",
    "run_strategy2",
    "save_checkpoint",
    "split_train_test",
    "train",
    "write_csv",
    "write_report",
]
