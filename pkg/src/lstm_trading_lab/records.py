from __future__ import annotations

import json
from decimal import Decimal
from pathlib import Path
from typing import Any, Dict, Sequence, Tuple

import numpy as np
import pandas as pd

from .anomaly import AutoencoderModel, LstmAutoencoder
from .backtester import BacktestReport, Ledger
from .errors import DataError
from .neural import DropoutSpec, LstmRegressor, Network, TrainConfig
from .predictor import PricePredictor
from .preprocess import MinMaxScaler
from .types import AnomalyLabel, PredictionSeries

CHECKPOINT_FORMAT_VERSION = 1
_HEADER_KEY = "__header__"

LEDGER_COLUMNS = ("entry_date", "entry_price", "exit_date", "exit_price", "pnl", "forced_exit")


def dump_json(payload: Any, path: str | Path) -> None:
    """Sorted keys and two-space indentation so equal payloads give equal bytes."""

    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n")


def report_to_dict(
    report: BacktestReport, metadata: Dict[str, Any] | None = None
) -> Dict[str, Any]:
    record = report.summary()
    record["metadata"] = metadata or {}
    return record


def dict_to_report(data: Dict[str, Any]) -> BacktestReport:
    return BacktestReport(
        profit=Decimal(str(data.get("profit", "0"))),
        profitable=data.get("profitable"),
        unprofitable=data.get("unprofitable"),
        total=data.get("total"),
        forced_exits=data.get("forced_exits"),
    )


def write_report(
    path: str | Path,
    report: BacktestReport,
    metadata: Dict[str, Any] | None = None,
) -> None:
    dump_json(report_to_dict(report, metadata), path)


def load_report(path: str | Path) -> Tuple[BacktestReport, Dict[str, Any]]:
    data = json.loads(Path(path).read_text())
    return dict_to_report(data), data.get("metadata", {})


def ledger_frame(ledger: Ledger) -> pd.DataFrame:
    rows = [
        {
            "entry_date": trade.entry_date.isoformat(),
            "entry_price": str(trade.entry_price),
            "exit_date": trade.exit_date.isoformat(),
            "exit_price": str(trade.exit_price),
            "pnl": str(trade.pnl),
            "forced_exit": trade.forced_exit,
        }
        for trade in ledger.trades
    ]
    return pd.DataFrame(rows, columns=list(LEDGER_COLUMNS))


def write_ledger(ledger: Ledger, path: str | Path) -> None:
    ledger_frame(ledger).to_csv(path, index=False)


def write_predictions(predictions: PredictionSeries, path: str | Path) -> None:
    frame = pd.DataFrame(
        {
            "date": [day.isoformat() for day in predictions.dates],
            "actual": predictions.actual,
            "predicted": predictions.predicted,
            "squared_error": [
                (pred - act) ** 2 for pred, act in zip(predictions.predicted, predictions.actual)
            ],
        }
    )
    frame.to_csv(path, index=False)


def write_anomalies(labels: Sequence[AnomalyLabel], path: str | Path) -> None:
    frame = pd.DataFrame(
        {
            "date": [label.date.isoformat() for label in labels],
            "reconstruction_mae": [label.reconstruction_mae for label in labels],
            "is_anomaly": [label.is_anomaly for label in labels],
        }
    )
    frame.to_csv(path, index=False)


def write_loss_history(losses: Sequence[float], path: str | Path) -> None:
    frame = pd.DataFrame({"epoch": range(1, len(losses) + 1), "loss": list(losses)})
    frame.to_csv(path, index=False)


def save_checkpoint(
    path: str | Path,
    model: PricePredictor | AutoencoderModel,
    config: TrainConfig,
) -> None:
    """Store every parameter tensor plus a JSON header describing how to rebuild the model."""

    network = model.network
    params = network.parameters()
    header = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "kind": network.kind,
        "architecture": network.architecture(),
        "shapes": {name: list(array.shape) for name, array in params.items()},
        "scaler": {"min": model.scaler.min, "max": model.scaler.max},
        "config": config.to_dict(),
        "seed": config.seed,
        "losses": list(model.losses),
    }
    arrays: Dict[str, Any] = dict(params)
    arrays[_HEADER_KEY] = np.array(json.dumps(header, sort_keys=True))
    with Path(path).open("wb") as handle:
        np.savez(handle, **arrays)


def load_checkpoint(path: str | Path) -> Tuple[PricePredictor | AutoencoderModel, Dict[str, Any]]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as archive:
        if _HEADER_KEY not in archive.files:
            raise DataError(f"{path}: not a checkpoint (missing header)")
        header = json.loads(str(archive[_HEADER_KEY]))
        if header.get("format_version") != CHECKPOINT_FORMAT_VERSION:
            raise DataError(
                f"{path}: unsupported checkpoint format {header.get('format_version')}"
            )
        network = _build_network(header, path)
        params = network.parameters()
        if set(params) != set(header["shapes"]):
            raise DataError(f"{path}: parameter names do not match a {header['kind']} network")
        for name, live in params.items():
            stored = archive[name]
            if stored.shape != live.shape:
                raise DataError(
                    f"{path}: parameter {name} has shape {stored.shape}, expected {live.shape}"
                )
            live[...] = stored
    scaler = MinMaxScaler(min=header["scaler"]["min"], max=header["scaler"]["max"])
    losses = [float(value) for value in header.get("losses", [])]
    model: PricePredictor | AutoencoderModel
    if isinstance(network, LstmAutoencoder):
        model = AutoencoderModel(network=network, scaler=scaler, losses=losses)
    else:
        model = PricePredictor(network=network, scaler=scaler, losses=losses)
    return model, header


def _build_network(header: Dict[str, Any], path: Path) -> Network:
    arch = header["architecture"]
    kwargs: Dict[str, Any] = {
        "lookback": int(arch["lookback"]),
        "hidden_sizes": tuple(int(width) for width in arch["hidden_sizes"]),
        "dropout": DropoutSpec(float(arch["dropout"])),
        "rng": np.random.default_rng(0),
    }
    if header["kind"] == LstmRegressor.kind:
        return LstmRegressor(**kwargs)
    if header["kind"] == LstmAutoencoder.kind:
        return LstmAutoencoder(**kwargs)
    raise DataError(f"{path}: unknown model kind '{header['kind']}'")
