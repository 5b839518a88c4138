from __future__ import annotations

import importlib
import sys
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Sequence

from .reporting import DensityEstimate
from .types import BreakoutSeries, PredictionSeries, PriceSeries


@dataclass(slots=True)
class BreakoutPlotData:
    dates: List[str]
    closes: List[float]
    anomaly_dates: List[str]
    anomaly_closes: List[float]


def price_history_data(series: PriceSeries) -> Dict[str, List[Any]]:
    return {
        "dates": [day.isoformat() for day in series.dates],
        "adj_close": [float(close) for close in series.closes],
    }


def prediction_data(predictions: PredictionSeries) -> Dict[str, List[Any]]:
    """Actual vs predicted closes plus the squared error per day."""

    return {
        "dates": [day.isoformat() for day in predictions.dates],
        "actual": list(predictions.actual),
        "predicted": list(predictions.predicted),
        "squared_error": [
            (pred - act) ** 2 for pred, act in zip(predictions.predicted, predictions.actual)
        ],
    }


def breakout_data(breakouts: BreakoutSeries) -> BreakoutPlotData:
    dates = [day.isoformat() for day in breakouts.series.dates]
    closes = [float(close) for close in breakouts.series.closes]
    flagged = [index for index, label in enumerate(breakouts.labels) if label.is_anomaly]
    return BreakoutPlotData(
        dates=dates,
        closes=closes,
        anomaly_dates=[dates[index] for index in flagged],
        anomaly_closes=[closes[index] for index in flagged],
    )


def loss_curve_data(losses: Sequence[float]) -> Dict[str, List[float]]:
    return {
        "epochs": [float(epoch) for epoch in range(1, len(losses) + 1)],
        "loss": [float(value) for value in losses],
    }


def plot_price_history(
    series: PriceSeries,
    output_path: str | None = None,
    show: bool = False,
) -> None:
    data = price_history_data(series)
    plt = _require_matplotlib()
    fig, ax = plt.subplots(figsize=(10, 4.5))
    ax.plot(range(len(data["dates"])), data["adj_close"], color="tab:blue", label=series.ticker)
    _label_dates(ax, data["dates"])
    ax.set_ylabel("Adjusted Close ($)")
    ax.legend()
    _finish(plt, fig, output_path, show)


def plot_predictions(
    predictions: PredictionSeries,
    output_path: str | None = None,
    show: bool = False,
) -> None:
    data = prediction_data(predictions)
    if not data["dates"]:
        raise ValueError("PredictionSeries is empty; cannot plot predictions.")
    plt = _require_matplotlib()
    fig, ax = plt.subplots(figsize=(10, 4.5))
    steps = range(len(data["dates"]))
    ax.plot(steps, data["actual"], label="Actual", color="tab:blue")
    ax.plot(steps, data["predicted"], label="Predicted", color="tab:orange")
    _label_dates(ax, data["dates"])
    ax.set_ylabel("Adjusted Close ($)")
    ax.legend()
    _finish(plt, fig, output_path, show)


def plot_breakouts(
    breakouts: BreakoutSeries,
    output_path: str | None = None,
    show: bool = False,
) -> None:
    data = breakout_data(breakouts)
    plt = _require_matplotlib()
    fig, ax = plt.subplots(figsize=(10, 4.5))
    ax.plot(range(len(data.dates)), data.closes, label="Adjusted Close", color="tab:blue")
    index_of = {day: index for index, day in enumerate(data.dates)}
    ax.scatter(
        [index_of[day] for day in data.anomaly_dates],
        data.anomaly_closes,
        color="tab:red",
        label="Breakout",
        zorder=3,
    )
    _label_dates(ax, data.dates)
    ax.set_ylabel("Adjusted Close ($)")
    ax.legend()
    _finish(plt, fig, output_path, show)


def plot_error_density(
    estimate: DensityEstimate,
    output_path: str | None = None,
    show: bool = False,
) -> None:
    plt = _require_matplotlib()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(estimate.grid, estimate.density, color="tab:purple")
    ax.fill_between(estimate.grid, estimate.density, alpha=0.3, color="tab:purple")
    ax.set_xlabel("Squared Error")
    ax.set_ylabel("Density")
    ax.set_title(f"Gaussian KDE (bandwidth {estimate.bandwidth:.4g})")
    _finish(plt, fig, output_path, show)


def plot_loss_curves(
    histories: Sequence[Sequence[float]],
    labels: Sequence[str],
    output_path: str | None = None,
    show: bool = False,
) -> None:
    if not histories:
        raise ValueError("No loss histories provided.")
    plt = _require_matplotlib()
    fig, ax = plt.subplots(figsize=(8, 4.5))
    colors = _color_cycle()
    for losses, label in zip(histories, labels, strict=True):
        data = loss_curve_data(losses)
        ax.plot(data["epochs"], data["loss"], label=label, color=next(colors))
    ax.set_xlabel("Epoch")
    ax.set_ylabel("Training Loss")
    ax.set_yscale("log")
    ax.legend()
    _finish(plt, fig, output_path, show)


def _label_dates(ax: Any, dates: Sequence[str], ticks: int = 6) -> None:
    if not dates:
        return
    step = max(1, len(dates) // ticks)
    positions = list(range(0, len(dates), step))
    ax.set_xticks(positions)
    ax.set_xticklabels([dates[index] for index in positions], rotation=30, ha="right")


def _finish(plt: Any, fig: Any, output_path: str | None, show: bool) -> None:
    fig.tight_layout()
    if output_path:
        fig.savefig(output_path, bbox_inches="tight")
    if show:
        plt.show()
    plt.close(fig)


def _require_matplotlib() -> Any:
    try:
        matplotlib = importlib.import_module("matplotlib")
        if "matplotlib.pyplot" not in sys.modules:
            matplotlib.use("Agg", force=True)
        return importlib.import_module("matplotlib.pyplot")
    except Exception as exc:  # pragma: no cover - depends on matplotlib presence
        raise ImportError(
            "matplotlib is required for plotting. Install it via 'pip install lstm-trading-lab[plot]'."
        ) from exc


def _color_cycle() -> Iterator[str]:
    from itertools import cycle

    return cycle(["tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple"])
