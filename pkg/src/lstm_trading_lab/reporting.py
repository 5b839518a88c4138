"""Comparison tables, squared-error densities and plot-ready overlay files."""

from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import date
from decimal import Decimal
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, stats

from .backtester import BacktestReport
from .types import BreakoutSeries, PredictionSeries, PriceSeries

logger = logging.getLogger(__name__)

TABLE_COLUMNS = (
    "Stock",
    "Strategy",
    "Profitable",
    "Unprofitable",
    "Total",
    "Success Rate",
    "Profits ($)",
)
STRATEGY_NAMES = {0: "Buy and Hold", 1: "LSTM Prediction", 2: "Breakout Detection"}
NOT_APPLICABLE = "N/A"
PREDICTIONS_PER_BIN = 50

_SVG_NS = "http://www.w3.org/2000/svg"
_SVG_WIDTH = 800
_SVG_HEIGHT = 320
_SVG_MARGIN = 30
_LINE_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c")


@dataclass(frozen=True, slots=True)
class DensityEstimate:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float

    def __post_init__(self) -> None:
        if self.grid.shape != self.density.shape:
            raise ValueError("grid and density must have the same shape.")
        if np.any(self.density < 0.0):
            raise ValueError("Density values must be non-negative.")

    def integral(self) -> float:
        return float(integrate.trapezoid(self.density, self.grid))


@dataclass(frozen=True, slots=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True, slots=True)
class ComparisonRow:
    ticker: str
    strategy: str
    report: BacktestReport


def gaussian_kde(samples: Sequence[float] | np.ndarray, grid_points: int = 512) -> DensityEstimate:
    """Gaussian KDE with Scott's-rule bandwidth on a grid spanning [min - 3h, max + 3h]."""

    values = np.asarray(samples, dtype=np.float64).ravel()
    if values.size < 2:
        raise ValueError(f"KDE needs at least 2 samples, got {values.size}.")
    if not np.all(np.isfinite(values)):
        raise ValueError("KDE samples must be finite.")
    if np.ptp(values) == 0.0:
        raise ValueError("KDE samples have zero variance.")
    if grid_points < 2:
        raise ValueError(f"grid_points must be >= 2, got {grid_points}.")
    kernel = stats.gaussian_kde(values, bw_method="scott")
    bandwidth = float(np.sqrt(kernel.covariance[0, 0]))
    grid = np.linspace(values.min() - 3 * bandwidth, values.max() + 3 * bandwidth, grid_points)
    return DensityEstimate(grid=grid, density=kernel(grid), bandwidth=bandwidth)


def error_histogram(
    samples: Sequence[float] | np.ndarray, per_bin: int = PREDICTIONS_PER_BIN
) -> Histogram:
    """Equal-width bins sized so an average bin holds about `per_bin` samples."""

    values = np.asarray(samples, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("Cannot bin an empty sample.")
    if per_bin < 1:
        raise ValueError(f"per_bin must be >= 1, got {per_bin}.")
    bins = max(1, int(round(values.size / per_bin)))
    counts, edges = np.histogram(values, bins=bins)
    return Histogram(edges=edges, counts=counts)


def format_success_rate(rate: float | None) -> str:
    if rate is None:
        return NOT_APPLICABLE
    return f"{rate * 100:.2f}%"


def format_profit(profit: Decimal) -> str:
    return f"{profit:.2f}"


def _row_cells(row: ComparisonRow) -> Tuple[str, ...]:
    report = row.report
    if not report.has_counts:
        counts = (NOT_APPLICABLE,) * 4
    else:
        counts = (
            str(report.profitable),
            str(report.unprofitable),
            str(report.total),
            format_success_rate(report.success_rate),
        )
    return (row.ticker, row.strategy, *counts, format_profit(report.profit))


def render_comparison_table(rows: Sequence[ComparisonRow]) -> str:
    if not rows:
        raise ValueError("No reports to tabulate.")
    body = [_row_cells(row) for row in rows]
    widths = [
        max(len(column), *(len(cells[index]) for cells in body))
        for index, column in enumerate(TABLE_COLUMNS)
    ]

    def line(cells: Sequence[str]) -> str:
        first, second, *numbers = cells
        parts = [first.ljust(widths[0]), second.ljust(widths[1])]
        parts.extend(cell.rjust(width) for cell, width in zip(numbers, widths[2:]))
        return "  ".join(parts).rstrip()

    rule = "  ".join("-" * width for width in widths)
    return "\n".join([line(TABLE_COLUMNS), rule, *(line(cells) for cells in body)])


def comparison_to_records(rows: Sequence[ComparisonRow]) -> List[Dict[str, Any]]:
    records: List[Dict[str, Any]] = []
    for row in rows:
        record: Dict[str, Any] = {"stock": row.ticker, "strategy": row.strategy}
        record.update(row.report.summary())
        records.append(record)
    return records


def write_density(estimate: DensityEstimate, path: str | Path) -> None:
    frame = pd.DataFrame({"squared_error": estimate.grid, "density": estimate.density})
    frame.to_csv(path, index=False)


def write_histogram(histogram: Histogram, path: str | Path) -> None:
    frame = pd.DataFrame(
        {
            "bin_start": histogram.edges[:-1],
            "bin_end": histogram.edges[1:],
            "count": histogram.counts,
        }
    )
    frame.to_csv(path, index=False)


def emit_overlay(
    overlay: PredictionSeries | BreakoutSeries, out: str | Path
) -> Tuple[Path, Path]:
    """Write `<out>.csv` with the aligned series and `<out>.svg` with a line chart.

    Prediction overlays draw actual against predicted; breakout overlays draw the
    price line with one `class="anomaly"` circle per flagged bar.
    """

    out = Path(out)
    if isinstance(overlay, PredictionSeries):
        if len(overlay) == 0:
            raise ValueError("Cannot draw an empty prediction overlay.")
        frame = pd.DataFrame(
            {
                "date": [day.isoformat() for day in overlay.dates],
                "actual": overlay.actual,
                "predicted": overlay.predicted,
            }
        )
        lines: Dict[str, Sequence[float]] = {
            "actual": overlay.actual,
            "predicted": overlay.predicted,
        }
        markers: List[int] = []
        dates = overlay.dates
        title = "Actual vs predicted adjusted close"
    else:
        series = overlay.series
        closes = [float(close) for close in series.closes]
        frame = pd.DataFrame(
            {
                "date": [day.isoformat() for day in series.dates],
                "adj_close": [str(close) for close in series.closes],
                "reconstruction_mae": [label.reconstruction_mae for label in overlay.labels],
                "is_anomaly": [label.is_anomaly for label in overlay.labels],
            }
        )
        lines = {"adj_close": closes}
        markers = [index for index, label in enumerate(overlay.labels) if label.is_anomaly]
        dates = series.dates
        title = f"{series.ticker} breakouts ({len(markers)} flagged)"
    return _write_overlay(out, frame, dates, lines, markers, title)


def emit_price_overlay(series: PriceSeries, out: str | Path) -> Tuple[Path, Path]:
    frame = pd.DataFrame(
        {
            "date": [day.isoformat() for day in series.dates],
            "adj_close": [str(close) for close in series.closes],
        }
    )
    lines = {"adj_close": [float(close) for close in series.closes]}
    return _write_overlay(
        Path(out), frame, series.dates, lines, [], f"{series.ticker} adjusted close"
    )


def _write_overlay(
    out: Path,
    frame: pd.DataFrame,
    dates: Sequence[date],
    lines: Mapping[str, Sequence[float]],
    markers: Sequence[int],
    title: str,
) -> Tuple[Path, Path]:
    csv_path = out.with_suffix(".csv")
    svg_path = out.with_suffix(".svg")
    frame.to_csv(csv_path, index=False)
    tree = ET.ElementTree(_line_chart(title, dates, lines, markers))
    ET.indent(tree)
    tree.write(svg_path, encoding="utf-8", xml_declaration=True)
    logger.debug("Wrote overlay %s (%d rows, %d markers)", svg_path, len(frame), len(markers))
    return csv_path, svg_path


def _line_chart(
    title: str,
    dates: Sequence[date],
    lines: Mapping[str, Sequence[float]],
    markers: Sequence[int],
) -> ET.Element:
    count = len(dates)
    every = np.concatenate([np.asarray(values, dtype=np.float64) for values in lines.values()])
    low, high = float(every.min()), float(every.max())
    span = high - low or 1.0
    inner_w = _SVG_WIDTH - 2 * _SVG_MARGIN
    inner_h = _SVG_HEIGHT - 2 * _SVG_MARGIN

    def point(index: int, value: float) -> Tuple[float, float]:
        x = _SVG_MARGIN + inner_w * index / max(count - 1, 1)
        y = _SVG_MARGIN + inner_h * (1.0 - (value - low) / span)
        return x, y

    root = ET.Element(
        "svg",
        {
            "xmlns": _SVG_NS,
            "width": str(_SVG_WIDTH),
            "height": str(_SVG_HEIGHT),
            "viewBox": f"0 0 {_SVG_WIDTH} {_SVG_HEIGHT}",
        },
    )
    ET.SubElement(root, "title").text = title
    caption = ET.SubElement(root, "text", {"x": str(_SVG_MARGIN), "y": "18", "font-size": "12"})
    caption.text = f"{title}: {dates[0].isoformat()} to {dates[-1].isoformat()}"
    first_line = next(iter(lines.values()))
    for color, (name, values) in zip(_LINE_COLORS, lines.items()):
        coords = " ".join(
            "{:.2f},{:.2f}".format(*point(index, value)) for index, value in enumerate(values)
        )
        ET.SubElement(
            root,
            "polyline",
            {"class": name, "points": coords, "fill": "none", "stroke": color},
        )
    for index in markers:
        x, y = point(index, first_line[index])
        ET.SubElement(
            root,
            "circle",
            {
                "class": "anomaly",
                "cx": f"{x:.2f}",
                "cy": f"{y:.2f}",
                "r": "3",
                "fill": "#d62728",
            },
        )
    return root
