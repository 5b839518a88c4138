"""CSV ingestion, validation and chronological splitting of adjusted-close series."""

from __future__ import annotations

import logging
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from pathlib import Path

import pandas as pd

from .errors import DataError
from .types import Bar, PriceSeries, SplitSeries

logger = logging.getLogger(__name__)

DATE_COLUMNS = ("date",)
ADJ_CLOSE_COLUMNS = ("adj close", "adjclose", "adj_close")
# Header occupies line 1, so the first data row is row 2.
FIRST_DATA_ROW = 2


def _find_column(columns: list[str], accepted: tuple[str, ...], label: str, path: Path) -> str:
    for column in columns:
        if column.strip().lower() in accepted:
            return column
    raise DataError(f"{path}: missing {label} column (accepted headers: {', '.join(accepted)}).")


def parse_csv(path: str | Path, ticker: str) -> PriceSeries:
    """Read a vendor CSV with a date column and an adjusted-close column.

    Rows are sorted by date when the file is unsorted. Errors name the offending
    row as a 1-based line number, counting the header as row 1.
    """

    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"{path}: file is empty") from exc
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: could not parse CSV ({exc})") from exc

    columns = [str(column) for column in frame.columns]
    date_column = _find_column(columns, DATE_COLUMNS, "date", path)
    price_column = _find_column(columns, ADJ_CLOSE_COLUMNS, "adjusted-close", path)

    raw_dates = frame[date_column].str.strip()
    parsed_dates = pd.to_datetime(raw_dates, format="ISO8601", errors="coerce")
    bad_dates = parsed_dates.isna()
    if bad_dates.any():
        row = int(bad_dates.to_numpy().nonzero()[0][0]) + FIRST_DATA_ROW
        raise DataError(f"{path}: unparseable date at row {row}")

    bars: list[Bar] = []
    for offset, (stamp, raw_price) in enumerate(zip(parsed_dates, frame[price_column])):
        row = offset + FIRST_DATA_ROW
        try:
            price = Decimal(str(raw_price).strip())
        except InvalidOperation as exc:
            raise DataError(f"{path}: unparseable price at row {row}") from exc
        if not price.is_finite():
            raise DataError(f"{path}: unparseable price at row {row}")
        if price <= 0:
            raise DataError(f"{path}: non-positive price at row {row}")
        bars.append(Bar(stamp.date(), price))

    duplicated = parsed_dates.duplicated()
    if duplicated.any():
        row = int(duplicated.to_numpy().nonzero()[0][0]) + FIRST_DATA_ROW
        raise DataError(f"{path}: duplicate date {bars[row - FIRST_DATA_ROW].date} at row {row}")

    if len(bars) < 2:
        raise DataError(f"{path}: need at least 2 rows, found {len(bars)}")
    if not parsed_dates.is_monotonic_increasing:
        logger.warning("%s: rows are not in date order; sorting %d bars", path, len(bars))
        bars.sort(key=lambda bar: bar.date)

    logger.info("Loaded %s: %d bars from %s to %s", ticker, len(bars), bars[0].date, bars[-1].date)
    return PriceSeries(ticker, tuple(bars))


def write_csv(series: PriceSeries, path: str | Path) -> None:
    """Serialize a series back to the two-column format `parse_csv` reads."""

    lines = ["Date,Adj Close"]
    lines.extend(f"{bar.date.isoformat()},{bar.adj_close}" for bar in series.bars)
    Path(path).write_text("\n".join(lines) + "\n")


def split_train_test(series: PriceSeries, ratio: float) -> SplitSeries:
    """Chronological split: `ratio * len` bars (rounded half up) for training, the rest for testing."""

    if not 0.0 < ratio < 1.0:
        raise ValueError(f"split ratio must be in (0, 1), got {ratio}.")
    total = len(series)
    # Decimal of the shortest float literal keeps 0.29 * 100 == 29 exactly.
    exact = Decimal(str(float(ratio))) * total
    train_size = int(exact.to_integral_value(rounding=ROUND_HALF_UP))
    if train_size < 1:
        raise DataError(f"{series.ticker}: train side empty ({total} bars at ratio {ratio})")
    if train_size >= total:
        raise DataError(f"{series.ticker}: test side empty ({total} bars at ratio {ratio})")
    split = SplitSeries(
        train=PriceSeries(series.ticker, series.bars[:train_size]),
        test=PriceSeries(series.ticker, series.bars[train_size:]),
        split_ratio=float(ratio),
    )
    logger.info("%s split: %d train / %d test bars", series.ticker, train_size, total - train_size)
    return split
