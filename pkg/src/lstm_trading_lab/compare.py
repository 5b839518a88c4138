from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence

from .backtester import BacktestReport
from .cli import ConfigArgumentParser, report_failure
from .errors import DataError, LabError
from .records import dump_json, load_report
from .reporting import ComparisonRow, comparison_to_records, render_comparison_table


@dataclass(slots=True)
class ReportSummary:
    label: str
    path: str
    ticker: str
    strategy: str
    report: BacktestReport

    def row(self) -> ComparisonRow:
        return ComparisonRow(self.ticker, self.strategy, self.report)


def summarize(path: str) -> ReportSummary:
    try:
        report, metadata = load_report(path)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: not a backtest report ({exc})") from exc
    label = str(metadata.get("label") or Path(path).parent.name or Path(path).stem)
    return ReportSummary(
        label=label,
        path=str(path),
        ticker=str(metadata.get("ticker") or "-"),
        strategy=str(metadata.get("strategy_name") or label),
        report=report,
    )


SORT_KEYS: Dict[str, Callable[[Any], Any]] = {
    "profit": lambda item: item.report.profit,
    "success": lambda item: (
        -1.0 if item.report.success_rate is None else item.report.success_rate
    ),
    "trades": lambda item: -1 if item.report.total is None else item.report.total,
}


def sort_summaries(
    summaries: List[ReportSummary], sort_by: str = "profit", descending: bool = False
) -> List[ReportSummary]:
    return sorted(summaries, key=SORT_KEYS[sort_by], reverse=descending)


def build_parser() -> argparse.ArgumentParser:
    parser = ConfigArgumentParser(
        prog="lstm-trading-lab-compare",
        description="Tabulate saved report.json files side by side.",
    )
    parser.add_argument("reports", nargs="+", help="Paths to report JSON files.")
    parser.add_argument(
        "--sort-by",
        choices=tuple(SORT_KEYS),
        default="profit",
        help="Metric to sort rows by.",
    )
    parser.add_argument(
        "--descending",
        action="store_true",
        help="Sort in descending order (ascending by default).",
    )
    parser.add_argument("--out-json", help="Write the sorted table to a JSON file.")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        summaries = [summarize(path) for path in args.reports]
    except (LabError, OSError) as exc:
        return report_failure(exc)
    summaries = sort_summaries(summaries, args.sort_by, args.descending)
    rows = [item.row() for item in summaries]
    print(render_comparison_table(rows))
    if args.out_json:
        records = comparison_to_records(rows)
        for record, item in zip(records, summaries):
            record["label"] = item.label
            record["path"] = item.path
        try:
            dump_json(records, args.out_json)
        except OSError as exc:
            return report_failure(exc)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
