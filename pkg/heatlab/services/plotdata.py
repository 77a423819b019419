from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

from ..errors import ConfigError, UnknownCheckError
from ..models import SeriesTable, ValidationReport
from .tables_io import read_report_csv

logger = logging.getLogger(__name__)

SUFFIX = ".dat"


def render_series(check: str, series: SeriesTable) -> str:
    """Whitespace-separated columns under a comment header gnuplot skips."""
    lines = [
        f"# check: {check}",
        f"# columns: {' '.join(series.columns)}",
        f"# units: {' '.join(series.units)}",
    ]
    lines += [" ".join(repr(float(v)) for v in row) for row in series.rows]
    return "\n".join(lines) + "\n"


def parse_series(text: str) -> tuple[str, SeriesTable]:
    header: dict[str, str] = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            header[key] = value
        elif line.strip():
            rows.append(tuple(float(v) for v in line.split()))
    if "columns" not in header:
        raise ConfigError("plot-data file has no column header", field="path")
    series = SeriesTable(
        columns=tuple(header["columns"].split()),
        units=tuple(header.get("units", "").split()),
        rows=tuple(rows),
    )
    return header.get("check", ""), series


def emit_plotdata(report: ValidationReport, which: str, path: Optional[Path] = None) -> str:
    if which not in report.series:
        raise UnknownCheckError(which, report.series)
    text = render_series(which, report.series[which])
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
        logger.info("wrote %s plot data to %s", which, path)
    return text


def write_all_series(report: ValidationReport, directory: Path) -> list[Path]:
    paths = []
    for check in report.checks:
        path = Path(directory) / f"{check}{SUFFIX}"
        emit_plotdata(report, check, path)
        paths.append(path)
    return paths


def load_report(path: Path) -> ValidationReport:
    """Report CSV plus the plot-data files next to it."""
    path = Path(path)
    report = read_report_csv(path)
    for row in report.rows:
        series_path = path.parent / f"{row.check}{SUFFIX}"
        if row.check not in report.series and series_path.exists():
            _, series = parse_series(series_path.read_text(encoding="utf-8"))
            report.series[row.check] = series
    return report
