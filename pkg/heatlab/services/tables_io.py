"""
CSV artifacts: renewal tables, validation reports and raw simulation results.

Every file opens with `# key: value` comment lines (provenance and config
echo) followed by a csv header row. Floats are written with repr so a reread
reproduces them exactly.
"""
from __future__ import annotations

import csv
import io
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ..errors import ConfigError
from ..models import GeometricGrid, PathBatch, ReportRow, RenewalTable, ValidationReport
from ..processors.simulator import EXIT_KINDS

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ("check", "grid", "min_ratio", "max_ratio", "ceiling", "status", "config_hash", "note")
RENEWAL_COLUMNS = ("r", "V", "Vprime")


# ----------------------------
# Generic framing
# ----------------------------
def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(
        path: Path,
        columns: Sequence[str],
        rows: Iterable[Sequence],
        meta: Optional[dict[str, str]] = None,
        echo: Sequence[str] = (),
) -> Path:
    buffer = io.StringIO()
    for key, value in (meta or {}).items():
        buffer.write(f"# {key}: {value}\n")
    for line in echo:
        buffer.write(f"# config {line}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buffer.getvalue(), encoding="utf-8")
    return path


def read_csv(path: Path) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """(metadata, header, rows); config echo lines are skipped."""
    meta: dict[str, str] = {}
    body: list[str] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("# "):
            if line.startswith("# config "):
                continue
            key, sep, value = line[2:].partition(": ")
            if sep:
                meta[key] = value
            continue
        body.append(line)
    reader = csv.reader(body)
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError(f"{path} has no header row", field="path") from None
    return meta, header, list(reader)


# ----------------------------
# Renewal tables
# ----------------------------
def write_renewal_table(table: RenewalTable, path: Path, echo: Sequence[str] = ()) -> Path:
    meta = {
        "backend": table.backend,
        "fingerprint": table.fingerprint,
        "normalization": repr(table.normalization),
        "grid": f"{table.grid.lo!r} {table.grid.hi!r} {table.grid.per_decade}",
    }
    rows = zip(table.radii, table.values, table.derivative)
    logger.info("writing renewal table (%d radii) to %s", table.radii.size, path)
    return write_csv(path, RENEWAL_COLUMNS, rows, meta, echo)


def read_renewal_table(path: Path) -> RenewalTable:
    meta, header, rows = read_csv(path)
    if tuple(header) != RENEWAL_COLUMNS:
        raise ConfigError(f"{path} is not a renewal table (header {header})", field="path")
    lo, hi, per_decade = meta["grid"].split()
    data = np.array(rows, dtype=float)
    return RenewalTable(
        radii=data[:, 0],
        values=data[:, 1],
        derivative=data[:, 2],
        backend=meta["backend"],
        fingerprint=meta["fingerprint"],
        normalization=float(meta["normalization"]),
        grid=GeometricGrid(float(lo), float(hi), int(per_decade)),
    )


# ----------------------------
# Reports
# ----------------------------
def write_report_csv(report: ValidationReport, path: Path, echo: Sequence[str] = ()) -> Path:
    rows = (
        (r.check, r.grid, r.min_ratio, r.max_ratio, r.ceiling, r.status, r.config_hash, r.note)
        for r in report.rows
    )
    return write_csv(path, REPORT_COLUMNS, rows, report.metadata, echo)


def read_report_csv(path: Path) -> ValidationReport:
    meta, header, rows = read_csv(path)
    if tuple(header) != REPORT_COLUMNS:
        raise ConfigError(f"{path} is not a validation report (header {header})", field="path")
    parsed = [
        ReportRow(
            check=check,
            grid=grid,
            min_ratio=float(low),
            max_ratio=float(high),
            ceiling=float(ceiling),
            status=status,
            config_hash=config_hash,
            note=note,
        )
        for check, grid, low, high, ceiling, status, config_hash, note in rows
    ]
    return ValidationReport(metadata=meta, rows=parsed)


def write_summary(report: ValidationReport, path: Path) -> Path:
    lines = [f"{key}: {value}" for key, value in report.metadata.items()]
    lines.append("")
    width = max((len(r.check) for r in report.rows), default=5)
    for r in report.rows:
        lines.append(
            f"{r.check:<{width}}  {r.status:<7}  ratio [{r.min_ratio:.4g}, {r.max_ratio:.4g}]"
            f"  band {r.band:.4g} / ceiling {r.ceiling:g}  {r.runtime:.2f}s  {r.note}".rstrip()
        )
    failed = sum(r.status == "fail" for r in report.rows)
    skipped = sum(r.status == "skipped" for r in report.rows)
    lines.append("")
    lines.append(f"{len(report.rows)} rows, {failed} failed, {skipped} skipped: {'PASS' if report.passed else 'FAIL'}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# ----------------------------
# Raw simulation results
# ----------------------------
def write_path_batch(batch: PathBatch, path: Path, echo: Sequence[str] = ()) -> Path:
    d = batch.exit_position.shape[1]
    columns = ["tau", "kind"] + [f"exit_{k}" for k in range(d)] + [f"final_{k}" for k in range(d)]
    rows = (
        [batch.tau[i], EXIT_KINDS[int(batch.kind[i])], *batch.exit_position[i], *batch.final_position[i]]
        for i in range(batch.n_paths)
    )
    return write_csv(path, columns, rows, {"n_paths": str(batch.n_paths)}, echo)
