from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

Status = Literal["pass", "fail", "skipped"]


@dataclass(frozen=True)
class ReportRow:
    check: str
    grid: str
    min_ratio: float
    max_ratio: float
    ceiling: float
    status: Status
    config_hash: str
    note: str = ""
    runtime: float = field(default=0.0, compare=False)

    @property
    def band(self) -> float:
        if self.min_ratio <= 0:
            return float("inf")
        return self.max_ratio / self.min_ratio


@dataclass(frozen=True)
class SeriesTable:
    """Columnar data behind one check, as written to plot-data files."""

    columns: tuple[str, ...]
    units: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...] = ()


@dataclass
class ValidationReport:
    metadata: dict[str, str]
    rows: list[ReportRow] = field(default_factory=list)
    series: dict[str, SeriesTable] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not any(row.status == "fail" for row in self.rows)

    @property
    def checks(self) -> list[str]:
        return sorted(self.series)
