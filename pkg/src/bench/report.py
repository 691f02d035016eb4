from typing import Dict, List, Sequence
import csv
import io

import numpy as np
from pydantic import BaseModel, Field

from src.errors import BenchError

REPORT_FORMATS = ("table", "csv", "json")

# (attribute, row label) in table order
ROWS = [
    ("transforms", "Nb. transf. applied"),
    ("lines", "Nb. lines (normalized)"),
    ("type_definitions", "Nb. type definitions (normalized)"),
    ("call_graph_size", "Call graph size (normalized)"),
    ("call_graph_depth", "Call graph depth (normalized)"),
    ("generation_ms", "Generation time (ms)"),
    ("serialize_ms", "Serialization time (ms)"),
    ("parse_ms", "Parsing time (ms)"),
    ("buffer_bytes", "Buffer size (bytes)"),
]


class Stat(BaseModel):
    """Average with its minimum and maximum"""

    avg: float
    min: float
    max: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "Stat":
        if not len(values):
            raise BenchError("no samples to aggregate", rule_id="empty-sample")
        data = np.asarray(values, dtype=float)
        return cls(avg=float(data.mean()), min=float(data.min()), max=float(data.max()))

    def render(self) -> str:
        return f"{self.avg:.2f}[{self.min:.2f};{self.max:.2f}]"


class LevelReport(BaseModel):
    level: int
    plans: int
    trials: int
    transforms: Stat
    lines: Stat
    type_definitions: Stat
    call_graph_size: Stat
    call_graph_depth: Stat
    generation_ms: Stat
    serialize_ms: Stat
    parse_ms: Stat
    buffer_bytes: Stat


class RegressionFit(BaseModel):
    """Least-squares line of a timing against the number of applied transformations"""

    slope: float
    intercept: float
    r_squared: float


class PotencyCostReport(BaseModel):
    protocol: str
    master_seed: int
    trials: int
    plans_per_level: int
    levels: List[LevelReport] = Field(default_factory=list)
    regression: Dict[str, RegressionFit] = Field(default_factory=dict)
    baseline: Dict[str, float] = Field(default_factory=dict)
    note: str = ""

    def level(self, level: int) -> LevelReport:
        for row in self.levels:
            if row.level == level:
                return row
        raise BenchError(f"no level {level} in report", rule_id="unknown-level")


def render_table(report: PotencyCostReport) -> str:
    header = ["Metric"] + [f"Level {row.level}" for row in report.levels]
    body = [[label] + [getattr(row, attr).render() for row in report.levels] for attr, label in ROWS]
    widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]

    def fmt(cells: List[str]) -> str:
        return "  ".join(cell.ljust(width) for cell, width in zip(cells, widths)).rstrip()

    lines = [
        f"{report.protocol}: {report.trials} trial(s) per level, "
        f"{report.plans_per_level} plan(s) per level, master seed {report.master_seed}",
        fmt(header),
        fmt(["-" * w for w in widths]),
    ]
    lines += [fmt(row) for row in body]
    for name, fit in sorted(report.regression.items()):
        lines.append(
            f"{name}: slope {fit.slope:.6f} ms/transform, intercept {fit.intercept:.6f} ms, r2 {fit.r_squared:.4f}"
        )
    if report.note:
        lines.append(report.note)
    return "\n".join(lines) + "\n"


def render_csv(report: PotencyCostReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["metric", "level", "avg", "min", "max"])
    for attr, _ in ROWS:
        for row in report.levels:
            stat = getattr(row, attr)
            writer.writerow([attr, row.level, repr(stat.avg), repr(stat.min), repr(stat.max)])
    return out.getvalue()


def report_render(report: PotencyCostReport, fmt: str = "table") -> str:
    """Report text in one of the table, csv or json formats"""
    if fmt == "table":
        return render_table(report)
    if fmt == "csv":
        return render_csv(report)
    if fmt == "json":
        return report.model_dump_json(indent=2) + "\n"
    raise BenchError(f"unknown report format {fmt} (expected one of {', '.join(REPORT_FORMATS)})", rule_id="format")
