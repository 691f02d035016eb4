from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
import logging
import time

import mmh3
import numpy as np

from src.bench.report import REPORT_FORMATS, LevelReport, PotencyCostReport, RegressionFit, Stat
from src.codegen.generator import PotencyMetrics, generate, measure
from src.config.settings import ObfuscationRanges, RandomAstBounds, Settings
from src.errors import BenchError, ProtoObfError
from src.format.graph import FormatGraph
from src.message.generator import random_ast
from src.message.json_form import ast_to_json
from src.obfuscation.obfuscator import ObfuscationPlan, identity_plan, obfuscate
from src.wire.engine import parse, serialize
from src.wire.runtime import derive_seed

TREND_NOTE = "Figures are for trend comparison only: the bundled specifications are independent models of the protocols."
POTENCY_FIELDS = ("lines", "type_definitions", "call_graph_size", "call_graph_depth")


@dataclass
class BenchConfig:
    graph: FormatGraph
    levels: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    trials: int = 1000
    plans_per_level: int = 20
    master_seed: int = 1
    format: str = "table"
    bounds: RandomAstBounds = field(default_factory=RandomAstBounds)
    ranges: ObfuscationRanges = field(default_factory=ObfuscationRanges)

    def __post_init__(self):
        if self.trials < 1:
            raise BenchError("trials must be at least 1", rule_id="bench-config")
        if self.plans_per_level < 1:
            raise BenchError("plans per level must be at least 1", rule_id="bench-config")
        if not self.levels or any(level < 0 for level in self.levels):
            raise BenchError("levels must be a non-empty list of budgets", rule_id="bench-config")
        if self.format not in REPORT_FORMATS:
            raise BenchError(f"unknown report format {self.format}", rule_id="bench-config")

    @classmethod
    def from_settings(cls, graph: FormatGraph, settings: Settings, **overrides) -> "BenchConfig":
        values = dict(
            levels=list(settings.bench.levels),
            trials=settings.bench.trials,
            plans_per_level=settings.bench.plans_per_level,
            master_seed=settings.bench.master_seed,
            format=settings.bench.format,
            bounds=settings.random_ast,
            ranges=settings.obfuscation,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(graph=graph, **values)


def plan_seed(master_seed: int, level: int, index: int) -> int:
    """Seed of the index-th plan drawn at a budget level"""
    return mmh3.hash64(f"{master_seed}|{level}|{index}".encode("utf-8"), signed=False)[0]


def fit_line(xs: List[float], ys: List[float]) -> Optional[RegressionFit]:
    """Least-squares fit of ys against xs; None when xs holds a single distinct value"""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(np.unique(x)) < 2:
        return None
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sum((y - (slope * x + intercept)) ** 2))
    total = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if total == 0 else 1.0 - residual / total
    return RegressionFit(slope=float(slope), intercept=float(intercept), r_squared=r_squared)


class BenchRunner:
    """Sweeps obfuscation budgets and measures potency and cost of the resulting plans"""

    def __init__(self, config: BenchConfig):
        self.config = config
        self.graph = config.graph
        self.samples: List[Tuple[int, float, float]] = []
        self.logger = logging.getLogger(__name__)

    def _ms(self, start: float, end: float) -> float:
        return round((end - start) * 1000.0, 3)

    def _plans(self, level: int) -> List[ObfuscationPlan]:
        return [
            obfuscate(self.graph, level, plan_seed(self.config.master_seed, level, k), self.config.ranges)
            for k in range(self.config.plans_per_level)
        ]

    def _roundtrip(self, plan: ObfuscationPlan, level: int, trial: int) -> Tuple[float, float, int]:
        master = self.config.master_seed
        ast = random_ast(self.graph, derive_seed(master, "ast", level, trial), self.config.bounds)
        msg_seed = derive_seed(master, "msg", level, trial)
        wire = None
        try:
            start = time.perf_counter()
            wire = serialize(ast, plan, msg_seed)
            middle = time.perf_counter()
            back = parse(wire, plan)
            end = time.perf_counter()
        except ProtoObfError as e:
            self._abort(level, trial, ast_to_json(ast), wire, f"[{e.rule_id}] {e}")
        if back != ast:
            self._abort(level, trial, ast_to_json(ast), wire, "parsed message differs from the original")
        return self._ms(start, middle), self._ms(middle, end), len(wire)

    def _abort(self, level: int, trial: int, ast_json: str, wire: Optional[bytes], error: str) -> None:
        wire_hex = "-" if wire is None else wire.hex()
        self.logger.error(f"Round trip failed at level {level}, trial {trial}: {error}")
        raise BenchError(
            f"round trip failed at level {level}, trial {trial}: {error}\nwire: {wire_hex}\nast: {ast_json}",
            rule_id="roundtrip",
        )

    def _level(self, level: int, baseline: PotencyMetrics) -> LevelReport:
        plans = self._plans(level)
        generation_ms: List[float] = []
        potency: Dict[str, List[float]] = {name: [] for name in POTENCY_FIELDS}
        for plan in plans:
            start = time.perf_counter()
            bundle = generate(plan)
            generation_ms.append(self._ms(start, time.perf_counter()))
            for name, value in measure(bundle).normalized(baseline).items():
                potency[name].append(value)

        # warm-up pass, not recorded
        self._roundtrip(plans[0], level, -1)

        serialize_ms: List[float] = []
        parse_ms: List[float] = []
        buffer_bytes: List[int] = []
        transforms: List[int] = []
        for trial in range(self.config.trials):
            plan = plans[trial % len(plans)]
            ser, par, size = self._roundtrip(plan, level, trial)
            serialize_ms.append(ser)
            parse_ms.append(par)
            buffer_bytes.append(size)
            transforms.append(len(plan.records))
            self.samples.append((len(plan.records), ser, par))

        report = LevelReport(
            level=level,
            plans=len(plans),
            trials=self.config.trials,
            transforms=Stat.of([len(p.records) for p in plans]),
            generation_ms=Stat.of(generation_ms),
            serialize_ms=Stat.of(serialize_ms),
            parse_ms=Stat.of(parse_ms),
            buffer_bytes=Stat.of(buffer_bytes),
            **{name: Stat.of(values) for name, values in potency.items()},
        )
        self.logger.info(
            f"Level {level}: {report.transforms.avg:.1f} transform(s) on average, "
            f"buffer {report.buffer_bytes.avg:.1f} byte(s), lines x{report.lines.avg:.2f}"
        )
        return report

    def _check_trends(self, report: PotencyCostReport) -> None:
        rows = [row for row in sorted(report.levels, key=lambda r: r.level) if row.level >= 1]
        for name in ("lines", "type_definitions", "call_graph_size"):
            means = [getattr(row, name).avg for row in rows]
            if any(b <= a for a, b in zip(means, means[1:])):
                self.logger.warning(f"Normalized {name} is not strictly increasing across levels: {means}")
        for name, fit in report.regression.items():
            if fit.slope < 0:
                self.logger.warning(f"{name} decreases with the number of transformations (slope {fit.slope:.6f})")

    def run(self) -> PotencyCostReport:
        baseline = measure(generate(identity_plan(self.graph)))
        report = PotencyCostReport(
            protocol=self.graph.name,
            master_seed=self.config.master_seed,
            trials=self.config.trials,
            plans_per_level=self.config.plans_per_level,
            baseline={name: float(getattr(baseline, name)) for name in POTENCY_FIELDS},
            note=TREND_NOTE,
        )
        report.levels = [self._level(level, baseline) for level in self.config.levels]
        counts = [float(count) for count, _, _ in self.samples]
        for name, position in (("serialize_ms", 1), ("parse_ms", 2)):
            fit = fit_line(counts, [float(sample[position]) for sample in self.samples])
            if fit is not None:
                report.regression[name] = fit
        self._check_trends(report)
        return report


def run_bench(config: BenchConfig) -> PotencyCostReport:
    """Potency and cost of obfuscation across budget levels"""
    return BenchRunner(config).run()
