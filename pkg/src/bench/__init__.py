"""Potency and cost measurements across obfuscation budgets"""

from src.bench.report import ROWS, LevelReport, PotencyCostReport, RegressionFit, Stat, report_render
from src.bench.runner import BenchConfig, BenchRunner, fit_line, plan_seed, run_bench

__all__ = [
    "ROWS",
    "BenchConfig",
    "BenchRunner",
    "LevelReport",
    "PotencyCostReport",
    "RegressionFit",
    "Stat",
    "fit_line",
    "plan_seed",
    "report_render",
    "run_bench",
]
