import json
import logging

import pytest

from src.bench import (
    ROWS,
    BenchConfig,
    BenchRunner,
    LevelReport,
    PotencyCostReport,
    RegressionFit,
    Stat,
    fit_line,
    plan_seed,
    report_render,
    run_bench,
)
from src.errors import BenchError


def flat(value):
    return Stat(avg=value, min=value, max=value)


def level_row(level, lines):
    values = {attr: flat(1.0) for attr, _ in ROWS}
    values["lines"] = flat(lines)
    return LevelReport(level=level, plans=1, trials=1, **values)


@pytest.fixture(scope="module")
def small_report(http_graph):
    config = BenchConfig(http_graph, levels=[0, 1, 2], trials=12, plans_per_level=3, master_seed=7)
    return run_bench(config)


def test_stat_of_values():
    stat = Stat.of([1, 2, 6])
    assert (stat.avg, stat.min, stat.max) == (3.0, 1.0, 6.0)
    assert stat.render() == "3.00[1.00;6.00]"
    with pytest.raises(BenchError) as e:
        Stat.of([])
    assert e.value.rule_id == "empty-sample"


def test_fit_line():
    fit = fit_line([0, 1, 2, 3], [1.0, 3.0, 5.0, 7.0])
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(1.0)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit_line([2, 2, 2], [1.0, 2.0, 3.0]) is None


def test_plan_seeds_are_stable_and_distinct():
    assert plan_seed(1, 2, 3) == plan_seed(1, 2, 3)
    seeds = {plan_seed(1, level, k) for level in range(5) for k in range(20)}
    assert len(seeds) == 100
    assert all(0 <= s < 2**64 for s in seeds)


def test_config_validation(http_graph):
    for bad in (dict(trials=0), dict(plans_per_level=0), dict(levels=[]), dict(levels=[-1]), dict(format="xml")):
        with pytest.raises(BenchError) as e:
            BenchConfig(http_graph, **bad)
        assert e.value.rule_id == "bench-config"


def test_config_from_settings(http_graph, settings):
    config = BenchConfig.from_settings(http_graph, settings, trials=5, levels=None)
    assert config.trials == 5
    assert config.levels == settings.bench.levels
    assert config.plans_per_level == settings.bench.plans_per_level
    assert config.master_seed == settings.bench.master_seed


def test_level_zero_is_the_baseline(small_report):
    row = small_report.level(0)
    assert row.transforms.max == 0
    for name in ("lines", "type_definitions", "call_graph_size", "call_graph_depth"):
        assert getattr(row, name).avg == pytest.approx(1.0)
    assert row.trials == 12 and row.plans == 3


def test_report_shape(small_report):
    assert [row.level for row in small_report.levels] == [0, 1, 2]
    assert small_report.level(2).transforms.avg > 0
    assert small_report.level(1).lines.avg > 1.0
    assert set(small_report.regression) == {"serialize_ms", "parse_ms"}
    assert small_report.note
    with pytest.raises(BenchError) as e:
        small_report.level(9)
    assert e.value.rule_id == "unknown-level"


def test_same_seed_same_potency(http_graph, small_report):
    again = run_bench(BenchConfig(http_graph, levels=[0, 1, 2], trials=12, plans_per_level=3, master_seed=7))
    for a, b in zip(small_report.levels, again.levels):
        assert (a.transforms, a.lines, a.call_graph_size, a.buffer_bytes) == (
            b.transforms,
            b.lines,
            b.call_graph_size,
            b.buffer_bytes,
        )


def test_render_table(small_report):
    text = report_render(small_report, "table")
    lines = text.splitlines()
    assert lines[1].split()[:4] == ["Metric", "Level", "0", "Level"]
    for _, label in ROWS:
        assert label in text
    assert "serialize_ms: slope" in text


def test_render_csv(small_report):
    lines = report_render(small_report, "csv").splitlines()
    assert lines[0] == "metric,level,avg,min,max"
    assert len(lines) == 1 + len(ROWS) * 3
    metric, level, avg, low, high = lines[1].split(",")
    assert (metric, level) == ("transforms", "0")
    assert float(low) <= float(avg) <= float(high)


def test_render_json(small_report):
    data = json.loads(report_render(small_report, "json"))
    assert data["protocol"] == "http"
    assert data["master_seed"] == 7
    assert PotencyCostReport.model_validate(data) == small_report


def test_unknown_format(small_report):
    with pytest.raises(BenchError) as e:
        report_render(small_report, "xml")
    assert e.value.rule_id == "format"


def test_trend_warnings(http_graph, caplog):
    report = PotencyCostReport(
        protocol="http",
        master_seed=1,
        trials=1,
        plans_per_level=1,
        levels=[level_row(0, 1.0), level_row(1, 1.5), level_row(2, 1.2)],
        regression={"parse_ms": RegressionFit(slope=-0.5, intercept=1.0, r_squared=0.3)},
    )
    runner = BenchRunner(BenchConfig(http_graph, trials=1, plans_per_level=1))
    with caplog.at_level(logging.WARNING, logger="src.bench.runner"):
        runner._check_trends(report)
    messages = [r.getMessage() for r in caplog.records]
    assert any("lines is not strictly increasing" in m for m in messages)
    assert any("parse_ms decreases" in m for m in messages)


def test_failed_round_trip_aborts(http_graph, monkeypatch):
    import src.bench.runner as runner_module

    monkeypatch.setattr(runner_module, "parse", lambda wire, plan: None)
    with pytest.raises(BenchError) as e:
        run_bench(BenchConfig(http_graph, levels=[1], trials=2, plans_per_level=1))
    assert e.value.rule_id == "roundtrip"
    assert "wire: " in str(e.value)
    assert '"node": "request"' in str(e.value)


@pytest.mark.slow
def test_full_sweep_trends(modbus_graph, caplog):
    with caplog.at_level(logging.WARNING, logger="src.bench.runner"):
        report = run_bench(BenchConfig(modbus_graph, trials=1000, plans_per_level=20))
    means = [row.lines.avg for row in report.levels]
    assert means == sorted(means)
    base = report.level(0).buffer_bytes.avg
    assert report.level(4).buffer_bytes.avg <= 3 * base
