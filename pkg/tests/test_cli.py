import argparse
import json
import logging

import pytest

from src.cli import build_parser, levels_arg, main, seed_arg
from src.protocols import SPEC_DIR

HTTP_SPEC = str(SPEC_DIR / "http.pobf")
MODBUS_SPEC = str(SPEC_DIR / "modbus.pobf")


@pytest.fixture(autouse=True)
def restore_logging():
    logger = logging.getLogger("src")
    saved = (list(logger.handlers), logger.propagate, logger.level)
    yield
    logger.handlers[:] = saved[0]
    logger.propagate = saved[1]
    logger.setLevel(saved[2])


@pytest.fixture
def plan_file(tmp_path):
    path = tmp_path / "http.plan.json"
    assert main(["obfuscate", HTTP_SPEC, "--budget", "2", "--seed", "0x2a", "-o", str(path)]) == 0
    return path


@pytest.fixture
def samples_dir(tmp_path, capsys):
    out = tmp_path / "samples"
    assert main(["samples", "http", "-o", str(out)]) == 0
    capsys.readouterr()
    return out


def test_seed_arg():
    assert seed_arg("42") == 42
    assert seed_arg("0x2A") == 42
    assert seed_arg(str(2**64 - 1)) == 2**64 - 1
    for bad in ("-1", str(2**64), "0xzz", "seed"):
        with pytest.raises(argparse.ArgumentTypeError):
            seed_arg(bad)


def test_levels_arg():
    assert levels_arg("0..4") == [0, 1, 2, 3, 4]
    assert levels_arg("1,3") == [1, 3]
    for bad in ("", "a..b", "2,-1", "3..1"):
        with pytest.raises(argparse.ArgumentTypeError):
            levels_arg(bad)


def test_every_command_has_help():
    parser = build_parser()
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    assert set(sub.choices) == {"validate", "obfuscate", "serialize", "parse", "fuzz", "codegen", "bench", "samples"}
    for command in sub.choices.values():
        for action in command._actions:
            assert action.help


def test_usage_error(capsys):
    assert main(["obfuscate", HTTP_SPEC]) == 2
    assert "--budget" in capsys.readouterr().err


def test_validate(capsys):
    assert main(["validate", MODBUS_SPEC]) == 0
    assert "modbus: 87 node(s)" in capsys.readouterr().out


def test_validate_reports_bad_spec(tmp_path, capsys):
    spec = tmp_path / "bad.pobf"
    spec.write_text(
        """
protocol bad {
    node s { type: sequence children: [a, b] }
    node a { type: terminal boundary: end }
    node b { type: terminal boundary: fixed(1) }
    root: s
}
""",
        encoding="utf-8",
    )
    assert main(["validate", str(spec)]) == 1
    assert "end-not-last" in capsys.readouterr().err


def test_obfuscate_is_deterministic(tmp_path, plan_file):
    again = tmp_path / "again.json"
    assert main(["obfuscate", HTTP_SPEC, "--budget", "2", "--seed", "42", "-o", str(again)]) == 0
    assert again.read_bytes() == plan_file.read_bytes()
    assert json.loads(plan_file.read_bytes())["seed"] == "42"


def test_serialize_then_parse(tmp_path, plan_file, samples_dir):
    ast_file = samples_dir / "post_request.json"
    wire = tmp_path / "post.bin"
    back = tmp_path / "post.json"
    assert main(["serialize", HTTP_SPEC, "--plan", str(plan_file), "--ast", str(ast_file),
                 "--msg-seed", "7", "-o", str(wire)]) == 0
    assert main(["parse", HTTP_SPEC, "--plan", str(plan_file), "--in", str(wire), "-o", str(back)]) == 0
    assert json.loads(back.read_text()) == json.loads(ast_file.read_text())


def test_parse_with_foreign_plan(tmp_path, plan_file, capsys):
    wire = tmp_path / "x.bin"
    wire.write_bytes(b"\x00" * 12)
    assert main(["parse", MODBUS_SPEC, "--plan", str(plan_file), "--in", str(wire)]) == 1
    assert "plan does not match spec" in capsys.readouterr().err


def test_parse_error_names_the_rule(tmp_path, plan_file, capsys):
    wire = tmp_path / "bad.bin"
    wire.write_bytes(b"")
    assert main(["parse", HTTP_SPEC, "--plan", str(plan_file), "--in", str(wire)]) == 1
    assert "error: [" in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "none.pobf")]) == 1
    assert "error: [io]" in capsys.readouterr().err


def test_fuzz(plan_file, capsys):
    assert main(["fuzz", HTTP_SPEC, "--plan", str(plan_file), "--trials", "30", "--seed", "3"]) == 0
    assert capsys.readouterr().out


def test_codegen(tmp_path, plan_file, capsys):
    out = tmp_path / "gen"
    assert main(["codegen", HTTP_SPEC, "--plan", str(plan_file), "-o", str(out)]) == 0
    target = capsys.readouterr().out.strip()
    assert target.startswith(str(out))
    assert (out / target.rsplit("/", 1)[-1] / "codec.py").is_file()


def test_bench_csv(tmp_path):
    report = tmp_path / "bench.csv"
    argv = ["bench", HTTP_SPEC, "--levels", "0..1", "--trials", "4", "--plans", "2", "--seed", "5",
            "--format", "csv", "-o", str(report)]
    assert main(argv) == 0
    lines = report.read_text().splitlines()
    assert lines[0] == "metric,level,avg,min,max"
    assert any(line.startswith("lines,1,") for line in lines)


def test_samples(samples_dir):
    assert sorted(p.name for p in samples_dir.iterdir()) == ["get_request.json", "head_request.json", "post_request.json"]


def test_config_file(tmp_path, plan_file, capsys):
    config = tmp_path / "settings.yaml"
    config.write_text("codegen:\n  output_dir: " + str(tmp_path / "from_config") + "\n", encoding="utf-8")
    assert main(["--config", str(config), "codegen", HTTP_SPEC, "--plan", str(plan_file)]) == 0
    assert "from_config" in capsys.readouterr().out
