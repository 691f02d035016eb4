"""Command-line entry point: python -m src.cli <command> ..."""

from pathlib import Path
from typing import Callable, Dict, List, Optional
import argparse
import logging
import sys

from src.bench import BenchConfig, report_render, run_bench
from src.codegen import generate, write_bundle
from src.config.logging_config import setup_logging
from src.config.settings import ObfuscatorSettings, Settings
from src.errors import GraphValidationError, ProtoObfError
from src.format.graph import FormatGraph
from src.format.validation import validate
from src.message.json_form import ast_from_json, ast_to_json
from src.obfuscation.obfuscator import load_plan, obfuscate, save_plan
from src.protocols import PROTOCOLS, get_protocol
from src.spec.parser import load_spec
from src.wire.engine import parse, roundtrip_check, serialize

logger = logging.getLogger(__name__)


def seed_arg(text: str) -> int:
    """Seed given in decimal or with a 0x prefix"""
    try:
        value = int(text[2:], 16) if text.lower().startswith("0x") else int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed {text!r} out of the 64-bit range")
    return value


def levels_arg(text: str) -> List[int]:
    """Budget levels as an inclusive range a..b or a comma list"""
    try:
        if ".." in text:
            low, high = (int(part) for part in text.split("..", 1))
            levels = list(range(low, high + 1))
        else:
            levels = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid levels {text!r}") from None
    if not levels or any(level < 0 for level in levels):
        raise argparse.ArgumentTypeError(f"invalid levels {text!r}")
    return levels


def _write(data: bytes, output: Optional[str]) -> None:
    if output:
        Path(output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _plan(graph: FormatGraph, args, settings: Settings):
    return load_plan(Path(args.plan).read_bytes(), graph, settings.obfuscation)


def cmd_validate(args, settings: Settings) -> int:
    try:
        graph = load_spec(args.spec)
    except GraphValidationError as e:
        print(e.report.render(), file=sys.stderr)
        raise
    report = validate(graph)
    for issue in report.warnings:
        logger.warning(f"{issue.node}: [{issue.rule_id}] {issue.message}")
    print(report.render())
    print(f"{graph.name}: {len(graph.index)} node(s)")
    return 0


def cmd_obfuscate(args, settings: Settings) -> int:
    graph = load_spec(args.spec)
    plan = obfuscate(graph, args.budget, args.seed, settings.obfuscation)
    _write(save_plan(plan), args.output)
    return 0


def cmd_serialize(args, settings: Settings) -> int:
    graph = load_spec(args.spec)
    plan = _plan(graph, args, settings)
    ast = ast_from_json(Path(args.ast).read_text(encoding="utf-8"), graph)
    _write(serialize(ast, plan, args.msg_seed), args.output)
    return 0


def cmd_parse(args, settings: Settings) -> int:
    graph = load_spec(args.spec)
    plan = _plan(graph, args, settings)
    ast = parse(Path(args.input).read_bytes(), plan)
    _write((ast_to_json(ast) + "\n").encode("utf-8"), args.output)
    return 0


def cmd_fuzz(args, settings: Settings) -> int:
    graph = load_spec(args.spec)
    plan = _plan(graph, args, settings)
    report = roundtrip_check(graph, plan, args.trials, args.seed, settings.random_ast)
    print(report.render())
    return 0 if report.passed else 1


def cmd_codegen(args, settings: Settings) -> int:
    graph = load_spec(args.spec)
    plan = _plan(graph, args, settings)
    target = write_bundle(generate(plan), args.output or settings.codegen.output_dir)
    print(target)
    return 0


def cmd_bench(args, settings: Settings) -> int:
    graph = load_spec(args.spec)
    config = BenchConfig.from_settings(
        graph,
        settings,
        levels=args.levels,
        trials=args.trials,
        master_seed=args.seed,
        plans_per_level=args.plans,
        format=args.format,
    )
    _write(report_render(run_bench(config), config.format).encode("utf-8"), args.output)
    return 0


def cmd_samples(args, settings: Settings) -> int:
    bundle = get_protocol(args.protocol)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, ast in bundle.sample_asts().items():
        path = out_dir / f"{name}.json"
        path.write_text(ast_to_json(ast) + "\n", encoding="utf-8")
        print(path)
    return 0


COMMANDS: Dict[str, Callable] = {
    "validate": cmd_validate,
    "obfuscate": cmd_obfuscate,
    "serialize": cmd_serialize,
    "parse": cmd_parse,
    "fuzz": cmd_fuzz,
    "codegen": cmd_codegen,
    "bench": cmd_bench,
    "samples": cmd_samples,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="protoobf", description="Specification-driven protocol obfuscation")
    parser.add_argument("--config", help="YAML settings file (default: config/obfuscator_config.yaml)")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="Parse and validate a specification")
    p.add_argument("spec", help="Specification file")

    p = sub.add_parser("obfuscate", help="Draw an obfuscation plan")
    p.add_argument("spec", help="Specification file")
    p.add_argument("--budget", type=int, required=True, help="Transformations attempted per node")
    p.add_argument("--seed", type=seed_arg, required=True, help="Plan seed (decimal or 0x-hex)")
    p.add_argument("-o", "--output", help="Plan file to write (default: stdout)")

    p = sub.add_parser("serialize", help="Serialize a message under a plan")
    p.add_argument("spec", help="Specification file")
    p.add_argument("--plan", required=True, help="Plan file")
    p.add_argument("--ast", required=True, help="Message in AST JSON form")
    p.add_argument("--msg-seed", type=seed_arg, default=0, help="Per-message seed (decimal or 0x-hex)")
    p.add_argument("-o", "--output", help="Wire file to write (default: stdout)")

    p = sub.add_parser("parse", help="Parse wire bytes under a plan")
    p.add_argument("spec", help="Specification file")
    p.add_argument("--plan", required=True, help="Plan file")
    p.add_argument("--in", dest="input", required=True, help="Wire file")
    p.add_argument("-o", "--output", help="AST JSON file to write (default: stdout)")

    p = sub.add_parser("fuzz", help="Round-trip random messages under a plan")
    p.add_argument("spec", help="Specification file")
    p.add_argument("--plan", required=True, help="Plan file")
    p.add_argument("--trials", type=int, default=1000, help="Number of random messages")
    p.add_argument("--seed", type=seed_arg, default=1, help="Fuzzing seed (decimal or 0x-hex)")

    p = sub.add_parser("codegen", help="Generate a standalone codec package for a plan")
    p.add_argument("spec", help="Specification file")
    p.add_argument("--plan", required=True, help="Plan file")
    p.add_argument("-o", "--output", help="Output directory (default from settings)")

    p = sub.add_parser("bench", help="Measure potency and cost across budget levels")
    p.add_argument("spec", help="Specification file")
    p.add_argument("--levels", type=levels_arg, help="Budget levels, a..b or a comma list")
    p.add_argument("--trials", type=int, help="Messages per level")
    p.add_argument("--plans", type=int, help="Plans drawn per level")
    p.add_argument("--seed", type=seed_arg, help="Master seed (decimal or 0x-hex)")
    p.add_argument("--format", choices=["table", "csv", "json"], help="Report format")
    p.add_argument("-o", "--output", help="Report file to write (default: stdout)")

    p = sub.add_parser("samples", help="Write the bundled sample messages as AST JSON")
    p.add_argument("protocol", choices=sorted(PROTOCOLS), help="Bundled protocol")
    p.add_argument("-o", "--output", required=True, help="Output directory")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    settings = ObfuscatorSettings.load(args.config)
    level = "DEBUG" if args.verbose else settings.logging.level
    setup_logging(level, settings.logging.file)

    try:
        return COMMANDS[args.command](args, settings)
    except ProtoObfError as e:
        print(f"error: [{e.rule_id}] {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: [io] {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
