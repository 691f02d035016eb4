import inspect
import json

import pytest

from src.codegen import (
    BundleManifest,
    ast_from_message,
    call_graph,
    generate,
    load_bundle,
    load_manifest,
    measure,
    message_from_ast,
    write_bundle,
)
from src.errors import CodegenError
from src.message.generator import random_ast
from src.obfuscation.obfuscator import identity_plan, obfuscate, plan_hash8
from src.wire import runtime
from src.wire.engine import parse, serialize
from src.wire.runtime import derive_seed

FC3_REQUEST = bytes.fromhex("0001 0000 0006 11 03 006b 0003")


def build_read_holding_request(module):
    """Application-side construction through the generated accessors only"""
    msg = module.Message(5)
    msg.set_transaction_id(b"\x00\x01")
    msg.set_protocol_id(b"\x00\x00")
    msg.set_unit_id(b"\x11")
    msg.set_function_code(b"\x03")
    msg.set_present_request(True)
    msg.set_present_read_holding_req(True)
    msg.set_rh_start(b"\x00\x6b")
    msg.set_rh_quantity(b"\x00\x03")
    return msg


def cross_check(tmp_path, graph, plan, trials, seed):
    module = load_bundle(write_bundle(generate(plan), tmp_path))
    for trial in range(trials):
        ast = random_ast(graph, derive_seed(seed, "ast", trial))
        msg_seed = derive_seed(seed, "msg", trial)
        expected = serialize(ast, plan, msg_seed)
        wire = module.serialize(message_from_ast(module, ast, msg_seed))
        assert wire == expected, f"trial {trial}"
        assert ast_from_message(module.parse(expected, msg_seed), graph) == ast
        assert parse(wire, plan) == ast


def test_bundle_files(http_graph):
    plan = obfuscate(http_graph, 1, 4)
    bundle = generate(plan)
    assert set(bundle.files) == {"__init__.py", "message.py", "codec.py", "runtime.py", "manifest.json"}
    assert bundle.files["runtime.py"] == inspect.getsource(runtime)
    assert bundle.directory_name == f"http_{plan_hash8(plan)}"
    manifest = BundleManifest.model_validate(json.loads(bundle.files["manifest.json"]))
    assert manifest == bundle.manifest
    assert manifest.spec_hash == plan.spec_hash
    assert "serialize" in manifest.functions and "parse" in manifest.functions
    assert "Message" in manifest.types


def test_generation_is_deterministic(modbus_graph):
    plan = obfuscate(modbus_graph, 2, 12)
    assert generate(plan).files == generate(plan).files


def test_written_bundle_imports(tmp_path, http_graph):
    plan = obfuscate(http_graph, 2, 4)
    target = write_bundle(generate(plan), tmp_path)
    assert target.name == f"http_{plan_hash8(plan)}"
    module = load_bundle(target)
    assert module.PROTOCOL == "http"
    assert module.PLAN_HASH == plan_hash8(plan)
    assert load_manifest(target).plan_hash == module.PLAN_HASH


def test_missing_bundle(tmp_path):
    with pytest.raises(CodegenError) as e:
        load_bundle(tmp_path / "nothing")
    assert e.value.rule_id == "missing-bundle"


def test_identity_bundle_golden_bytes(tmp_path, modbus_graph):
    module = load_bundle(write_bundle(generate(identity_plan(modbus_graph)), tmp_path))
    assert module.serialize(build_read_holding_request(module)) == FC3_REQUEST


def test_accessor_prototypes_are_stable(modbus, tmp_path):
    graph = modbus.graph
    expected_ast = modbus.sample("read_holding_registers_request")
    prototypes = None
    for seed in range(10):
        plan = obfuscate(graph, 1 + seed % 4, seed)
        bundle = generate(plan)
        if prototypes is None:
            prototypes = bundle.manifest.prototypes
        assert bundle.manifest.prototypes == prototypes
        module = load_bundle(write_bundle(bundle, tmp_path))
        wire = module.serialize(build_read_holding_request(module))
        assert parse(wire, plan) == expected_ast
    assert "set_rh_start(self, value: bytes) -> None" in prototypes
    assert "get_wrs_register_hi(self, i0: int) -> Optional[bytes]" in prototypes
    assert "push_wrs_registers(self) -> int" in prototypes
    assert not any(p.startswith("set_length(") for p in prototypes)


def test_generated_parser_rejects_bad_input(tmp_path, record_graph):
    plan = obfuscate(record_graph, 1, 2)
    module = load_bundle(write_bundle(generate(plan), tmp_path))
    with pytest.raises(module.runtime.CodecError):
        module.parse(b"\x00", 0)


@pytest.mark.parametrize("budget", [0, 1, 2, 3])
def test_generated_codec_matches_engine(tmp_path, modbus_graph, http_graph, record_graph, budget):
    for graph in (modbus_graph, http_graph, record_graph):
        cross_check(tmp_path, graph, obfuscate(graph, budget, 40 + budget), 12, budget)


def test_generated_codec_matches_engine_on_tables(tmp_path, table_graph, make_plan):
    from src.obfuscation.transforms import TransformKind, TransformRecord

    plan = make_plan(table_graph, [TransformRecord.build(TransformKind.TAB_SPLIT, (1,))])
    cross_check(tmp_path, table_graph, plan, 20, 3)


@pytest.mark.slow
@pytest.mark.parametrize("budget", [1, 2, 3, 4])
def test_cross_engine_equivalence(tmp_path, modbus_graph, http_graph, budget):
    for graph in (modbus_graph, http_graph):
        for k in range(4):
            cross_check(tmp_path, graph, obfuscate(graph, budget, 500 + k), 25, k)


def test_call_graph_depth_and_size(http_graph):
    bundle = generate(obfuscate(http_graph, 1, 9))
    stats = call_graph(bundle.manifest)
    assert stats.size == len(bundle.manifest.functions)
    assert stats.depth >= 3


def test_call_cycle_is_reported():
    manifest = BundleManifest(protocol="p", plan_hash="0", spec_hash="0", functions=["a", "b"], calls=[("a", "b"), ("b", "a")])
    with pytest.raises(CodegenError) as e:
        call_graph(manifest)
    assert e.value.rule_id == "call-cycle"


def test_obfuscation_grows_the_bundle(modbus_graph):
    base = measure(generate(identity_plan(modbus_graph)))
    grown = measure(generate(obfuscate(modbus_graph, 3, 1)))
    assert grown.lines > base.lines
    assert grown.call_graph_size > base.call_graph_size
    assert base.normalized(base) == {
        "lines": 1.0,
        "type_definitions": 1.0,
        "call_graph_size": 1.0,
        "call_graph_depth": 1.0,
    }


def test_generated_codec_matches_engine_on_register_pairs(tmp_path, modbus_graph, make_plan):
    from src.obfuscation.transforms import TransformKind, TransformRecord

    path = modbus_graph.path_of("wrs_registers")
    plan = make_plan(modbus_graph, [TransformRecord.build(TransformKind.TAB_SPLIT, path)])
    cross_check(tmp_path, modbus_graph, plan, 30, 6)


def test_generated_parser_bounds_counts(tmp_path, table_graph):
    module = load_bundle(write_bundle(generate(identity_plan(table_graph)), tmp_path))
    with pytest.raises(module.runtime.CodecError) as e:
        module.parse(b"\xff\x01\x02", 0)
    assert e.value.rule_id == "truncated-input"
    assert e.value.node == "items"
