import pytest
from hypothesis import HealthCheck, given, settings as hypothesis_settings, strategies as st

from src.errors import ParseError, SerializeError
from src.message.ast import new_ast, push_element, set_present, set_value
from src.obfuscation.obfuscator import identity_plan, obfuscate
from src.obfuscation.transforms import TransformKind, TransformParams, TransformRecord
from src.spec.parser import parse_spec
from src.wire.engine import parse, roundtrip_check, serialize
from src.wire.runtime import CodecError, Reader, check_count, slot_bytes

PAIRS_SPEC = """
protocol pairs {
    node pairs { type: repetition boundary: end child: pair }
    node pair { type: sequence children: [x, y] }
    node x { type: terminal boundary: fixed(1) }
    node y { type: terminal boundary: fixed(2) }
    root: pairs
}
"""

COUNTED_SPEC = """
protocol counted {
    node top { type: sequence children: [count, items] }
    node count { type: terminal boundary: fixed(4) derives: count_of(items) }
    node items { type: tabular boundary: counter(count) child: x }
    node x { type: terminal boundary: fixed(1) }
    root: top
}
"""


def record(kind, target=(), **params):
    return TransformRecord.build(kind, tuple(target), TransformParams(**params))


def text_message(graph, payload):
    return set_value(new_ast(graph), "payload", payload)


def record_message(graph, data=b"hello", tail=b"end"):
    ast = new_ast(graph)
    set_value(ast, "kind", b"\x00\x01")
    set_value(ast, "data", data)
    set_value(ast, "tail", tail)
    return ast


def test_identity_plan_writes_plain_bytes(text_graph):
    plan = identity_plan(text_graph)
    assert serialize(text_message(text_graph, b"abc"), plan, 0).hex() == "616263"


def test_read_from_end_mirrors_the_region(text_graph, make_plan):
    plan = make_plan(text_graph, [record(TransformKind.READ_FROM_END)])
    ast = text_message(text_graph, b"abc")
    wire = serialize(ast, plan, 0)
    assert wire.hex() == "636261"
    assert parse(wire, plan) == ast


def test_double_mirror_is_identity(text_graph, make_plan):
    once = make_plan(text_graph, [record(TransformKind.READ_FROM_END)])
    twice = make_plan(text_graph, [record(TransformKind.READ_FROM_END)] * 2)
    for size in range(65):
        payload = bytes(range(size))
        ast = text_message(text_graph, payload)
        assert serialize(ast, twice, 0) == payload
        assert serialize(ast, once, 0) == payload[::-1]
        assert parse(payload, twice) == ast
        assert parse(payload[::-1], once) == ast


def test_derived_length_is_back_patched(record_graph):
    wire = serialize(record_message(record_graph), identity_plan(record_graph), 0)
    assert wire.hex() == "0001" + "0005" + b"hello".hex() + b"end".hex() + "00"


@pytest.mark.parametrize(
    "op, expected",
    [("ConstAdd", lambda v, c: (v + c) % 256), ("ConstSub", lambda v, c: (v - c) % 256), ("ConstXor", lambda v, c: v ^ c)],
)
def test_const_fields_exhaustive(word_graph, make_plan, op, expected):
    for constant in (0x00, 0x01, 0x7F, 0xFF):
        plan = make_plan(word_graph, [record(TransformKind(op), constant=f"{constant:02x}")])
        for value in range(256):
            ast = set_value(new_ast(word_graph), "word", bytes([value]))
            wire = serialize(ast, plan, 0)
            assert wire == bytes([expected(value, constant)])
            assert parse(wire, plan) == ast


@pytest.mark.parametrize("kind", [TransformKind.SPLIT_ADD, TransformKind.SPLIT_SUB, TransformKind.SPLIT_XOR])
def test_split_fields_exhaustive(word_graph, make_plan, kind):
    plan = make_plan(word_graph, [record(kind)])
    for msg_seed in range(8):
        mask = slot_bytes(msg_seed, "word", (), 1)
        for value in range(256):
            ast = set_value(new_ast(word_graph), "word", bytes([value]))
            wire = serialize(ast, plan, msg_seed)
            assert len(wire) == 2
            assert mask in (wire[:1], wire[1:])
            assert parse(wire, plan) == ast


def test_split_cat_keeps_bytes(record_graph, make_plan):
    plan = make_plan(record_graph, [record(TransformKind.SPLIT_CAT, (0,), offset=1)])
    wire = serialize(record_message(record_graph), plan, 3)
    assert wire == serialize(record_message(record_graph), identity_plan(record_graph), 3)


def test_tab_split_lays_out_columns(table_graph, make_plan, make_table_message):
    plan = make_plan(table_graph, [record(TransformKind.TAB_SPLIT, (1,))])
    for count in range(9):
        ast = make_table_message(table_graph, count)
        wire = serialize(ast, plan, 0)
        assert wire == bytes([count]) + bytes(range(count)) + bytes(0x80 + i for i in range(count))
        assert parse(wire, plan) == ast


def test_rep_split_counts_elements_from_the_region(make_plan):
    graph = parse_spec(PAIRS_SPEC)
    plan = make_plan(graph, [record(TransformKind.REP_SPLIT)])
    ast = new_ast(graph)
    for i in range(4):
        push_element(ast, "pairs")
        set_value(ast, f"pairs[{i}].x", bytes([i]))
        set_value(ast, f"pairs[{i}].y", bytes([0xF0, i]))
    wire = serialize(ast, plan, 0)
    assert wire == bytes(range(4)) + b"".join(bytes([0xF0, i]) for i in range(4))
    assert parse(wire, plan) == ast
    with pytest.raises(ParseError) as e:
        parse(wire[:-1], plan)
    assert e.value.rule_id == "element-size"


def test_boundary_change_replaces_delimiter(http, make_plan):
    graph = http.graph
    plan = make_plan(graph, [record(TransformKind.BOUNDARY_CHANGE, (0,), width=2)])
    ast = http.sample("get_request")
    wire = serialize(ast, plan, 0)
    assert wire.startswith(b"\x00\x03GET/index.html ")
    assert parse(wire, plan) == ast


def test_pad_bytes_come_from_the_message_seed(record_graph, make_plan):
    plan = make_plan(record_graph, [record(TransformKind.PAD_INSERT, (), index=1, width=4)])
    ast = record_message(record_graph)
    wire = serialize(ast, plan, 21)
    assert wire[2:6] == slot_bytes(21, "record_pad", (), 4)
    assert parse(wire, plan) == ast
    assert serialize(ast, plan, 21) == wire


def test_missing_value(record_graph):
    ast = new_ast(record_graph)
    with pytest.raises(SerializeError) as e:
        serialize(ast, identity_plan(record_graph), 0)
    assert e.value.rule_id == "missing-value"
    assert e.value.node == "kind"


def test_presence_must_match_referent(http):
    ast = http.sample("get_request")
    set_present(ast, "body", True)
    set_value(ast, "body_content", b"x")
    with pytest.raises(SerializeError) as e:
        serialize(ast, identity_plan(http.graph), 0)
    assert e.value.rule_id == "presence-mismatch"


def test_delimiter_collision(http):
    ast = http.sample("get_request")
    set_value(ast, "target", b"/a b")
    with pytest.raises(SerializeError) as e:
        serialize(ast, identity_plan(http.graph), 0)
    assert e.value.rule_id == "delimiter-collision"


def test_message_of_another_graph(record_graph, text_graph):
    with pytest.raises(SerializeError) as e:
        serialize(text_message(text_graph, b"x"), identity_plan(record_graph), 0)
    assert e.value.rule_id == "wrong-graph"


def test_parse_errors(record_graph):
    plan = identity_plan(record_graph)
    wire = serialize(record_message(record_graph), plan, 0)
    with pytest.raises(ParseError) as e:
        parse(wire[:6], plan)
    assert e.value.rule_id == "truncated-input"
    with pytest.raises(ParseError) as e:
        parse(wire + b"\x01", plan)
    assert e.value.rule_id == "trailing-bytes"
    with pytest.raises(ParseError) as e:
        parse(wire[:-1], plan)
    assert e.value.rule_id == "missing-delimiter"


def test_inconsistent_derived_field(modbus):
    plan = identity_plan(modbus.graph)
    wire = bytearray(serialize(modbus.sample("write_multiple_registers_request"), plan, 0))
    assert wire[12] == 4
    wire[12] = 5
    with pytest.raises(ParseError) as e:
        parse(bytes(wire), plan)
    assert e.value.rule_id == "inconsistent-derived"


def test_serialization_is_deterministic(modbus):
    plan = obfuscate(modbus.graph, 3, 8)
    ast = modbus.sample("read_holding_registers_response")
    assert serialize(ast, plan, 77) == serialize(ast, plan, 77)


def test_parsed_message_is_independent_of_plan(http):
    ast = http.sample("post_request")
    for seed in range(4):
        plan = obfuscate(http.graph, 2, seed)
        assert parse(serialize(ast, plan, seed), plan) == ast


@pytest.mark.parametrize("budget", [0, 1, 2])
def test_roundtrip_check_on_bundled_specs(modbus_graph, http_graph, budget):
    for graph in (modbus_graph, http_graph):
        report = roundtrip_check(graph, obfuscate(graph, budget, 31), 40, 5)
        assert report.passed, report.render()


def test_roundtrip_check_rejects_foreign_plan(modbus_graph, http_graph):
    report = roundtrip_check(modbus_graph, identity_plan(http_graph), 10, 1)
    assert not report.passed
    assert report.error == "plan does not match spec"


@given(
    data=st.binary(max_size=40),
    tail=st.binary(max_size=10).filter(lambda b: 0 not in b),
    plan_seed=st.integers(min_value=0, max_value=2**64 - 1),
    msg_seed=st.integers(min_value=0, max_value=2**64 - 1),
)
@hypothesis_settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
def test_record_round_trip_under_random_plans(record_graph, data, tail, plan_seed, msg_seed):
    plan = obfuscate(record_graph, 2, plan_seed)
    ast = record_message(record_graph, data, tail)
    assert parse(serialize(ast, plan, msg_seed), plan) == ast


@pytest.mark.slow
@pytest.mark.parametrize("budget", [0, 1, 2, 3, 4])
def test_thousand_round_trips_per_budget(modbus_graph, http_graph, budget):
    for graph in (modbus_graph, http_graph):
        report = roundtrip_check(graph, obfuscate(graph, budget, 1000 + budget), 1000, budget)
        assert report.passed, report.render()


def test_element_indices_key_the_random_streams(modbus, make_plan):
    graph = modbus.graph
    plan = make_plan(graph, [record(TransformKind.SPLIT_XOR, graph.path_of("rh_register"))])
    ast = modbus.sample("read_holding_registers_response")
    wire = serialize(ast, plan, 4)
    assert wire[5] == 3 + 3 * 4
    assert wire[9:11] == slot_bytes(4, "rh_register", (0,), 2)
    assert wire[13:15] == slot_bytes(4, "rh_register", (1,), 2)
    assert parse(wire, plan) == ast


def test_empty_plan_ignores_the_message_seed(modbus):
    plan = identity_plan(modbus.graph)
    ast = modbus.sample("write_multiple_coils_request")
    assert len({serialize(ast, plan, seed) for seed in range(20)}) == 1


@pytest.mark.parametrize("kind", [TransformKind.SPLIT_XOR, TransformKind.PAD_INSERT])
def test_message_seeds_vary_the_wire(record_graph, make_plan, kind):
    params = {"index": 1, "width": 2} if kind == TransformKind.PAD_INSERT else {}
    target = () if kind == TransformKind.PAD_INSERT else (0,)
    plan = make_plan(record_graph, [record(kind, target, **params)])
    ast = record_message(record_graph)
    pairs = [(serialize(ast, plan, 2 * k), serialize(ast, plan, 2 * k + 1)) for k in range(100)]
    assert any(a != b for a, b in pairs)
    assert all(parse(a, plan) == parse(b, plan) == ast for a, b in pairs)


def test_reader_stays_inside_its_region():
    canary = b"\x00\xff"
    reader = Reader(b"abc" + canary, 0, 3)
    assert reader.find(b"\x00") == -1
    assert reader.take(3) == b"abc"
    with pytest.raises(CodecError) as e:
        reader.take(1, "field")
    assert e.value.rule_id == "truncated-input"
    assert e.value.node == "field"


def test_length_region_is_not_over_read(modbus):
    plan = identity_plan(modbus.graph)
    wire = bytearray(serialize(modbus.sample("read_holding_registers_request"), plan, 0))
    wire[5] -= 1
    with pytest.raises(ParseError) as e:
        parse(bytes(wire), plan)
    assert e.value.rule_id == "truncated-input"
    assert e.value.node is not None


def test_hostile_count_fails_before_looping():
    graph = parse_spec(COUNTED_SPEC)
    plan = identity_plan(graph)
    for wire in (b"\xff\xff\xff\xff\x00", b"\x00\x0f\x42\x40"):
        with pytest.raises(ParseError) as e:
            parse(wire, plan)
        assert e.value.rule_id == "truncated-input"
        assert e.value.node == "items"
    assert parse(b"\x00\x00\x00\x02ab", plan).root.children[1].elements[1].value == b"b"


def test_check_count():
    reader = Reader(b"abcd")
    assert check_count(2, 2, reader) == 2
    assert check_count(10**9, 0, reader) == 10**9
    with pytest.raises(CodecError) as e:
        check_count(3, 2, reader, "items")
    assert (e.value.rule_id, e.value.node) == ("truncated-input", "items")


def test_tab_split_on_bundled_registers(modbus, make_plan):
    graph = modbus.graph
    plan = make_plan(graph, [record(TransformKind.TAB_SPLIT, graph.path_of("wrs_registers"))])
    ast = modbus.sample("write_multiple_registers_request")
    wire = serialize(ast, plan, 3)
    assert wire == bytes.fromhex("0008 0000 000b 11 10 0001 0002 04 0001 0a02")
    assert parse(wire, plan) == ast
    report = roundtrip_check(graph, plan, 60, 9)
    assert report.passed, report.render()


def test_message_package_imports_first():
    import subprocess
    import sys
    from pathlib import Path

    code = "import src.message, src.wire; print(src.wire.roundtrip_check.__name__)"
    done = subprocess.run(
        [sys.executable, "-c", code], cwd=Path(__file__).resolve().parents[1], capture_output=True, text=True
    )
    assert done.returncode == 0, done.stderr
    assert done.stdout.strip() == "roundtrip_check"
