import pytest

from src.errors import GraphValidationError, SpecReferenceError, SpecSyntaxError
from src.format.graph import BoundaryKind, DerivationKind, NodeType
from src.spec.parser import load_spec, parse_spec, tokenize
from src.spec.printer import print_spec, spec_hash, spec_hash_hex
from src.protocols import SPEC_DIR


def test_parses_every_attribute(record_graph, http_graph):
    size = record_graph.node("size")
    assert size.boundary.kind == BoundaryKind.FIXED and size.boundary.size == 2
    assert size.derivation.kind == DerivationKind.LENGTH_OF and size.derivation.ref == "data"
    assert record_graph.node("data").boundary.ref == "size"
    assert record_graph.node("tail").boundary.delim == b"\x00"
    assert record_graph.root.type == NodeType.SEQUENCE
    assert record_graph.root.boundary.kind == BoundaryKind.DELEGATED

    body = http_graph.node("body")
    assert body.type == NodeType.OPTIONAL
    assert body.presence.ref == "lead_name" and body.presence.expected == b"Content-Length"
    assert http_graph.node("version").boundary.delim == b"\r\n"


def test_comments_and_layout_are_ignored(record_graph):
    text = print_spec(record_graph).replace("\n", "\n# comment line\n", 3)
    assert parse_spec(text) == record_graph


@pytest.mark.parametrize("name", ["modbus", "http"])
def test_print_then_parse_is_identity(name):
    graph = load_spec(SPEC_DIR / f"{name}.pobf")
    assert parse_spec(print_spec(graph)) == graph
    assert spec_hash(parse_spec(print_spec(graph))) == spec_hash(graph)


def test_spec_hash_is_sha256_hex(record_graph):
    digest = spec_hash_hex(record_graph)
    assert len(digest) == 64
    assert digest == digest.lower()
    assert spec_hash_hex(record_graph.copy()) == digest


def test_syntax_error_position_and_expectations():
    text = "protocol p {\n  node a { type: bogus }\n  root: a\n}\n"
    with pytest.raises(SpecSyntaxError) as e:
        parse_spec(text)
    assert (e.value.line, e.value.column) == (2, 18)
    assert "terminal" in e.value.expected
    assert e.value.rule_id == "syntax"


def test_malformed_byte_literal():
    text = "protocol p { node a { type: terminal boundary: delimited(0x0) } root: a }"
    with pytest.raises(SpecSyntaxError) as e:
        parse_spec(text)
    assert "0x0" in str(e.value)


def test_unexpected_character():
    with pytest.raises(SpecSyntaxError):
        tokenize("protocol p { node a { type: terminal; } }")


def test_missing_type():
    with pytest.raises(SpecSyntaxError):
        parse_spec("protocol p { node a { boundary: end } root: a }")


def test_unknown_reference():
    text = "protocol p { node a { type: terminal boundary: length(nope) } root: a }"
    with pytest.raises(SpecReferenceError) as e:
        parse_spec(text)
    assert e.value.rule_id == "unknown-reference"
    assert e.value.line == 1


def test_duplicate_node_declaration():
    text = (
        "protocol p { node a { type: terminal boundary: end } "
        "node a { type: terminal boundary: end } root: a }"
    )
    with pytest.raises(SpecReferenceError) as e:
        parse_spec(text)
    assert e.value.rule_id == "duplicate-name"


def test_unreachable_node():
    text = (
        "protocol p { node a { type: terminal boundary: end } "
        "node b { type: terminal boundary: end } root: a }"
    )
    with pytest.raises(SpecReferenceError) as e:
        parse_spec(text)
    assert e.value.rule_id == "unreachable-node"


def test_node_used_twice():
    text = (
        "protocol p { node s { type: sequence children: [a, a] } "
        "node a { type: terminal boundary: fixed(1) } root: s }"
    )
    with pytest.raises(SpecReferenceError) as e:
        parse_spec(text)
    assert e.value.rule_id == "tree-shape"


def test_invalid_graph_carries_the_report():
    text = (
        "protocol p { node s { type: sequence children: [a, b] } "
        "node a { type: terminal boundary: end } "
        "node b { type: terminal boundary: fixed(1) } root: s }"
    )
    with pytest.raises(GraphValidationError) as e:
        parse_spec(text)
    assert e.value.rule_id == "end-not-last"
    assert e.value.report.errors
