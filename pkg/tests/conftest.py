from typing import List

import pytest

from src.config.settings import ObfuscatorSettings
from src.format.graph import FormatGraph
from src.message.ast import MessageAst, new_ast, push_element, set_value
from src.obfuscation.obfuscator import ObfuscationPlan, replay
from src.obfuscation.transforms import TransformRecord
from src.protocols import get_protocol
from src.spec.parser import parse_spec
from src.spec.printer import spec_hash_hex

TEXT_SPEC = """
protocol text {
    node payload { type: terminal boundary: end }
    root: payload
}
"""

WORD_SPEC = """
protocol word {
    node word { type: terminal boundary: fixed(1) }
    root: word
}
"""

RECORD_SPEC = """
protocol record {
    node record { type: sequence children: [kind, size, data, tail] }
    node kind { type: terminal boundary: fixed(2) }
    node size { type: terminal boundary: fixed(2) derives: length_of(data) }
    node data { type: terminal boundary: length(size) }
    node tail { type: terminal boundary: delimited(0x00) }
    root: record
}
"""

TABLE_SPEC = """
protocol table {
    node table { type: sequence children: [count, items] }
    node count { type: terminal boundary: fixed(1) derives: count_of(items) }
    node items { type: tabular boundary: counter(count) child: item }
    node item { type: sequence children: [a, b] }
    node a { type: terminal boundary: fixed(1) }
    node b { type: terminal boundary: fixed(1) }
    root: table
}
"""


def plan_with(graph: FormatGraph, records: List[TransformRecord]) -> ObfuscationPlan:
    """Plan made of hand-picked records, bound like a loaded plan file"""
    plan = ObfuscationPlan(
        protocol=graph.name,
        spec_hash=spec_hash_hex(graph),
        seed=0,
        per_node_budget=0,
        records=list(records),
    )
    return plan.bind(graph, replay(graph, list(records)))


def table_message(graph: FormatGraph, count: int) -> MessageAst:
    ast = new_ast(graph)
    for i in range(count):
        push_element(ast, "items")
        set_value(ast, f"items[{i}].a", bytes([i]))
        set_value(ast, f"items[{i}].b", bytes([0x80 + i]))
    return ast


@pytest.fixture
def settings():
    return ObfuscatorSettings.get_test_settings()


@pytest.fixture(scope="session")
def modbus():
    return get_protocol("modbus")


@pytest.fixture(scope="session")
def http():
    return get_protocol("http")


@pytest.fixture(scope="session")
def modbus_graph(modbus):
    return modbus.graph


@pytest.fixture(scope="session")
def http_graph(http):
    return http.graph


@pytest.fixture
def text_graph():
    return parse_spec(TEXT_SPEC)


@pytest.fixture
def word_graph():
    return parse_spec(WORD_SPEC)


@pytest.fixture
def record_graph():
    return parse_spec(RECORD_SPEC)


@pytest.fixture
def table_graph():
    return parse_spec(TABLE_SPEC)


@pytest.fixture
def make_plan():
    return plan_with


@pytest.fixture
def make_table_message():
    return table_message
