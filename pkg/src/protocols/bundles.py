from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from src.errors import ProtoObfError
from src.format.graph import FormatGraph, NodeType
from src.message.ast import MessageAst, new_ast, push_element, set_present, set_value
from src.spec.parser import parse_spec

SPEC_DIR = Path(__file__).resolve().parents[2] / "specs"
BODY_MARKER = b"Content-Length"

SampleBuilder = Callable[[FormatGraph], MessageAst]


@dataclass
class ProtocolBundle:
    """Bundled specification with sample messages built through the message accessors"""

    name: str
    spec_text: str
    samples: Dict[str, SampleBuilder]
    notes: str = ""

    @cached_property
    def graph(self) -> FormatGraph:
        return parse_spec(self.spec_text)

    def sample(self, name: str) -> MessageAst:
        if name not in self.samples:
            raise ProtoObfError(f"{self.name} has no sample {name}", rule_id="unknown-sample")
        return self.samples[name](self.graph)

    def sample_asts(self) -> Dict[str, MessageAst]:
        return {name: builder(self.graph) for name, builder in self.samples.items()}


def _u16(value: int) -> bytes:
    return value.to_bytes(2, "big")


@dataclass(frozen=True)
class ModbusSample:
    transaction: int
    function_code: int
    branch: str
    values: Dict[str, bytes]
    elements: Dict[str, List[bytes]] = field(default_factory=dict)

    @property
    def is_response(self) -> bool:
        return self.branch.endswith("_resp")

    def build(self, graph: FormatGraph) -> MessageAst:
        ast = new_ast(graph)
        set_value(ast, "transaction_id", _u16(self.transaction))
        set_value(ast, "protocol_id", _u16(1 if self.is_response else 0))
        set_value(ast, "unit_id", b"\x11")
        set_value(ast, "function_code", bytes([self.function_code]))
        set_present(ast, "response" if self.is_response else "request", True)
        set_present(ast, self.branch, True)
        for name, value in self.values.items():
            set_value(ast, name, value)
        for name, values in self.elements.items():
            element = graph.node(name).children[0]
            parts = element.children if element.type == NodeType.SEQUENCE else [element]
            for position, value in enumerate(values):
                push_element(ast, name)
                offset = 0
                # element bytes are cut across its fixed-width parts
                for part in parts:
                    width = part.boundary.size if len(parts) > 1 else len(value)
                    set_value(ast, f"{name}[{position}].{part.name}", value[offset:offset + width])
                    offset += width
        return ast


MODBUS_SAMPLES: Dict[str, ModbusSample] = {
    "read_coils_request": ModbusSample(
        0x0001, 0x01, "read_coils_req", {"rc_start": _u16(0x0013), "rc_quantity": _u16(0x0025)}
    ),
    "read_discrete_inputs_request": ModbusSample(
        0x0002, 0x02, "read_discrete_req", {"rd_start": _u16(0x00C4), "rd_quantity": _u16(0x0016)}
    ),
    "read_holding_registers_request": ModbusSample(
        0x0001, 0x03, "read_holding_req", {"rh_start": _u16(0x006B), "rh_quantity": _u16(0x0003)}
    ),
    "read_input_registers_request": ModbusSample(
        0x0004, 0x04, "read_input_req", {"ri_start": _u16(0x0008), "ri_quantity": _u16(0x0001)}
    ),
    "write_single_coil_request": ModbusSample(
        0x0005, 0x05, "write_coil_req", {"wc_address": _u16(0x00AC), "wc_value": _u16(0xFF00)}
    ),
    "write_single_register_request": ModbusSample(
        0x0006, 0x06, "write_register_req", {"wr_address": _u16(0x0001), "wr_value": _u16(0x0003)}
    ),
    "write_multiple_coils_request": ModbusSample(
        0x0007,
        0x0F,
        "write_coils_req",
        {"wcs_start": _u16(0x0013), "wcs_quantity": _u16(0x000A)},
        {"wcs_bytes": [b"\xcd", b"\x01"]},
    ),
    "write_multiple_registers_request": ModbusSample(
        0x0008,
        0x10,
        "write_registers_req",
        {"wrs_start": _u16(0x0001)},
        {"wrs_registers": [_u16(0x000A), _u16(0x0102)]},
    ),
    "read_coils_response": ModbusSample(
        0x0001, 0x01, "read_coils_resp", {}, {"rc_status": [b"\xcd", b"\x6b", b"\x05"]}
    ),
    "read_discrete_inputs_response": ModbusSample(
        0x0002, 0x02, "read_discrete_resp", {}, {"rd_status": [b"\xac", b"\xdb", b"\x35"]}
    ),
    "read_holding_registers_response": ModbusSample(
        0x0001, 0x03, "read_holding_resp", {}, {"rh_registers": [_u16(0x022B), _u16(0x0000), _u16(0x0064)]}
    ),
    "read_input_registers_response": ModbusSample(
        0x0004, 0x04, "read_input_resp", {}, {"ri_registers": [_u16(0x000A)]}
    ),
    "write_single_coil_response": ModbusSample(
        0x0005, 0x05, "write_coil_resp", {"wc_echo_address": _u16(0x00AC), "wc_echo_value": _u16(0xFF00)}
    ),
    "write_single_register_response": ModbusSample(
        0x0006, 0x06, "write_register_resp", {"wr_echo_address": _u16(0x0001), "wr_echo_value": _u16(0x0003)}
    ),
    "write_multiple_coils_response": ModbusSample(
        0x0007, 0x0F, "write_coils_resp", {"wcs_echo_start": _u16(0x0013), "wcs_echo_quantity": _u16(0x000A)}
    ),
    "write_multiple_registers_response": ModbusSample(
        0x0008, 0x10, "write_registers_resp", {"wrs_echo_start": _u16(0x0001), "wrs_echo_quantity": _u16(0x0002)}
    ),
}


def _http_request(
    method: bytes, target: bytes, headers: List[Tuple[bytes, bytes]], body: Optional[bytes] = None
) -> SampleBuilder:
    """Request whose first header is the lead line; a body goes with a leading Content-Length"""
    (lead_name, lead_value), rest = headers[0], headers[1:]
    if (body is not None) != (lead_name == BODY_MARKER):
        raise ProtoObfError(f"a body needs {BODY_MARKER.decode()} as first header", rule_id="sample")

    def build(graph: FormatGraph) -> MessageAst:
        ast = new_ast(graph)
        set_value(ast, "method", method)
        set_value(ast, "target", target)
        set_value(ast, "version", b"HTTP/1.1")
        set_value(ast, "lead_name", lead_name)
        set_value(ast, "lead_value", lead_value)
        for position, (name, value) in enumerate(rest):
            push_element(ast, "headers")
            set_value(ast, f"headers[{position}].header_name", name)
            set_value(ast, f"headers[{position}].header_value", value)
        if body is not None:
            set_present(ast, "body", True)
            set_value(ast, "body_content", body)
        return ast

    return build


HTTP_SAMPLES: Dict[str, SampleBuilder] = {
    "get_request": _http_request(
        b"GET", b"/index.html", [(b"Host", b" example.com"), (b"Accept", b" */*")]
    ),
    "post_request": _http_request(
        b"POST",
        b"/submit",
        [(BODY_MARKER, b" 11"), (b"Host", b" example.com")],
        b"hello world",
    ),
    "head_request": _http_request(b"HEAD", b"/", [(b"Host", b" example.com")]),
}


def _read_spec(name: str) -> str:
    return (SPEC_DIR / f"{name}.pobf").read_text(encoding="utf-8")


def modbus_spec() -> ProtocolBundle:
    """Modbus-TCP functions 1-6, 15 and 16 with their responses"""
    return ProtocolBundle(
        name="modbus",
        spec_text=_read_spec("modbus"),
        samples={name: sample.build for name, sample in MODBUS_SAMPLES.items()},
        notes="Requests use protocol id 0x0000 and responses 0x0001; exception responses are not modelled.",
    )


def http_spec() -> ProtocolBundle:
    """Simplified HTTP request: request line, header lines and an optional body"""
    return ProtocolBundle(
        name="http",
        spec_text=_read_spec("http"),
        samples=dict(HTTP_SAMPLES),
        notes="Keyword values are not validated; a body follows exactly when the first header is Content-Length.",
    )


PROTOCOLS: Dict[str, Callable[[], ProtocolBundle]] = {"modbus": modbus_spec, "http": http_spec}


def get_protocol(name: str) -> ProtocolBundle:
    try:
        return PROTOCOLS[name]()
    except KeyError:
        raise ProtoObfError(
            f"unknown protocol {name} (expected one of {', '.join(PROTOCOLS)})", rule_id="unknown-protocol"
        ) from None
