from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Set, Tuple
import logging

from src.errors import ParseError, ProtoObfError, SerializeError
from src.format.graph import (
    BoundaryKind,
    FormatGraph,
    FormatNode,
    NodePath,
    NodeType,
    logical_width,
    min_width,
    static_width,
)
from src.message.ast import AstNode, MessageAst
from src.message.json_form import ast_to_json
from src.spec.printer import spec_hash_hex
from src.wire.runtime import (
    CodecError,
    Fragment,
    Reader,
    Scope,
    Slot,
    check_count,
    check_delimited,
    combine_value,
    const_decode,
    const_encode,
    derive_seed,
    from_int,
    slot_bytes,
    split_value,
    to_int,
)

if TYPE_CHECKING:
    from src.obfuscation.obfuscator import ObfuscationPlan

logger = logging.getLogger(__name__)

Indices = Tuple[int, ...]


def to_src(node: Optional[AstNode]) -> Any:
    """Traversal payload of an instance: bytes, the node itself, or element payloads"""
    if node is None:
        return None
    if node.type == NodeType.TERMINAL:
        return node.value
    if node.type in (NodeType.REPETITION, NodeType.TABULAR):
        return [to_src(e) for e in node.elements]
    return node


def derivation_targets(graph: FormatGraph) -> Set[str]:
    return {n.derivation.ref for n in graph.dfs_nodes() if n.is_derived}


class WireSerializer:
    """Depth-first serializer over the transformed graph of a plan"""

    def __init__(self, plan: "ObfuscationPlan", msg_seed: int):
        self.graph = plan.final_graph
        self.msg_seed = msg_seed
        self.targets = derivation_targets(self.graph)
        self.pending: List[Tuple[FormatNode, Slot, Scope, Indices]] = []
        self.leading_checks: List[Tuple[Fragment, bytes, str]] = []
        self.logger = logging.getLogger(__name__)

    def serialize(self, ast: MessageAst) -> bytes:
        if ast.root.node != self.graph.root.name:
            raise SerializeError(
                f"message instantiates {ast.root.node}, plan expects {self.graph.root.name}", rule_id="wrong-graph"
            )
        try:
            fragment = self._node(self.graph.root, to_src(ast.root), Scope(), ())
            self._resolve()
            for element, delim, name in self.leading_checks:
                if element.to_bytes().startswith(delim):
                    raise CodecError(f"element starts with delimiter {delim.hex()}", "delimiter-collision", name)
            return fragment.to_bytes()
        except CodecError as e:
            raise SerializeError(e.message, rule_id=e.rule_id, node=e.node) from e

    def _node(self, node: FormatNode, src: Any, scope: Scope, indices: Indices) -> Fragment:
        fragment = Fragment(mirrored=node.mirror_count % 2 == 1)
        count = 0

        if node.is_pad:
            fragment.append(slot_bytes(self.msg_seed, node.name, indices, node.boundary.size))
        elif node.is_derived:
            slot = Slot(static_width(node), node.name)
            fragment.append(slot)
            self.pending.append((node, slot, scope, indices))
        elif node.type == NodeType.TERMINAL or node.split_hook is not None:
            if src is None:
                raise SerializeError("missing required value", rule_id="missing-value", node=node.name)
            scope.values[node.name] = src
            self._emit_value(node, src, fragment, scope, indices)
        elif node.frame_hook is not None:
            frame = node.frame_hook
            for child in node.children:
                fragment.append(self._node(child, src if child.name == frame.body else None, scope, indices))
            if isinstance(src, bytes):
                scope.values[node.name] = src
        elif node.spread_hook is not None:
            spread = node.spread_hook
            count = len(src)
            for child in node.children:
                part = spread.part_of(child.name)
                part_src = None if part is None else [to_src(e.child_named(part)) for e in src]
                fragment.append(self._node(child, part_src, scope, indices))
        elif node.type == NodeType.SEQUENCE:
            for child in node.children:
                fragment.append(self._node(child, to_src(src.child_named(child.name)), scope, indices))
        elif node.type == NodeType.OPTIONAL:
            present = scope.values.get(node.presence.ref) == node.presence.expected
            if present != src.present:
                raise SerializeError(
                    "optional presence inconsistent with referent value", rule_id="presence-mismatch", node=node.name
                )
            if present:
                fragment.append(self._node(node.children[0], to_src(src.child), scope, indices))
        else:
            count = len(src)
            delim = node.boundary.delim if node.boundary.kind == BoundaryKind.DELIMITED else None
            for position, element in enumerate(src):
                element_fragment = self._node(node.children[0], element, scope.child(), indices + (position,))
                if delim:
                    self.leading_checks.append((element_fragment, delim, node.name))
                fragment.append(element_fragment)
            if delim:
                fragment.append(delim)

        if node.name in self.targets:
            scope.measures[node.name] = (len(fragment), count)
        return fragment

    def _emit_value(self, node: FormatNode, value: bytes, fragment: Fragment, scope: Scope, indices: Indices):
        for hook in node.const_hooks:
            value = const_encode(hook.op.value, value, hook.constant)
        if node.type == NodeType.TERMINAL:
            fragment.append(self._terminal_bytes(node, value))
            return
        split = node.split_hook
        if len(value) != split.width:
            raise CodecError(f"expected {split.width} byte(s), got {len(value)}", "width-mismatch", node.name)
        first_width = logical_width(node.child_named(split.first))
        mask = b"" if split.op.value == "cat" else slot_bytes(self.msg_seed, node.name, indices, split.width)
        first, second = split_value(split.op.value, value, mask, first_width)
        for child in node.children:
            part = first if child.name == split.first else second if child.name == split.second else None
            fragment.append(self._node(child, part, scope, indices))

    def _terminal_bytes(self, node: FormatNode, value: bytes) -> bytes:
        bound = node.boundary
        if bound.kind == BoundaryKind.FIXED and len(value) != bound.size:
            raise CodecError(f"expected {bound.size} byte(s), got {len(value)}", "width-mismatch", node.name)
        if bound.kind == BoundaryKind.DELIMITED:
            return check_delimited(value, bound.delim, node.name)
        return value

    def _resolve(self) -> None:
        """Fill every derived placeholder from the measure of its referent"""
        for node, slot, scope, indices in self.pending:
            measure = scope.measure(node.derivation.ref, node.derivation.kind.value)
            value = from_int(measure, logical_width(node), node.name)
            inner = Fragment()
            self._emit_value(node, value, inner, scope, indices)
            slot.fill(inner.to_bytes())


class WireParser:
    """Region-scoped parser over the transformed graph, rebuilding the original message"""

    def __init__(self, plan: "ObfuscationPlan"):
        self.graph = plan.final_graph
        self.original = plan.graph
        self.paths: Dict[str, NodePath] = dict(
            zip((n.name for n in self.original.dfs_nodes()), self.original.dfs_order())
        )
        self.origin: Dict[str, str] = {}
        for node in self.graph.dfs_nodes():
            if node.frame_hook is not None:
                self.origin[node.frame_hook.body] = self.origin.get(node.name, node.name)
        self.targets = derivation_targets(self.graph)
        self.derived: List[Tuple[FormatNode, bytes, Scope]] = []
        self.logger = logging.getLogger(__name__)

    def parse(self, wire: bytes) -> MessageAst:
        reader = Reader(bytes(wire))
        try:
            src = self._node(self.graph.root, reader, Scope())
            reader.expect_end(self.graph.root.name)
        except CodecError as e:
            raise ParseError(e.message, rule_id=e.rule_id, node=e.node) from e
        for node, value, scope in self.derived:
            measure = scope.measure(node.derivation.ref, node.derivation.kind.value)
            if to_int(value) != measure:
                raise ParseError(
                    f"derived value {to_int(value)} disagrees with content ({measure})",
                    rule_id="inconsistent-derived",
                    node=node.name,
                )
        return MessageAst(self.original, self._from_src(self.original.root, src))

    def _from_src(self, original: FormatNode, src: Any) -> AstNode:
        path = self.paths[original.name]
        if original.type == NodeType.TERMINAL:
            return AstNode(original.name, original.type, path, value=None if original.is_derived else src)
        if original.type in (NodeType.REPETITION, NodeType.TABULAR):
            element = original.children[0]
            return AstNode(original.name, original.type, path, elements=[self._from_src(element, s) for s in src])
        return src

    def _extent(self, node: FormatNode, reader: Reader, scope: Scope, count: Optional[int]) -> int:
        bound = node.boundary
        if bound.kind == BoundaryKind.FIXED:
            return bound.size
        if bound.kind == BoundaryKind.LENGTH:
            return scope.lookup(bound.ref, node.name)
        if bound.kind == BoundaryKind.END:
            return reader.remaining
        if bound.kind == BoundaryKind.COUNTER:
            return scope.lookup(bound.ref, node.name) * static_width(node.children[0])
        if node.type == NodeType.OPTIONAL:
            if scope.values.get(node.presence.ref) != node.presence.expected:
                return 0
            return self._extent(node.children[0], reader, scope, count)
        if node.type == NodeType.REPETITION:
            return (count or 0) * static_width(node.children[0])
        return static_width(node)

    def _node(self, node: FormatNode, reader: Reader, scope: Scope, count: Optional[int] = None) -> Any:
        before = reader.pos
        bound = node.boundary
        if node.mirror_count % 2 == 1:
            region = reader.mirrored(self._extent(node, reader, scope, count), node.name)
            src = self._content(node, region, scope, count)
            region.expect_end(node.name)
        elif bound.kind in (BoundaryKind.FIXED, BoundaryKind.LENGTH, BoundaryKind.END):
            region = reader.sub(self._extent(node, reader, scope, count), node.name)
            src = self._content(node, region, scope, count)
            region.expect_end(node.name)
        else:
            src = self._content(node, reader, scope, count)
        if node.name in self.targets:
            scope.measures[node.name] = (reader.pos - before, len(src) if isinstance(src, list) else 0)
        return src

    def _value(self, node: FormatNode, value: bytes, scope: Scope) -> bytes:
        for hook in reversed(node.const_hooks):
            value = const_decode(hook.op.value, value, hook.constant)
        scope.values[node.name] = value
        if node.is_derived:
            self.derived.append((node, value, scope))
        return value

    def _content(self, node: FormatNode, region: Reader, scope: Scope, count: Optional[int]) -> Any:
        if node.type == NodeType.TERMINAL:
            if node.boundary.kind == BoundaryKind.DELIMITED:
                wire = region.take_delimited(node.boundary.delim, node.name)
            else:
                wire = region.take_rest()
            return None if node.is_pad else self._value(node, wire, scope)

        if node.type == NodeType.SEQUENCE:
            if node.split_hook is not None:
                split = node.split_hook
                parts = {child.name: self._node(child, region, scope) for child in node.children}
                return self._value(node, combine_value(split.op.value, parts[split.first], parts[split.second]), scope)
            if node.frame_hook is not None:
                parts = {child.name: self._node(child, region, scope) for child in node.children}
                body = parts[node.frame_hook.body]
                if isinstance(body, bytes):
                    scope.values[node.name] = body
                return body
            if node.spread_hook is not None:
                return self._spread(node, region, scope)
            parts = {child.name: self._node(child, region, scope) for child in node.children}
            original = self.original.node(self.origin.get(node.name, node.name))
            return AstNode(
                original.name,
                original.type,
                self.paths[original.name],
                children=[self._from_src(child, parts.get(child.name)) for child in original.children],
            )

        if node.type == NodeType.OPTIONAL:
            original = self.original.node(self.origin.get(node.name, node.name))
            present = scope.values.get(node.presence.ref) == node.presence.expected
            child = None
            if present:
                child = self._from_src(original.children[0], self._node(node.children[0], region, scope))
            return AstNode(original.name, original.type, self.paths[original.name], present=present, child=child)

        return self._elements(node, region, scope, count)

    def _elements(self, node: FormatNode, region: Reader, scope: Scope, count: Optional[int]) -> List[Any]:
        element = node.children[0]
        bound = node.boundary
        elements: List[Any] = []
        if bound.kind in (BoundaryKind.COUNTER, BoundaryKind.DELEGATED):
            total = scope.lookup(bound.ref, node.name) if bound.kind == BoundaryKind.COUNTER else count or 0
            check_count(total, min_width(element), region, node.name)
            for _ in range(total):
                elements.append(self._node(element, region, scope.child()))
            return elements

        delim = bound.delim if bound.kind == BoundaryKind.DELIMITED else None
        while True:
            if delim is not None:
                if region.startswith(delim):
                    region.skip(delim, node.name)
                    return elements
                if not region.remaining:
                    raise CodecError(f"missing delimiter {delim.hex()}", "missing-delimiter", node.name)
            elif not region.remaining:
                return elements
            before = region.pos
            elements.append(self._node(element, region, scope.child()))
            if region.pos == before:
                raise CodecError("repeated element consumed no input", "zero-progress", node.name)

    def _spread(self, node: FormatNode, region: Reader, scope: Scope) -> List[AstNode]:
        spread = node.spread_hook
        count = None
        part_children = [c for c in node.children if spread.part_of(c.name) is not None]
        if any(c.boundary.kind == BoundaryKind.DELEGATED for c in part_children):
            others = sum(static_width(c) for c in node.children if spread.part_of(c.name) is None)
            unit = sum(static_width(c.children[0]) for c in part_children)
            available = region.remaining - others
            if available < 0 or available % unit:
                raise ParseError(
                    f"{available} byte(s) do not hold whole elements of {unit} byte(s)",
                    rule_id="element-size",
                    node=node.name,
                )
            count = available // unit

        lists: Dict[str, List[Any]] = {}
        for child in node.children:
            src = self._node(child, region, scope, count)
            part = spread.part_of(child.name)
            if part is not None:
                lists[part] = src
        sizes = {len(v) for v in lists.values()}
        if len(sizes) > 1:
            raise ParseError("spread parts disagree on the element count", rule_id="part-count", node=node.name)

        element = self.original.node(spread.element)
        total = sizes.pop() if sizes else 0
        return [
            AstNode(
                element.name,
                element.type,
                self.paths[element.name],
                children=[self._from_src(c, lists[c.name][i]) for c in element.children],
            )
            for i in range(total)
        ]


def serialize(ast: MessageAst, plan: "ObfuscationPlan", msg_seed: int) -> bytes:
    """Obfuscated wire bytes of a message under a plan"""
    return WireSerializer(plan, msg_seed).serialize(ast)


def parse(wire: bytes, plan: "ObfuscationPlan") -> MessageAst:
    """Message over the original graph recovered from obfuscated wire bytes"""
    return WireParser(plan).parse(wire)


@dataclass
class RoundtripReport:
    passed: bool
    trials: int
    failures: int = 0
    ast_json: Optional[str] = None
    wire_hex: Optional[str] = None
    error: Optional[str] = None

    def render(self) -> str:
        if self.passed:
            return f"ok: {self.trials} round trip(s)"
        lines = [f"FAILED after {self.trials} trial(s): {self.error}"]
        if self.wire_hex is not None:
            lines.append(f"wire: {self.wire_hex}")
        if self.ast_json is not None:
            lines.append(f"ast: {self.ast_json}")
        return "\n".join(lines)


def roundtrip_check(graph: FormatGraph, plan: "ObfuscationPlan", trials: int, seed: int, bounds=None):
    """Random messages through serialize then parse; stops at the first counterexample"""
    # message.generator imports the runtime through this package
    from src.message.generator import random_ast

    if plan.spec_hash != spec_hash_hex(graph):
        return RoundtripReport(False, 0, 1, error="plan does not match spec")
    for trial in range(trials):
        ast = random_ast(graph, derive_seed(seed, "ast", trial), bounds)
        wire = None
        try:
            wire = serialize(ast, plan, derive_seed(seed, "msg", trial))
            back = parse(wire, plan)
            error = None if back == ast else "parsed message differs from the original"
        except ProtoObfError as e:
            error = f"[{e.rule_id}] {e}"
        if error is not None:
            logger.error(f"Round trip failed at trial {trial}: {error}")
            return RoundtripReport(
                False,
                trial + 1,
                1,
                ast_json=ast_to_json(ast),
                wire_hex=None if wire is None else wire.hex(),
                error=error,
            )
    return RoundtripReport(True, trials)
