from dataclasses import dataclass, field
from typing import Dict, List, Optional
import logging

from src.format.graph import (
    REPEATED_TYPES,
    BoundaryKind,
    DerivationKind,
    FormatGraph,
    FormatNode,
    NodeType,
    consumes_end,
    logical_width,
    min_width,
    static_width,
)

ERROR = "error"
WARNING = "warning"

ALLOWED_BOUNDARIES = {
    NodeType.TERMINAL: {BoundaryKind.FIXED, BoundaryKind.DELIMITED, BoundaryKind.LENGTH, BoundaryKind.END},
    NodeType.SEQUENCE: {BoundaryKind.DELEGATED, BoundaryKind.FIXED, BoundaryKind.LENGTH, BoundaryKind.END},
    NodeType.OPTIONAL: {BoundaryKind.DELEGATED},
    NodeType.REPETITION: {BoundaryKind.LENGTH, BoundaryKind.END, BoundaryKind.DELIMITED},
    NodeType.TABULAR: {BoundaryKind.COUNTER},
}


@dataclass(frozen=True)
class ValidationIssue:
    severity: str
    node: str
    rule_id: str
    message: str


@dataclass
class ValidationReport:
    issues: List[ValidationIssue] = field(default_factory=list)

    @property
    def errors(self) -> List[ValidationIssue]:
        return [i for i in self.issues if i.severity == ERROR]

    @property
    def warnings(self) -> List[ValidationIssue]:
        return [i for i in self.issues if i.severity == WARNING]

    @property
    def is_valid(self) -> bool:
        return not self.errors

    def rule_ids(self) -> List[str]:
        return [i.rule_id for i in self.issues]

    def render(self) -> str:
        if not self.issues:
            return "ok: no issues"
        return "\n".join(f"{i.severity}: [{i.rule_id}] {i.node}: {i.message}" for i in self.issues)


class GraphValidator:
    """Structural and referential consistency checks over a format graph"""

    def __init__(self, graph: FormatGraph):
        self.graph = graph
        self.logger = logging.getLogger(__name__)
        self.report = ValidationReport()
        self.order: Dict[int, int] = {}

    def _add(self, node: FormatNode, rule_id: str, message: str, severity: str = ERROR) -> None:
        self.report.issues.append(ValidationIssue(severity, node.name, rule_id, message))

    def validate(self) -> ValidationReport:
        nodes = self.graph.dfs_nodes()
        self.order = {id(node): position for position, node in enumerate(nodes)}

        for name in self.graph.duplicates:
            self.report.issues.append(
                ValidationIssue(ERROR, name, "duplicate-name", f"duplicate node name {name}")
            )

        for node in nodes:
            self._check_arity(node)
            self._check_boundary(node)
            self._check_references(node)
            self._check_layout(node)

        if self.report.errors:
            self.logger.debug(f"Graph {self.graph.name}: {len(self.report.errors)} validation error(s)")
        return self.report

    def _check_arity(self, node: FormatNode) -> None:
        count = len(node.children)
        if node.type == NodeType.TERMINAL and count:
            self._add(node, "arity", "terminal must not have children")
        elif node.type == NodeType.SEQUENCE and count < 1:
            self._add(node, "arity", "sequence needs at least one child")
        elif node.type in (NodeType.OPTIONAL, NodeType.REPETITION, NodeType.TABULAR) and count != 1:
            self._add(node, "arity", f"{node.type.value} needs exactly one child")

    def _check_boundary(self, node: FormatNode) -> None:
        kind = node.boundary.kind
        allowed = ALLOWED_BOUNDARIES[node.type]
        spread_part = (
            node.type == NodeType.REPETITION
            and kind == BoundaryKind.DELEGATED
            and node.parent is not None
            and node.parent.spread_hook is not None
        )
        if kind not in allowed and not spread_part:
            if node.type == NodeType.TERMINAL:
                self._add(node, "terminal-boundary", "terminal must use Fixed/Delimited/Length/End")
            else:
                self._add(node, "type-boundary", f"{node.type.value} cannot use a {kind.value} boundary")
        if kind == BoundaryKind.FIXED and (node.boundary.size is None or node.boundary.size < 1):
            self._add(node, "fixed-size", "fixed size must be at least 1")
        if kind == BoundaryKind.DELIMITED and not node.boundary.delim:
            self._add(node, "delimiter-empty", "delimiter must not be empty")
        if node.type == NodeType.SEQUENCE and kind == BoundaryKind.FIXED and node.boundary.size:
            width = sum(static_width(c) or 0 for c in node.children)
            if any(static_width(c) is None for c in node.children) or width != node.boundary.size:
                self._add(node, "fixed-sequence-width", "fixed sequence width must equal the sum of its children")

    def _precedes(self, referent: FormatNode, referrer: FormatNode) -> bool:
        if referent.is_ancestor_of(referrer) or referrer is referent:
            return False
        return self.order[id(referent)] < self.order[id(referrer)]

    def _visible(self, referent: FormatNode, referrer: FormatNode) -> bool:
        scope = referent.repeated_scope()
        return scope is None or scope.is_ancestor_of(referrer)

    def _lookup(self, node: FormatNode, name: Optional[str]) -> Optional[FormatNode]:
        target = self.graph.index.get(name or "")
        if target is None:
            self._add(node, "unknown-reference", f"unknown node {name}")
        return target

    def _check_ordered_ref(self, node: FormatNode, target: FormatNode) -> None:
        if not self._precedes(target, node):
            self._add(node, "reference-order", f"referent must precede referrer ({target.name})")
        if not self._visible(target, node):
            self._add(node, "reference-scope", f"{target.name} is only visible inside its repeated node")

    def _counted_by(self, node: FormatNode, target_name: str) -> bool:
        if node.name == target_name:
            return True
        parent = node.parent
        while parent is not None and parent.spread_hook is not None:
            if parent.name == target_name:
                return True
            parent = parent.parent
        return False

    def _check_references(self, node: FormatNode) -> None:
        kind = node.boundary.kind
        if kind in (BoundaryKind.LENGTH, BoundaryKind.COUNTER):
            target = self._lookup(node, node.boundary.ref)
            if target is not None:
                self._check_ordered_ref(node, target)
                wanted = DerivationKind.LENGTH_OF if kind == BoundaryKind.LENGTH else DerivationKind.COUNT_OF
                if not target.is_value_node:
                    self._add(node, "reference-kind", f"{target.name} does not carry a value")
                elif target.derivation.kind != wanted or not self._counted_by(node, target.derivation.ref or ""):
                    self._add(node, "reference-kind", f"{target.name} must derive {wanted.value}({node.name})")

        if node.presence is not None:
            if node.type != NodeType.OPTIONAL:
                self._add(node, "presence-on-optional", "only optional nodes carry a presence condition")
            if not node.presence.expected:
                self._add(node, "presence-width", "expected value must not be empty")
            target = self._lookup(node, node.presence.ref)
            if target is not None:
                self._check_ordered_ref(node, target)
                if not target.is_value_node or target.is_derived:
                    self._add(node, "reference-kind", f"{target.name} must be a user value field")
                width = logical_width(target)
                if width is not None and width != len(node.presence.expected):
                    self._add(node, "presence-width", f"expected value must be {width} byte(s) wide")
                delim = target.boundary.delim if target.boundary.kind == BoundaryKind.DELIMITED else None
                if delim and delim in node.presence.expected:
                    self._add(node, "presence-unreachable", "expected value contains the referent delimiter", WARNING)
        elif node.type == NodeType.OPTIONAL:
            self._add(node, "presence-on-optional", "optional node needs a presence condition")

        if node.is_derived:
            if not node.is_value_node:
                self._add(node, "derivation-target", "only value fields can be derived")
            elif static_width(node) is None:
                self._add(node, "derived-width", "derived field needs a fixed width")
            target = self._lookup(node, node.derivation.ref)
            if target is not None:
                if node.derivation.kind == DerivationKind.COUNT_OF and not (
                    target.type == NodeType.TABULAR or target.spread_hook is not None
                ):
                    self._add(node, "count-of-target", "count_of must reference a tabular node")
                if target.repeated_scope() is not node.repeated_scope():
                    self._add(node, "derivation-scope", "derived field and referent must share a repeated scope")

    def _check_layout(self, node: FormatNode) -> None:
        if node.type == NodeType.SEQUENCE:
            for child in node.children[:-1]:
                if consumes_end(child):
                    self._add(child, "end-not-last", "a field reading to the end must be the last child")
        if node.type in REPEATED_TYPES and node.children:
            element = node.children[0]
            if consumes_end(element):
                self._add(node, "repeated-element", "repeated element must not read to the end")
            if node.boundary.kind != BoundaryKind.DELEGATED and min_width(element) == 0:
                self._add(node, "repeated-element", "repeated element must occupy at least one byte")
            if node.boundary.kind == BoundaryKind.DELIMITED and node.boundary.delim:
                if not leading_bytes_safe(element, node.boundary.delim):
                    self._add(node, "repetition-prefix", "element may start with the repetition delimiter")


def leading_bytes_safe(element: FormatNode, delim: bytes) -> bool:
    """True when the first bytes of an element are user data that cannot open with delim"""
    if element.mirror_count or element.structural_hooks:
        return False
    if element.type == NodeType.TERMINAL:
        if element.is_pad or element.is_derived or element.const_hooks:
            return False
        if element.boundary.kind == BoundaryKind.DELIMITED:
            own = element.boundary.delim or b""
            return not (own.startswith(delim) or delim.startswith(own))
        return True
    if element.type == NodeType.SEQUENCE:
        # zero-width children let the next sibling lead
        for child in element.children:
            if not leading_bytes_safe(child, delim):
                return False
            if min_width(child) > 0:
                return True
        return True
    if not element.children:
        return True
    return leading_bytes_safe(element.children[0], delim)


def validate(graph: FormatGraph) -> ValidationReport:
    """Report every violated consistency rule of the graph"""
    return GraphValidator(graph).validate()
