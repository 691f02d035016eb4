from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple, Union
import logging
import re

from src.errors import AstError, SelectorError
from src.format.graph import BoundaryKind, FormatGraph, FormatNode, NodePath, NodeType

logger = logging.getLogger(__name__)


@dataclass
class AstNode:
    """Instance of one format node.

    The populated payload depends on the node type: `value` for terminals,
    `children` for sequences, `present`/`child` for optionals and `elements`
    for repetitions and tabulars.
    """
    node: str
    type: NodeType
    path: NodePath
    value: Optional[bytes] = None
    children: List["AstNode"] = field(default_factory=list)
    present: bool = False
    child: Optional["AstNode"] = None
    elements: List["AstNode"] = field(default_factory=list)

    def child_named(self, name: str) -> Optional["AstNode"]:
        for child in self.children:
            if child.node == name:
                return child
        return None

    def walk(self) -> Iterator["AstNode"]:
        yield self
        for child in self.children:
            yield from child.walk()
        if self.child is not None:
            yield from self.child.walk()
        for element in self.elements:
            yield from element.walk()


@dataclass
class MessageAst:
    graph: FormatGraph
    root: AstNode

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MessageAst):
            return NotImplemented
        return self.graph.name == other.graph.name and self.root == other.root


SEGMENT = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)((?:\[\d+\])*)$")


@dataclass(frozen=True)
class FieldSelector:
    """Node name plus element indices of its repeated ancestors, outermost first.

    The textual form names the path down to the field, `Item[2].Addr`; a trailing
    index (`Item[2]`) selects the element node itself.
    """
    name: str
    indices: Tuple[int, ...] = ()
    element: bool = False
    via: Tuple[str, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "FieldSelector":
        names: List[str] = []
        indices: List[int] = []
        element = False
        for position, segment in enumerate(text.strip().split(".")):
            match = SEGMENT.match(segment)
            if match is None:
                raise SelectorError(f"malformed selector {text!r}", rule_id="selector-syntax")
            names.append(match.group(1))
            found = [int(i) for i in re.findall(r"\[(\d+)\]", match.group(2))]
            indices.extend(found)
            element = bool(found) and position == len(text.strip().split(".")) - 1
        return cls(names[-1], tuple(indices), element, tuple(names[:-1]))

    def __str__(self) -> str:
        suffix = "".join(f"[{i}]" for i in self.indices)
        return f"{self.name}{suffix}"


Selector = Union[str, FieldSelector]


def _selector(sel: Selector) -> FieldSelector:
    return sel if isinstance(sel, FieldSelector) else FieldSelector.parse(sel)


def skeleton(node: FormatNode, path: NodePath) -> AstNode:
    """Empty instance: unset values, absent optionals, no elements"""
    ast = AstNode(node.name, node.type, path)
    if node.type == NodeType.SEQUENCE:
        ast.children = [skeleton(child, path + (i,)) for i, child in enumerate(node.children)]
    return ast


def new_ast(graph: FormatGraph) -> MessageAst:
    return MessageAst(graph, skeleton(graph.root, ()))


def _target(ast: MessageAst, selector: FieldSelector) -> FormatNode:
    node = ast.graph.node(selector.name)
    if selector.element:
        if node.type not in (NodeType.REPETITION, NodeType.TABULAR):
            raise SelectorError(f"{node.name} has no elements", rule_id="selector-element")
        node = node.children[0]
    for name in selector.via:
        via = ast.graph.node(name)
        if not (via is node or via.is_ancestor_of(node)):
            raise SelectorError(f"{name} is not an ancestor of {node.name}", rule_id="selector-path")
    return node


def resolve(ast: MessageAst, sel: Selector) -> AstNode:
    """The unique instance a selector designates"""
    selector = _selector(sel)
    target = _target(ast, selector)
    path = ast.graph.path_of(target.name)
    current = ast.root
    graph_node = ast.graph.root
    pending = list(selector.indices)
    for index in path:
        if graph_node.type == NodeType.SEQUENCE:
            current = current.children[index]
        elif graph_node.type == NodeType.OPTIONAL:
            if current.child is None:
                raise SelectorError(f"optional {graph_node.name} is absent", rule_id="absent-optional")
            current = current.child
        else:
            if not pending:
                raise SelectorError(f"missing element index for {graph_node.name}", rule_id="selector-index")
            position = pending.pop(0)
            if position >= len(current.elements):
                raise SelectorError(
                    f"{graph_node.name} has {len(current.elements)} element(s), index {position}",
                    rule_id="selector-index",
                )
            current = current.elements[position]
        graph_node = graph_node.children[index]
    if pending:
        raise SelectorError(f"too many element indices in {selector}", rule_id="selector-index")
    return current


def set_value(ast: MessageAst, sel: Selector, value: bytes) -> MessageAst:
    """Store a terminal value; returns the same (mutated) message"""
    node = resolve(ast, sel)
    graph_node = ast.graph.node(node.node)
    if graph_node.type != NodeType.TERMINAL:
        raise AstError(f"{node.node} is a {graph_node.type.value}, not a terminal", rule_id="not-terminal")
    if graph_node.is_derived:
        raise AstError(f"{node.node} is computed during serialization", rule_id="derived-field", node=node.node)
    value = bytes(value)
    if graph_node.boundary.kind == BoundaryKind.FIXED and len(value) != graph_node.boundary.size:
        raise AstError(
            f"{node.node} expects {graph_node.boundary.size} byte(s), got {len(value)}",
            rule_id="width-mismatch",
            node=node.node,
        )
    node.value = value
    return ast


def get_value(ast: MessageAst, sel: Selector) -> Optional[bytes]:
    node = resolve(ast, sel)
    if node.type != NodeType.TERMINAL:
        raise AstError(f"{node.node} is a {node.type.value}, not a terminal", rule_id="not-terminal")
    return node.value


def push_element(ast: MessageAst, sel: Selector) -> MessageAst:
    """Append a skeleton element to a repetition or tabular"""
    node = resolve(ast, sel)
    graph_node = ast.graph.node(node.node)
    if graph_node.type not in (NodeType.REPETITION, NodeType.TABULAR):
        raise AstError(f"{node.node} is not a repeated node", rule_id="not-repeated", node=node.node)
    node.elements.append(skeleton(graph_node.children[0], node.path + (0,)))
    return ast


def set_present(ast: MessageAst, sel: Selector, flag: bool) -> MessageAst:
    node = resolve(ast, sel)
    graph_node = ast.graph.node(node.node)
    if graph_node.type != NodeType.OPTIONAL:
        raise AstError(f"{node.node} is not optional", rule_id="not-optional", node=node.node)
    if flag and node.child is None:
        node.child = skeleton(graph_node.children[0], node.path + (0,))
    elif not flag:
        node.child = None
    node.present = flag
    return ast


def element_count(ast: MessageAst, sel: Selector) -> int:
    node = resolve(ast, sel)
    if node.type not in (NodeType.REPETITION, NodeType.TABULAR):
        raise AstError(f"{node.node} is not a repeated node", rule_id="not-repeated", node=node.node)
    return len(node.elements)
