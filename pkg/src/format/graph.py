from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple, Union
import copy

from src.errors import SelectorError

NodePath = Tuple[int, ...]


class NodeType(str, Enum):
    TERMINAL = "terminal"
    SEQUENCE = "sequence"
    OPTIONAL = "optional"
    REPETITION = "repetition"
    TABULAR = "tabular"


REPEATED_TYPES = (NodeType.REPETITION, NodeType.TABULAR)


class BoundaryKind(str, Enum):
    FIXED = "fixed"
    DELIMITED = "delimited"
    LENGTH = "length"
    COUNTER = "counter"
    END = "end"
    DELEGATED = "delegated"


@dataclass(frozen=True)
class Boundary:
    kind: BoundaryKind
    size: Optional[int] = None
    delim: Optional[bytes] = None
    ref: Optional[str] = None

    @classmethod
    def fixed(cls, size: int) -> "Boundary":
        return cls(BoundaryKind.FIXED, size=size)

    @classmethod
    def delimited(cls, delim: bytes) -> "Boundary":
        return cls(BoundaryKind.DELIMITED, delim=bytes(delim))

    @classmethod
    def length(cls, ref: str) -> "Boundary":
        return cls(BoundaryKind.LENGTH, ref=ref)

    @classmethod
    def counter(cls, ref: str) -> "Boundary":
        return cls(BoundaryKind.COUNTER, ref=ref)

    @classmethod
    def end(cls) -> "Boundary":
        return cls(BoundaryKind.END)

    @classmethod
    def delegated(cls) -> "Boundary":
        return cls(BoundaryKind.DELEGATED)


class DerivationKind(str, Enum):
    NONE = "none"
    LENGTH_OF = "length_of"
    COUNT_OF = "count_of"


@dataclass(frozen=True)
class Derivation:
    kind: DerivationKind = DerivationKind.NONE
    ref: Optional[str] = None


NO_DERIVATION = Derivation()


@dataclass(frozen=True)
class PresenceCondition:
    ref: str
    expected: bytes


# Hooks are the annotations transformations leave on the graph. The serializer
# and the parser inspect them when they enter and leave a node.

class ValueOp(str, Enum):
    ADD = "add"
    SUB = "sub"
    XOR = "xor"
    CAT = "cat"


@dataclass(frozen=True)
class ConstHook:
    """Wire value = logical value (op) constant, modulo the field width"""
    op: ValueOp
    constant: bytes


@dataclass(frozen=True)
class SplitHook:
    """Logical value recombined from two named children"""
    op: ValueOp
    first: str
    second: str
    width: int


@dataclass(frozen=True)
class FrameHook:
    """Delimiter replaced by a length prefix (BoundaryChange)"""
    prefix: str
    body: str


@dataclass(frozen=True)
class PadHook:
    """Random bytes on serialization, discarded on parse"""


@dataclass(frozen=True)
class MirrorHook:
    """Serialized region of the node is emitted right to left"""


@dataclass(frozen=True)
class SpreadHook:
    """Elements of a repeated node spread over one repeated child per part"""
    element: str
    parts: Tuple[Tuple[str, str], ...]

    def part_of(self, child_name: str) -> Optional[str]:
        for final_name, part_name in self.parts:
            if final_name == child_name:
                return part_name
        return None


Hook = Union[ConstHook, SplitHook, FrameHook, PadHook, MirrorHook, SpreadHook]


@dataclass
class FormatNode:
    name: str
    type: NodeType
    boundary: Boundary
    children: List["FormatNode"] = field(default_factory=list)
    derivation: Derivation = NO_DERIVATION
    presence: Optional[PresenceCondition] = None
    hooks: Tuple[Hook, ...] = ()
    parent: Optional["FormatNode"] = field(default=None, compare=False, repr=False)

    @property
    def is_pad(self) -> bool:
        return any(isinstance(h, PadHook) for h in self.hooks)

    @property
    def is_derived(self) -> bool:
        return self.derivation.kind != DerivationKind.NONE

    @property
    def mirror_count(self) -> int:
        return sum(1 for h in self.hooks if isinstance(h, MirrorHook))

    @property
    def const_hooks(self) -> List[ConstHook]:
        return [h for h in self.hooks if isinstance(h, ConstHook)]

    @property
    def split_hook(self) -> Optional[SplitHook]:
        return next((h for h in self.hooks if isinstance(h, SplitHook)), None)

    @property
    def frame_hook(self) -> Optional[FrameHook]:
        return next((h for h in self.hooks if isinstance(h, FrameHook)), None)

    @property
    def spread_hook(self) -> Optional[SpreadHook]:
        return next((h for h in self.hooks if isinstance(h, SpreadHook)), None)

    @property
    def structural_hooks(self) -> bool:
        return any(isinstance(h, (SplitHook, FrameHook, SpreadHook)) for h in self.hooks)

    @property
    def is_value_node(self) -> bool:
        """Node whose content is a single logical byte value"""
        if self.type == NodeType.TERMINAL:
            return not self.is_pad
        if self.type != NodeType.SEQUENCE:
            return False
        if self.split_hook is not None:
            return True
        frame = self.frame_hook
        if frame is not None:
            body = self.child_named(frame.body)
            return body is not None and body.is_value_node
        return False

    def child_named(self, name: str) -> Optional["FormatNode"]:
        for child in self.children:
            if child.name == name:
                return child
        return None

    def walk(self) -> Iterator["FormatNode"]:
        """Pre-order depth-first traversal"""
        yield self
        for child in self.children:
            yield from child.walk()

    def ancestors(self) -> Iterator["FormatNode"]:
        node = self.parent
        while node is not None:
            yield node
            node = node.parent

    def is_ancestor_of(self, other: "FormatNode") -> bool:
        return any(a is self for a in other.ancestors())

    def repeated_scope(self) -> Optional["FormatNode"]:
        """Nearest Repetition/Tabular strictly above this node"""
        return next((a for a in self.ancestors() if a.type in REPEATED_TYPES), None)


class FormatGraph:
    """Message format graph: a tree of typed nodes with a name index"""

    def __init__(self, name: str, root: FormatNode):
        self.name = name
        self.root = root
        self.index: Dict[str, FormatNode] = {}
        self.duplicates: List[str] = []
        self.retired: Set[str] = set()
        self.reindex()

    def reindex(self) -> None:
        """Rebuild parent links and the name index after a rewrite"""
        self.index = {}
        self.duplicates = []
        self.retired = set()
        self.root.parent = None
        for node in self.root.walk():
            if node.spread_hook is not None:
                self.retired.add(node.spread_hook.element)
            for child in node.children:
                child.parent = node
            if node.name in self.index:
                self.duplicates.append(node.name)
            else:
                self.index[node.name] = node

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FormatGraph):
            return NotImplemented
        return self.name == other.name and self.root == other.root

    def __repr__(self) -> str:
        return f"FormatGraph({self.name!r}, {len(self.index)} nodes)"

    def copy(self) -> "FormatGraph":
        return FormatGraph(self.name, copy.deepcopy(self.root))

    def node(self, name: str) -> FormatNode:
        try:
            return self.index[name]
        except KeyError:
            raise SelectorError(f"unknown node {name}", rule_id="unknown-node") from None

    def resolve(self, path: NodePath) -> FormatNode:
        node = self.root
        for depth, index in enumerate(path):
            if not 0 <= index < len(node.children):
                raise SelectorError(
                    f"unresolved path {list(path)} at depth {depth}", rule_id="unresolved-path"
                )
            node = node.children[index]
        return node

    def path_of(self, name: str) -> NodePath:
        node = self.node(name)
        path: List[int] = []
        while node.parent is not None:
            path.append(next(i for i, c in enumerate(node.parent.children) if c is node))
            node = node.parent
        return tuple(reversed(path))

    def dfs_nodes(self) -> List[FormatNode]:
        return list(self.root.walk())

    def dfs_order(self) -> List[NodePath]:
        paths: List[NodePath] = []

        def visit(node: FormatNode, path: NodePath) -> None:
            paths.append(path)
            for i, child in enumerate(node.children):
                visit(child, path + (i,))

        visit(self.root, ())
        return paths

    def fresh_name(self, base: str, reserved: Iterable[str] = ()) -> str:
        """Unused node name derived from base; names retired by spreading stay taken"""
        taken = set(self.index) | self.retired | set(reserved)
        if base not in taken:
            return base
        counter = 2
        while f"{base}_{counter}" in taken:
            counter += 1
        return f"{base}_{counter}"


def dfs_order(graph: FormatGraph) -> List[NodePath]:
    """Pre-order depth-first enumeration of node paths"""
    return graph.dfs_order()


def static_width(node: FormatNode) -> Optional[int]:
    """Wire width of the node when it is known without reading the message"""
    kind = node.boundary.kind
    if kind == BoundaryKind.FIXED:
        return node.boundary.size
    if node.type == NodeType.SEQUENCE and kind == BoundaryKind.DELEGATED:
        total = 0
        for child in node.children:
            width = static_width(child)
            if width is None:
                return None
            total += width
        return total
    return None


def min_width(node: FormatNode) -> int:
    """Smallest number of bytes any instance of the node occupies"""
    kind = node.boundary.kind
    if kind == BoundaryKind.FIXED:
        return node.boundary.size or 0
    if kind == BoundaryKind.DELIMITED:
        return len(node.boundary.delim or b"")
    if node.type == NodeType.SEQUENCE:
        return sum(min_width(child) for child in node.children)
    return 0


def consumes_end(node: FormatNode) -> bool:
    """True when the node reads up to the end of its enclosing region"""
    if node.boundary.kind == BoundaryKind.END:
        return True
    if node.boundary.kind != BoundaryKind.DELEGATED or not node.children:
        return False
    if node.type == NodeType.SEQUENCE:
        return consumes_end(node.children[-1])
    if node.type == NodeType.OPTIONAL:
        return consumes_end(node.children[0])
    return False


def logical_width(node: FormatNode) -> Optional[int]:
    """Width of the logical value carried by a value node, when fixed"""
    if node.type == NodeType.TERMINAL:
        return node.boundary.size if node.boundary.kind == BoundaryKind.FIXED else None
    split = node.split_hook
    if split is not None:
        return split.width
    return None


@dataclass(frozen=True)
class Reference:
    referrer: str
    referent: str
    kind: str  # length | counter | presence | length_of | count_of


def references(graph: FormatGraph) -> List[Reference]:
    """Every name reference carried by boundaries, presence conditions and derivations"""
    refs: List[Reference] = []
    for node in graph.root.walk():
        if node.boundary.kind == BoundaryKind.LENGTH:
            refs.append(Reference(node.name, node.boundary.ref, "length"))
        elif node.boundary.kind == BoundaryKind.COUNTER:
            refs.append(Reference(node.name, node.boundary.ref, "counter"))
        if node.presence is not None:
            refs.append(Reference(node.name, node.presence.ref, "presence"))
        if node.is_derived:
            refs.append(Reference(node.name, node.derivation.ref, node.derivation.kind.value))
    return refs
