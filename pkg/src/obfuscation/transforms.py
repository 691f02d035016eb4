from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Set
import logging

from pydantic import BaseModel, ConfigDict, Field

from src.config.settings import ObfuscationRanges
from src.errors import TransformError
from src.format.graph import (
    Boundary,
    BoundaryKind,
    ConstHook,
    Derivation,
    DerivationKind,
    FormatGraph,
    FormatNode,
    FrameHook,
    MirrorHook,
    NodePath,
    NodeType,
    PadHook,
    SplitHook,
    SpreadHook,
    ValueOp,
    consumes_end,
    min_width,
    references,
    static_width,
)
from src.format.validation import leading_bytes_safe, validate

logger = logging.getLogger(__name__)


class TransformKind(str, Enum):
    SPLIT_ADD = "SplitAdd"
    SPLIT_SUB = "SplitSub"
    SPLIT_XOR = "SplitXor"
    SPLIT_CAT = "SplitCat"
    CONST_ADD = "ConstAdd"
    CONST_SUB = "ConstSub"
    CONST_XOR = "ConstXor"
    BOUNDARY_CHANGE = "BoundaryChange"
    PAD_INSERT = "PadInsert"
    READ_FROM_END = "ReadFromEnd"
    TAB_SPLIT = "TabSplit"
    REP_SPLIT = "RepSplit"
    CHILD_MOVE = "ChildMove"


class Phase(str, Enum):
    DOWN = "down"  # applied to the message before the node is serialized
    UP = "up"  # applied to the bytes produced for the node


SPLIT_OPS = {
    TransformKind.SPLIT_ADD: ValueOp.ADD,
    TransformKind.SPLIT_SUB: ValueOp.SUB,
    TransformKind.SPLIT_XOR: ValueOp.XOR,
    TransformKind.SPLIT_CAT: ValueOp.CAT,
}
CONST_OPS = {
    TransformKind.CONST_ADD: ValueOp.ADD,
    TransformKind.CONST_SUB: ValueOp.SUB,
    TransformKind.CONST_XOR: ValueOp.XOR,
}

AGGREGATION: FrozenSet[TransformKind] = frozenset(
    list(SPLIT_OPS) + list(CONST_OPS) + [TransformKind.PAD_INSERT, TransformKind.BOUNDARY_CHANGE]
)
ORDERING: FrozenSet[TransformKind] = frozenset(
    [TransformKind.READ_FROM_END, TransformKind.TAB_SPLIT, TransformKind.REP_SPLIT, TransformKind.CHILD_MOVE]
)
PHASES: Dict[TransformKind, Phase] = {
    kind: Phase.UP if kind in (TransformKind.BOUNDARY_CHANGE, TransformKind.READ_FROM_END) else Phase.DOWN
    for kind in TransformKind
}

CONSTRAINTS: Dict[TransformKind, str] = {
    **{
        kind: "target Terminal with a Fixed boundary; ancestors Delegated, End, Fixed or Length; "
        "no Fixed ancestor since the wire width doubles"
        for kind in (TransformKind.SPLIT_ADD, TransformKind.SPLIT_SUB, TransformKind.SPLIT_XOR)
    },
    TransformKind.SPLIT_CAT: "target Terminal with a Fixed boundary of at least 2 bytes; "
    "ancestors Delegated, End, Fixed or Length",
    **{
        kind: "target Terminal with a Fixed boundary; ancestors Delegated, End, Fixed or Length"
        for kind in CONST_OPS
    },
    TransformKind.BOUNDARY_CHANGE: "target boundary Delimited; ancestors Delegated or End",
    TransformKind.PAD_INSERT: "target Sequence whose extent is not Fixed and that has no Fixed ancestor; "
    "under a Delimited ancestor the pad never leads the sequence",
    TransformKind.READ_FROM_END: "no Delimited boundary on the target, in its subtree or on its ancestors; "
    "target extent determinable before parsing it",
    TransformKind.TAB_SPLIT: "target Tabular with a Counter boundary whose child is a plain Sequence of at "
    "least 2 parts; no reference between parts or to the element; no End inside the parts",
    TransformKind.REP_SPLIT: "target Repetition with a Length or End boundary whose child is a plain Sequence "
    "of at least 2 Fixed Terminals",
    TransformKind.CHILD_MOVE: "target Sequence with at least 2 children; after the swap every referent still "
    "precedes its referrer",
}

VALUE_ANCESTOR_BOUNDARIES = {BoundaryKind.DELEGATED, BoundaryKind.END, BoundaryKind.FIXED, BoundaryKind.LENGTH}
FRAME_ANCESTOR_BOUNDARIES = {BoundaryKind.DELEGATED, BoundaryKind.END}


class TransformParams(BaseModel):
    """Kind-specific parameters; unused fields stay None and are left out of plan files"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    offset: Optional[int] = Field(None, ge=1)  # SplitCat
    constant: Optional[str] = None  # Const*, lowercase hex of field width
    index: Optional[int] = Field(None, ge=0)  # PadInsert
    width: Optional[int] = Field(None, ge=1)  # PadInsert pad width, BoundaryChange prefix width
    first: Optional[int] = Field(None, ge=0)  # ChildMove
    second: Optional[int] = Field(None, ge=0)


class TransformRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: TransformKind
    target: List[int]
    phase: Phase
    params: TransformParams = Field(default_factory=TransformParams)

    @classmethod
    def build(cls, kind: TransformKind, target: NodePath, params: Optional[TransformParams] = None):
        return cls(kind=kind, target=list(target), phase=PHASES[kind], params=params or TransformParams())


def constraints(kind: TransformKind) -> str:
    return CONSTRAINTS[TransformKind(kind)]


def _ancestor_boundaries(node: FormatNode) -> Set[BoundaryKind]:
    return {a.boundary.kind for a in node.ancestors()}


def _subtree_delimited(node: FormatNode) -> bool:
    return any(n.boundary.kind == BoundaryKind.DELIMITED for n in node.walk())


def extent_known(node: FormatNode) -> bool:
    """True when the wire extent of the node is known before parsing its content"""
    kind = node.boundary.kind
    if kind in (BoundaryKind.FIXED, BoundaryKind.LENGTH, BoundaryKind.END):
        return True
    if kind == BoundaryKind.COUNTER:
        return static_width(node.children[0]) is not None
    if node.type == NodeType.SEQUENCE and kind == BoundaryKind.DELEGATED:
        return static_width(node) is not None
    if node.type == NodeType.OPTIONAL:
        return extent_known(node.children[0])
    if node.type == NodeType.REPETITION and kind == BoundaryKind.DELEGATED:
        return static_width(node.children[0]) is not None
    return False


def _violation(graph: FormatGraph, node: FormatNode, kind: TransformKind) -> Optional[str]:
    """Reason why kind cannot target node, None when the constraint row holds"""
    ancestors = _ancestor_boundaries(node)

    if kind in SPLIT_OPS or kind in CONST_OPS:
        if node.type != NodeType.TERMINAL or node.boundary.kind != BoundaryKind.FIXED:
            return "target must be a Fixed Terminal"
        if node.is_pad:
            return "pads carry no value"
        if not ancestors <= VALUE_ANCESTOR_BOUNDARIES:
            return "an ancestor boundary is not Delegated, End, Fixed or Length"
        if kind == TransformKind.SPLIT_CAT and node.boundary.size < 2:
            return "field is narrower than 2 bytes"
        if kind in SPLIT_OPS and kind != TransformKind.SPLIT_CAT and BoundaryKind.FIXED in ancestors:
            return "a Fixed ancestor cannot absorb the wider field"
        return None

    if kind == TransformKind.BOUNDARY_CHANGE:
        if node.boundary.kind != BoundaryKind.DELIMITED:
            return "target boundary must be Delimited"
        if not ancestors <= FRAME_ANCESTOR_BOUNDARIES:
            return "ancestors must be Delegated or End"
        return None

    if kind == TransformKind.PAD_INSERT:
        if node.type != NodeType.SEQUENCE:
            return "target must be a Sequence"
        if node.boundary.kind == BoundaryKind.FIXED or BoundaryKind.FIXED in ancestors:
            return "a Fixed extent cannot grow"
        return None

    if kind == TransformKind.READ_FROM_END:
        if _subtree_delimited(node) or BoundaryKind.DELIMITED in ancestors:
            return "a Delimited boundary is involved"
        if not extent_known(node):
            return "extent is not determinable"
        return None

    if kind == TransformKind.TAB_SPLIT:
        if node.type != NodeType.TABULAR or node.boundary.kind != BoundaryKind.COUNTER:
            return "target must be a Counter Tabular"
        return _element_violation(graph, node, fixed_parts=False)

    if kind == TransformKind.REP_SPLIT:
        if node.type != NodeType.REPETITION or node.boundary.kind not in (BoundaryKind.LENGTH, BoundaryKind.END):
            return "target must be a Length or End Repetition"
        return _element_violation(graph, node, fixed_parts=True)

    if kind == TransformKind.CHILD_MOVE:
        if node.type != NodeType.SEQUENCE or len(node.children) < 2:
            return "target must be a Sequence with at least 2 children"
        return None

    return f"unknown kind {kind}"


def _element_violation(graph: FormatGraph, node: FormatNode, fixed_parts: bool) -> Optional[str]:
    element = node.children[0]
    if element.type != NodeType.SEQUENCE or element.boundary.kind != BoundaryKind.DELEGATED or element.hooks:
        return "element must be a plain delegated Sequence"
    if len(element.children) < 2:
        return "element needs at least 2 parts"
    if any(part.is_pad for part in element.children):
        return "element holds padding"
    if fixed_parts and any(
        p.type != NodeType.TERMINAL or p.boundary.kind != BoundaryKind.FIXED for p in element.children
    ):
        return "parts must be Fixed Terminals"
    if not fixed_parts and any(
        n.boundary.kind == BoundaryKind.END for p in element.children for n in p.walk()
    ):
        return "parts must not read to the end"
    if not fixed_parts and any(min_width(part) == 0 for part in element.children):
        return "parts must each occupy at least one byte"

    owner: Dict[str, int] = {}
    for position, part in enumerate(element.children):
        for inner in part.walk():
            owner[inner.name] = position
    for ref in references(graph):
        if ref.referent == element.name:
            return "the element is referenced"
        if ref.referrer in owner and ref.referent in owner and owner[ref.referrer] != owner[ref.referent]:
            return "parts reference each other"
    return None


def _swap_legal(graph: FormatGraph, node: FormatNode, first: int, second: int) -> bool:
    children = list(node.children)
    children[first], children[second] = children[second], children[first]
    if any(consumes_end(c) for c in children[:-1]):
        return False

    rank: Dict[str, int] = {}
    for position, child in enumerate(children):
        for inner in child.walk():
            rank[inner.name] = position
    for ref in references(graph):
        if ref.kind in ("length_of", "count_of"):
            continue
        if ref.referrer in rank and ref.referent in rank and rank[ref.referent] > rank[ref.referrer]:
            return False

    if first == 0:
        for ancestor in node.ancestors():
            if ancestor.type == NodeType.REPETITION and ancestor.boundary.kind == BoundaryKind.DELIMITED:
                node.children[first], node.children[second] = node.children[second], node.children[first]
                try:
                    safe = leading_bytes_safe(ancestor.children[0], ancestor.boundary.delim)
                finally:
                    node.children[first], node.children[second] = node.children[second], node.children[first]
                if not safe:
                    return False
    return True


def candidate_params(
    graph: FormatGraph, path: NodePath, kind: TransformKind, ranges: Optional[ObfuscationRanges] = None
) -> List[TransformParams]:
    """Legal structural parameter choices; random parts (constants, pad widths) are left unset"""
    ranges = ranges or ObfuscationRanges()
    node = graph.resolve(path)
    if _violation(graph, node, kind) is not None:
        return []
    if kind == TransformKind.SPLIT_CAT:
        return [TransformParams(offset=k) for k in range(1, node.boundary.size)]
    if kind == TransformKind.BOUNDARY_CHANGE:
        return [TransformParams(width=w) for w in sorted(set(ranges.prefix_widths))]
    if kind == TransformKind.PAD_INSERT:
        delimited_above = BoundaryKind.DELIMITED in _ancestor_boundaries(node)
        indices = []
        for index in range(len(node.children) + 1):
            if delimited_above and sum(min_width(child) for child in node.children[:index]) == 0:
                continue
            if index == len(node.children) and consumes_end(node.children[-1]):
                continue
            indices.append(index)
        return [TransformParams(index=i) for i in indices]
    if kind == TransformKind.CHILD_MOVE:
        count = len(node.children)
        return [
            TransformParams(first=i, second=j)
            for i in range(count)
            for j in range(i + 1, count)
            if _swap_legal(graph, node, i, j)
        ]
    return [TransformParams()]


def applicable(graph: FormatGraph, target: NodePath) -> FrozenSet[TransformKind]:
    """Kinds whose constraints hold at target"""
    graph.resolve(target)
    return frozenset(kind for kind in TransformKind if candidate_params(graph, target, kind))


def _replace(graph: FormatGraph, old: FormatNode, new: FormatNode) -> None:
    if old.parent is None:
        graph.root = new
    else:
        siblings = old.parent.children
        siblings[next(i for i, c in enumerate(siblings) if c is old)] = new


def _check_params(graph: FormatGraph, record: TransformRecord, ranges: ObfuscationRanges) -> FormatNode:
    node = graph.resolve(tuple(record.target))
    reason = _violation(graph, node, record.kind)
    if reason is not None:
        raise TransformError(f"{record.kind.value} not applicable: {reason}", rule_id="constraint", node=node.name)
    if record.phase != PHASES[record.kind]:
        raise TransformError(f"{record.kind.value} runs in phase {PHASES[record.kind].value}", rule_id="param-range")

    params = record.params
    structural = candidate_params(graph, tuple(record.target), record.kind, ranges)
    if record.kind in CONST_OPS:
        try:
            constant = bytes.fromhex(params.constant or "")
        except ValueError:
            constant = b""
        if len(constant) != node.boundary.size:
            raise TransformError(f"constant must be {node.boundary.size} byte(s)", rule_id="param-range")
    elif record.kind == TransformKind.PAD_INSERT:
        if params.width is None or not ranges.pad_width.min <= params.width <= ranges.pad_width.max:
            raise TransformError(
                f"pad width must lie in [{ranges.pad_width.min}, {ranges.pad_width.max}]", rule_id="param-range"
            )
        if TransformParams(index=params.index) not in structural:
            raise TransformError(f"pad index {params.index} is not legal here", rule_id="param-range")
    elif params not in structural:
        raise TransformError(f"illegal parameters {params.model_dump(exclude_none=True)}", rule_id="param-range")
    return node


def apply_transform(
    graph: FormatGraph, record: TransformRecord, ranges: Optional[ObfuscationRanges] = None
) -> FormatGraph:
    """Rewritten copy of graph; the input graph is left untouched"""
    ranges = ranges or ObfuscationRanges()
    work = graph.copy()
    node = _check_params(work, record, ranges)
    kind = record.kind
    params = record.params

    if kind in SPLIT_OPS:
        width = node.boundary.size
        widths = (params.offset, width - params.offset) if kind == TransformKind.SPLIT_CAT else (width, width)
        first = FormatNode(work.fresh_name(f"{node.name}_1"), NodeType.TERMINAL, Boundary.fixed(widths[0]))
        second = FormatNode(
            work.fresh_name(f"{node.name}_2", reserved=[first.name]), NodeType.TERMINAL, Boundary.fixed(widths[1])
        )
        _replace(
            work,
            node,
            FormatNode(
                node.name,
                NodeType.SEQUENCE,
                Boundary.delegated(),
                children=[first, second],
                derivation=node.derivation,
                hooks=node.hooks + (SplitHook(SPLIT_OPS[kind], first.name, second.name, width),),
            ),
        )
    elif kind in CONST_OPS:
        node.hooks = node.hooks + (ConstHook(CONST_OPS[kind], bytes.fromhex(params.constant)),)
    elif kind == TransformKind.BOUNDARY_CHANGE:
        prefix_name = work.fresh_name(f"{node.name}_len")
        body_name = work.fresh_name(f"{node.name}_body", reserved=[prefix_name])
        prefix = FormatNode(
            prefix_name,
            NodeType.TERMINAL,
            Boundary.fixed(params.width),
            derivation=Derivation(DerivationKind.LENGTH_OF, body_name),
        )
        body = FormatNode(
            body_name, node.type, Boundary.length(prefix_name), children=node.children, hooks=node.hooks
        )
        _replace(
            work,
            node,
            FormatNode(
                node.name,
                NodeType.SEQUENCE,
                Boundary.delegated(),
                children=[prefix, body],
                hooks=(FrameHook(prefix_name, body_name),),
            ),
        )
    elif kind == TransformKind.PAD_INSERT:
        pad = FormatNode(
            work.fresh_name(f"{node.name}_pad"), NodeType.TERMINAL, Boundary.fixed(params.width), hooks=(PadHook(),)
        )
        node.children.insert(params.index, pad)
    elif kind == TransformKind.READ_FROM_END:
        node.hooks = node.hooks + (MirrorHook(),)
    elif kind in (TransformKind.TAB_SPLIT, TransformKind.REP_SPLIT):
        element = node.children[0]
        holders: List[FormatNode] = []
        taken: List[str] = []
        for part in element.children:
            holder_name = work.fresh_name(f"{node.name}_{part.name}", reserved=taken)
            taken.append(holder_name)
            if kind == TransformKind.TAB_SPLIT:
                holders.append(FormatNode(holder_name, NodeType.TABULAR, node.boundary, children=[part]))
            else:
                holders.append(FormatNode(holder_name, NodeType.REPETITION, Boundary.delegated(), children=[part]))
        spread = SpreadHook(element.name, tuple((h.name, h.children[0].name) for h in holders))
        boundary = Boundary.delegated() if kind == TransformKind.TAB_SPLIT else node.boundary
        _replace(
            work,
            node,
            FormatNode(
                node.name,
                NodeType.SEQUENCE,
                boundary,
                children=holders,
                derivation=node.derivation,
                hooks=node.hooks + (spread,),
            ),
        )
    elif kind == TransformKind.CHILD_MOVE:
        i, j = params.first, params.second
        node.children[i], node.children[j] = node.children[j], node.children[i]

    work.reindex()
    report = validate(work)
    if not report.is_valid:
        first_error = report.errors[0]
        raise TransformError(
            f"{kind.value} on {node.name} breaks [{first_error.rule_id}] {first_error.message}",
            rule_id="invalid-rewrite",
            node=node.name,
        )
    logger.debug(f"Applied {kind.value} on {node.name} {params.model_dump(exclude_none=True)}")
    return work
