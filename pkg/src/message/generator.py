from collections import ChainMap
from typing import Dict, List, Optional, Set, Tuple
import logging
import string

from src.config.settings import RandomAstBounds
from src.format.graph import (
    BoundaryKind,
    DerivationKind,
    FormatGraph,
    FormatNode,
    NodePath,
    NodeType,
    min_width,
    static_width,
)
from src.message.ast import AstNode, MessageAst
from src.wire.runtime import Prng

SAFE_ALPHABET = (string.ascii_letters + string.digits).encode("ascii")


class RandomAstGenerator:
    """Draws message instances of a graph that serialize without error.

    Presence is decided where the condition's referent is drawn: the referent
    takes one of the expected literals with the configured probability, and an
    optional is present exactly when its condition holds. Element counts and
    value lengths stay within what the fields deriving them can encode.
    """

    def __init__(self, graph: FormatGraph, seed: int, bounds: Optional[RandomAstBounds] = None):
        self.graph = graph
        self.bounds = bounds or RandomAstBounds()
        self.prng = Prng(seed)
        self.logger = logging.getLogger(__name__)
        self.expected: Dict[str, List[bytes]] = {}
        self.length_caps: Dict[str, int] = {}
        self.count_caps: Dict[str, int] = {}
        for node in graph.dfs_nodes():
            if node.presence is not None:
                self.expected.setdefault(node.presence.ref, []).append(node.presence.expected)
            if node.is_derived:
                width = static_width(node) or 0
                caps = self.count_caps if node.derivation.kind == DerivationKind.COUNT_OF else self.length_caps
                cap = (1 << (8 * width)) - 1
                caps[node.derivation.ref] = min(cap, caps.get(node.derivation.ref, cap))

    def generate(self) -> MessageAst:
        root, _ = self._node(self.graph.root, (), ChainMap())
        return MessageAst(self.graph, root)

    def _forbidden(self, node: FormatNode) -> Set[int]:
        """Bytes of every delimiter framing this node"""
        forbidden: Set[int] = set()
        for holder in [node, *node.ancestors()]:
            if holder.boundary.kind == BoundaryKind.DELIMITED:
                forbidden.update(holder.boundary.delim)
        return forbidden

    def _draw(self, length: int, forbidden: Set[int]) -> bytes:
        if not forbidden:
            return self.prng.randbytes(length)
        alphabet = bytes(b for b in SAFE_ALPHABET if b not in forbidden) or bytes(
            b for b in range(256) if b not in forbidden
        )
        return bytes(self.prng.choice(alphabet) for _ in range(length))

    def _value(self, node: FormatNode, width: Optional[int], limit: Optional[int] = None) -> bytes:
        forbidden = self._forbidden(node)
        if width is not None:
            length = width
        else:
            longest = self.bounds.max_value_length if limit is None else min(self.bounds.max_value_length, limit)
            length = self.prng.between(0, longest)
        value = self._draw(length, forbidden)

        candidates = [
            e
            for e in self.expected.get(node.name, [])
            if (width is None or len(e) == width)
            and (limit is None or len(e) <= limit)
            and not forbidden.intersection(e)
        ]
        if not candidates:
            return value
        if self.prng.chance(self.bounds.presence_probability):
            return self.prng.choice(candidates)
        while value and value in candidates:
            value = self._draw(len(value), forbidden)
        return value

    def _node(
        self, node: FormatNode, path: NodePath, env: ChainMap, room: Optional[int] = None
    ) -> Tuple[AstNode, int]:
        """Instance of node that fits in room bytes, with its plain wire size"""
        cap = self.length_caps.get(node.name)
        if cap is not None:
            room = cap if room is None else min(room, cap)
        ast = AstNode(node.name, node.type, path)
        if node.type == NodeType.TERMINAL:
            if node.is_derived:
                return ast, min_width(node)
            delim = (node.boundary.delim or b"") if node.boundary.kind == BoundaryKind.DELIMITED else b""
            width = node.boundary.size if node.boundary.kind == BoundaryKind.FIXED else None
            limit = None if room is None else max(0, room - len(delim))
            ast.value = self._value(node, width, limit)
            env[node.name] = ast.value
            return ast, len(ast.value) + len(delim)
        if node.type == NodeType.SEQUENCE:
            used = 0
            ast.children = []
            for i, child in enumerate(node.children):
                child_room = None
                if room is not None:
                    child_room = max(0, room - used - sum(min_width(c) for c in node.children[i + 1:]))
                sub, size = self._node(child, path + (i,), env, child_room)
                ast.children.append(sub)
                used += size
            return ast, used
        if node.type == NodeType.OPTIONAL:
            ast.present = env.get(node.presence.ref) == node.presence.expected
            if not ast.present:
                return ast, 0
            ast.child, size = self._node(node.children[0], path + (0,), env, room)
            return ast, size

        element = node.children[0]
        delim = (node.boundary.delim or b"") if node.boundary.kind == BoundaryKind.DELIMITED else b""
        count = self.prng.between(0, self.bounds.max_elements)
        if node.name in self.count_caps:
            count = min(count, self.count_caps[node.name])
        used = len(delim)
        ast.elements = []
        for _ in range(count):
            left = None if room is None else room - used
            if left is not None and left < min_width(element):
                break
            sub, size = self._node(element, path + (0,), env.new_child(), left)
            ast.elements.append(sub)
            used += size
        return ast, used


def random_ast(graph: FormatGraph, rng_seed: int, bounds: Optional[RandomAstBounds] = None) -> MessageAst:
    """Deterministic random instance of the graph for a given seed"""
    return RandomAstGenerator(graph, rng_seed, bounds).generate()
