"""Moves message contents between the AST form and a generated Message through
the generated accessors only, the way application code uses a bundle."""

from types import ModuleType
from typing import Any, Tuple

from src.format.graph import REPEATED_TYPES, FormatGraph, FormatNode, NodePath, NodeType
from src.message.ast import AstNode, MessageAst


def message_from_ast(bundle: ModuleType, ast: MessageAst, msg_seed: int = 0) -> Any:
    msg = bundle.Message(msg_seed)

    def fill(node: AstNode, indices: Tuple[int, ...]) -> None:
        graph_node = ast.graph.node(node.node)
        if node.type == NodeType.TERMINAL:
            if not graph_node.is_derived and node.value is not None:
                getattr(msg, f"set_{node.node}")(node.value, *indices)
        elif node.type == NodeType.SEQUENCE:
            for child in node.children:
                fill(child, indices)
        elif node.type == NodeType.OPTIONAL:
            getattr(msg, f"set_present_{node.node}")(node.present, *indices)
            if node.present and node.child is not None:
                fill(node.child, indices)
        else:
            for position, element in enumerate(node.elements):
                getattr(msg, f"push_{node.node}")(*indices)
                fill(element, indices + (position,))

    fill(ast.root, ())
    return msg


def ast_from_message(msg: Any, graph: FormatGraph) -> MessageAst:
    def read(node: FormatNode, path: NodePath, indices: Tuple[int, ...]) -> AstNode:
        instance = AstNode(node.name, node.type, path)
        if node.type == NodeType.TERMINAL:
            if not node.is_derived:
                instance.value = getattr(msg, f"get_{node.name}")(*indices)
        elif node.type == NodeType.SEQUENCE:
            instance.children = [read(c, path + (i,), indices) for i, c in enumerate(node.children)]
        elif node.type == NodeType.OPTIONAL:
            instance.present = getattr(msg, f"is_present_{node.name}")(*indices)
            if instance.present:
                instance.child = read(node.children[0], path + (0,), indices)
        elif node.type in REPEATED_TYPES:
            count = getattr(msg, f"count_{node.name}")(*indices)
            instance.elements = [read(node.children[0], path + (0,), indices + (k,)) for k in range(count)]
        return instance

    return MessageAst(graph, read(graph.root, (), ()))
