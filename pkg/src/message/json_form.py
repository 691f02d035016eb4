from typing import Any, Dict
import json

from src.errors import AstError
from src.format.graph import FormatGraph, FormatNode, NodePath, NodeType
from src.message.ast import AstNode, MessageAst


def node_to_dict(node: AstNode) -> Dict[str, Any]:
    if node.type == NodeType.TERMINAL:
        return {"node": node.node, "value": None if node.value is None else node.value.hex()}
    if node.type == NodeType.SEQUENCE:
        return {"node": node.node, "children": [node_to_dict(c) for c in node.children]}
    if node.type == NodeType.OPTIONAL:
        child = node_to_dict(node.child) if node.child is not None else None
        return {"node": node.node, "present": node.present, "child": child}
    return {"node": node.node, "elements": [node_to_dict(e) for e in node.elements]}


def ast_to_json(ast: MessageAst) -> str:
    """AST JSON form with lowercase hex values"""
    return json.dumps(node_to_dict(ast.root), indent=2) + "\n"


def _expect(data: Any, key: str, node: FormatNode) -> Any:
    if not isinstance(data, dict) or key not in data:
        raise AstError(f"JSON for {node.name} lacks {key!r}", rule_id="json-shape", node=node.name)
    return data[key]


def node_from_dict(data: Any, node: FormatNode, path: NodePath) -> AstNode:
    name = _expect(data, "node", node)
    if name != node.name:
        raise AstError(f"expected node {node.name}, found {name}", rule_id="json-shape", node=node.name)
    ast = AstNode(node.name, node.type, path)

    if node.type == NodeType.TERMINAL:
        value = _expect(data, "value", node)
        try:
            ast.value = None if value is None else bytes.fromhex(value)
        except (TypeError, ValueError):
            raise AstError(f"malformed hex value for {node.name}", rule_id="json-shape", node=node.name) from None
    elif node.type == NodeType.SEQUENCE:
        children = _expect(data, "children", node)
        if not isinstance(children, list) or len(children) != len(node.children):
            raise AstError(f"{node.name} expects {len(node.children)} children", rule_id="json-shape", node=node.name)
        ast.children = [node_from_dict(d, c, path + (i,)) for i, (d, c) in enumerate(zip(children, node.children))]
    elif node.type == NodeType.OPTIONAL:
        ast.present = bool(_expect(data, "present", node))
        child = data.get("child")
        if ast.present != (child is not None):
            raise AstError(f"presence flag of {node.name} disagrees with its child", rule_id="json-shape", node=node.name)
        if child is not None:
            ast.child = node_from_dict(child, node.children[0], path + (0,))
    else:
        elements = _expect(data, "elements", node)
        if not isinstance(elements, list):
            raise AstError(f"{node.name} elements must be a list", rule_id="json-shape", node=node.name)
        ast.elements = [node_from_dict(e, node.children[0], path + (0,)) for e in elements]
    return ast


def ast_from_json(text: str, graph: FormatGraph) -> MessageAst:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise AstError(f"invalid AST JSON: {e}", rule_id="json-syntax") from e
    return MessageAst(graph, node_from_dict(data, graph.root, ()))
