"""Message instances over a format graph and their accessors"""

from src.message.ast import (
    AstNode,
    FieldSelector,
    MessageAst,
    element_count,
    get_value,
    new_ast,
    push_element,
    resolve,
    set_present,
    set_value,
    skeleton,
)
from src.message.generator import RandomAstGenerator, random_ast
from src.message.json_form import ast_from_json, ast_to_json

__all__ = [
    "AstNode",
    "FieldSelector",
    "MessageAst",
    "RandomAstGenerator",
    "ast_from_json",
    "ast_to_json",
    "element_count",
    "get_value",
    "new_ast",
    "push_element",
    "random_ast",
    "resolve",
    "set_present",
    "set_value",
    "skeleton",
]
