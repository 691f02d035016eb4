from typing import List, Optional


class ProtoObfError(Exception):
    """Base class for every domain error raised by the toolkit"""

    rule_id = "error"

    def __init__(self, message: str, rule_id: Optional[str] = None, node: Optional[str] = None):
        super().__init__(message)
        self.message = message
        if rule_id is not None:
            self.rule_id = rule_id
        self.node = node

    def __str__(self) -> str:
        if self.node:
            return f"{self.message} (node {self.node})"
        return self.message


class SpecSyntaxError(ProtoObfError):
    rule_id = "syntax"

    def __init__(self, message: str, line: int, column: int, expected: Optional[List[str]] = None):
        self.line = line
        self.column = column
        self.expected = list(expected or [])
        detail = f"{line}:{column}: {message}"
        if self.expected:
            detail += f" (expected {', '.join(self.expected)})"
        super().__init__(detail)


class SpecReferenceError(ProtoObfError):
    rule_id = "unknown-reference"

    def __init__(
        self,
        message: str,
        line: int = 0,
        column: int = 0,
        node: Optional[str] = None,
        rule_id: Optional[str] = None,
    ):
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}" if line else message, rule_id=rule_id, node=node)


class GraphValidationError(ProtoObfError):
    rule_id = "invalid-graph"

    def __init__(self, report):
        self.report = report
        first = report.errors[0]
        super().__init__(
            f"{first.message} ({len(report.errors)} error(s))",
            rule_id=first.rule_id,
            node=first.node,
        )


class SelectorError(ProtoObfError):
    rule_id = "selector"


class AstError(ProtoObfError):
    rule_id = "ast"


class TransformError(ProtoObfError):
    rule_id = "transform"


class PlanError(ProtoObfError):
    rule_id = "plan"


class SerializeError(ProtoObfError):
    rule_id = "serialize"


class ParseError(ProtoObfError):
    rule_id = "parse"


class CodegenError(ProtoObfError):
    rule_id = "codegen"


class BenchError(ProtoObfError):
    rule_id = "bench"
