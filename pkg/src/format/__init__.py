"""Message format graph model and its consistency checks"""

from src.format.graph import (
    NO_DERIVATION,
    REPEATED_TYPES,
    Boundary,
    BoundaryKind,
    ConstHook,
    Derivation,
    DerivationKind,
    FormatGraph,
    FormatNode,
    FrameHook,
    Hook,
    MirrorHook,
    NodePath,
    NodeType,
    PadHook,
    PresenceCondition,
    Reference,
    SplitHook,
    SpreadHook,
    ValueOp,
    consumes_end,
    dfs_order,
    logical_width,
    min_width,
    references,
    static_width,
)
from src.format.validation import ValidationIssue, ValidationReport, validate

__all__ = [
    "NO_DERIVATION",
    "REPEATED_TYPES",
    "Boundary",
    "BoundaryKind",
    "ConstHook",
    "Derivation",
    "DerivationKind",
    "FormatGraph",
    "FormatNode",
    "FrameHook",
    "Hook",
    "MirrorHook",
    "NodePath",
    "NodeType",
    "PadHook",
    "PresenceCondition",
    "Reference",
    "SplitHook",
    "SpreadHook",
    "ValidationIssue",
    "ValidationReport",
    "ValueOp",
    "consumes_end",
    "dfs_order",
    "logical_width",
    "min_width",
    "references",
    "static_width",
    "validate",
]
