"""Generation of standalone codec libraries and their potency metrics"""

from src.codegen.bridge import ast_from_message, message_from_ast
from src.codegen.emitter import BundleEmitter, BundleModel
from src.codegen.generator import (
    BundleManifest,
    CallGraphStats,
    PotencyMetrics,
    SourceBundle,
    call_graph,
    generate,
    load_bundle,
    load_manifest,
    measure,
    write_bundle,
)

__all__ = [
    "BundleEmitter",
    "BundleManifest",
    "BundleModel",
    "CallGraphStats",
    "PotencyMetrics",
    "SourceBundle",
    "ast_from_message",
    "call_graph",
    "generate",
    "load_bundle",
    "load_manifest",
    "measure",
    "message_from_ast",
    "write_bundle",
]
