"""Generic transformations and their random composition into plans"""

from src.obfuscation.obfuscator import (
    PLAN_VERSION,
    ObfuscationPlan,
    Obfuscator,
    identity_plan,
    load_plan,
    obfuscate,
    plan_hash8,
    replay,
    save_plan,
)
from src.obfuscation.transforms import (
    AGGREGATION,
    CONST_OPS,
    ORDERING,
    PHASES,
    SPLIT_OPS,
    Phase,
    TransformKind,
    TransformParams,
    TransformRecord,
    applicable,
    apply_transform,
    candidate_params,
    constraints,
    extent_known,
)
from src.wire.runtime import Prng

__all__ = [
    "AGGREGATION",
    "CONST_OPS",
    "ORDERING",
    "PHASES",
    "PLAN_VERSION",
    "SPLIT_OPS",
    "ObfuscationPlan",
    "Obfuscator",
    "Phase",
    "Prng",
    "TransformKind",
    "TransformParams",
    "TransformRecord",
    "applicable",
    "apply_transform",
    "candidate_params",
    "constraints",
    "extent_known",
    "identity_plan",
    "load_plan",
    "obfuscate",
    "plan_hash8",
    "replay",
    "save_plan",
]
