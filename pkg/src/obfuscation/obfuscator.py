from typing import List, Optional, Union
import json
import logging

import mmh3
from pydantic import BaseModel, Field, PrivateAttr, ValidationError, field_serializer

from src.config.settings import ObfuscationRanges
from src.errors import GraphValidationError, PlanError, SelectorError, TransformError
from src.format.graph import FormatGraph, FormatNode
from src.format.validation import validate
from src.obfuscation.transforms import (
    CONST_OPS,
    TransformKind,
    TransformParams,
    TransformRecord,
    applicable,
    apply_transform,
    candidate_params,
)
from src.spec.printer import spec_hash_hex
from src.wire.runtime import Prng

PLAN_VERSION = 1
KIND_ORDER = list(TransformKind)


class ObfuscationPlan(BaseModel):
    """Replayable list of applied transformations, bound to the spec it was drawn for"""

    version: int = PLAN_VERSION
    protocol: str
    spec_hash: str
    seed: int = Field(ge=0, lt=1 << 64)
    per_node_budget: int = Field(ge=0)
    records: List[TransformRecord] = Field(default_factory=list)

    _graph: Optional[FormatGraph] = PrivateAttr(default=None)
    _final_graph: Optional[FormatGraph] = PrivateAttr(default=None)

    @field_serializer("seed")
    def _seed_as_text(self, seed: int) -> str:
        return str(seed)

    @property
    def graph(self) -> FormatGraph:
        if self._graph is None:
            raise PlanError("plan is not bound to a format graph", rule_id="unbound-plan")
        return self._graph

    @property
    def final_graph(self) -> FormatGraph:
        if self._final_graph is None:
            raise PlanError("plan is not bound to a format graph", rule_id="unbound-plan")
        return self._final_graph

    def bind(self, graph: FormatGraph, final_graph: FormatGraph) -> "ObfuscationPlan":
        self._graph = graph
        self._final_graph = final_graph
        return self


class Obfuscator:
    """Draws transformations node by node, one pass over the graph per budget unit"""

    def __init__(self, graph: FormatGraph, ranges: Optional[ObfuscationRanges] = None):
        report = validate(graph)
        if not report.is_valid:
            raise GraphValidationError(report)
        self.graph = graph
        self.ranges = ranges or ObfuscationRanges()
        self.logger = logging.getLogger(__name__)

    def _draw_params(self, node: FormatNode, kind: TransformKind, prng: Prng, choices: List[TransformParams]):
        params = prng.choice(choices)
        if kind in CONST_OPS:
            return params.model_copy(update={"constant": prng.randbytes(node.boundary.size).hex()})
        if kind == TransformKind.PAD_INSERT:
            width = prng.between(self.ranges.pad_width.min, self.ranges.pad_width.max)
            return params.model_copy(update={"width": width})
        return params

    def obfuscate(self, per_node_budget: int, seed: int) -> ObfuscationPlan:
        if per_node_budget < 0:
            raise PlanError("budget must be non-negative", rule_id="budget")
        prng = Prng(seed)
        current = self.graph
        records: List[TransformRecord] = []

        for round_index in range(per_node_budget):
            for name in [node.name for node in current.dfs_nodes()]:
                if name not in current.index:
                    continue
                path = current.path_of(name)
                kinds = sorted(applicable(current, path), key=KIND_ORDER.index)
                while kinds:
                    kind = prng.choice(kinds)
                    node = current.resolve(path)
                    params = self._draw_params(node, kind, prng, candidate_params(current, path, kind, self.ranges))
                    record = TransformRecord.build(kind, path, params)
                    try:
                        current = apply_transform(current, record, self.ranges)
                    except TransformError as e:
                        self.logger.debug(f"Round {round_index}: {kind.value} rejected on {name}: {e}")
                        kinds.remove(kind)
                        continue
                    records.append(record)
                    break
                else:
                    self.logger.debug(f"Round {round_index}: no transformation applicable to {name}")

        plan = ObfuscationPlan(
            protocol=self.graph.name,
            spec_hash=spec_hash_hex(self.graph),
            seed=seed,
            per_node_budget=per_node_budget,
            records=records,
        )
        self.logger.info(
            f"Obfuscated {self.graph.name} with budget {per_node_budget}, seed {seed}: {len(records)} record(s)"
        )
        return plan.bind(self.graph, current)


def obfuscate(
    graph: FormatGraph, per_node_budget: int, seed: int, ranges: Optional[ObfuscationRanges] = None
) -> ObfuscationPlan:
    """Deterministic plan for (graph, budget, seed)"""
    return Obfuscator(graph, ranges).obfuscate(per_node_budget, seed)


def identity_plan(graph: FormatGraph) -> ObfuscationPlan:
    return obfuscate(graph, 0, 0)


def replay(graph: FormatGraph, records: List[TransformRecord], ranges: Optional[ObfuscationRanges] = None):
    """Final graph obtained by applying records in order"""
    current = graph
    for position, record in enumerate(records):
        try:
            current = apply_transform(current, record, ranges)
        except (TransformError, SelectorError) as e:
            raise PlanError(f"record {position} cannot be replayed: {e}", rule_id="replay") from e
    return current


def save_plan(plan: ObfuscationPlan) -> bytes:
    data = plan.model_dump(mode="json", exclude_none=True)
    return (json.dumps(data, indent=2) + "\n").encode("utf-8")


def load_plan(data: Union[bytes, str], graph: FormatGraph, ranges: Optional[ObfuscationRanges] = None):
    """Plan read from its JSON file, verified against graph and replayed"""
    try:
        raw = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise PlanError(f"malformed plan file: {e}", rule_id="malformed-plan") from e
    if not isinstance(raw, dict):
        raise PlanError("malformed plan file: expected an object", rule_id="malformed-plan")
    if raw.get("version") != PLAN_VERSION:
        raise PlanError(f"unknown plan version {raw.get('version')!r}", rule_id="plan-version")
    try:
        plan = ObfuscationPlan.model_validate(raw)
    except ValidationError as e:
        raise PlanError(f"malformed plan record: {e.errors()[0]['msg']}", rule_id="malformed-plan") from e
    if plan.spec_hash != spec_hash_hex(graph):
        raise PlanError("plan does not match spec", rule_id="spec-mismatch")
    return plan.bind(graph, replay(graph, plan.records, ranges))


def plan_hash8(plan: ObfuscationPlan) -> str:
    """Eight hex digits naming a plan's generated bundle"""
    return format(mmh3.hash(save_plan(plan), signed=False), "08x")
