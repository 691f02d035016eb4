from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from types import ModuleType
from typing import Dict, List, Tuple, Union
import importlib.util
import inspect
import json
import logging
import sys

from jinja2 import Environment, FileSystemLoader
from pydantic import BaseModel, Field

from src.errors import CodegenError
from src.codegen.emitter import CODEC_MODULE, MESSAGE_MODULE, BundleEmitter
from src.obfuscation.obfuscator import ObfuscationPlan, plan_hash8
from src.wire import runtime

logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).parent / "templates"
SOURCE_FILES = ("__init__.py", "message.py", "codec.py")
MANIFEST_FILE = "manifest.json"
RUNTIME_FILE = "runtime.py"


class BundleManifest(BaseModel):
    """Functions, type definitions and call edges recorded while emitting a bundle"""

    protocol: str
    plan_hash: str
    spec_hash: str
    functions: List[str] = Field(default_factory=list)
    types: List[str] = Field(default_factory=list)
    calls: List[Tuple[str, str]] = Field(default_factory=list)
    prototypes: List[str] = Field(default_factory=list)


@dataclass
class SourceBundle:
    """Generated library: file name to source text, plus its manifest"""

    protocol: str
    plan_hash: str
    files: Dict[str, str]
    manifest: BundleManifest

    @property
    def directory_name(self) -> str:
        return f"{self.protocol}_{self.plan_hash}"


@dataclass
class CallGraphStats:
    size: int
    depth: int
    edges: List[Tuple[str, str]] = field(default_factory=list)


@dataclass
class PotencyMetrics:
    lines: int
    type_definitions: int
    call_graph_size: int
    call_graph_depth: int

    def normalized(self, baseline: "PotencyMetrics") -> Dict[str, float]:
        return {
            "lines": self.lines / baseline.lines,
            "type_definitions": self.type_definitions / baseline.type_definitions,
            "call_graph_size": self.call_graph_size / baseline.call_graph_size,
            "call_graph_depth": self.call_graph_depth / baseline.call_graph_depth,
        }


@lru_cache(maxsize=1)
def template_environment() -> Environment:
    return Environment(
        loader=FileSystemLoader(str(TEMPLATE_DIR)),
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )


def render_template(env: Environment, template_name: str, context: dict) -> str:
    return env.get_template(template_name).render(context)


def generate(plan: ObfuscationPlan) -> SourceBundle:
    """Standalone serializer, parser and accessors for a plan"""
    model = BundleEmitter(plan).build()
    plan_hash = plan_hash8(plan)
    env = template_environment()
    context = {
        "protocol": plan.protocol,
        "plan_hash": plan_hash,
        "spec_hash": plan.spec_hash,
        "types": model.types,
        "root_skeleton": model.root_skeleton,
    }
    files = {
        "__init__.py": render_template(env, "init.py.j2", context),
        "message.py": render_template(
            env,
            "message.py.j2",
            {**context, "functions": model.module_functions(MESSAGE_MODULE), "accessors": model.accessors},
        ),
        "codec.py": render_template(env, "codec.py.j2", {**context, "functions": model.module_functions(CODEC_MODULE)}),
        RUNTIME_FILE: inspect.getsource(runtime),
    }
    manifest = BundleManifest(
        protocol=plan.protocol,
        plan_hash=plan_hash,
        spec_hash=plan.spec_hash,
        functions=model.function_names(),
        types=[t.name for t in model.types] + ["Message"],
        calls=model.call_edges(),
        prototypes=[a.prototype for a in model.accessors],
    )
    files[MANIFEST_FILE] = manifest.model_dump_json(indent=2) + "\n"
    logger.debug(f"Generated bundle {plan.protocol}_{plan_hash}: {len(manifest.functions)} function(s)")
    return SourceBundle(plan.protocol, plan_hash, files, manifest)


def call_graph(manifest: BundleManifest) -> CallGraphStats:
    """Size and depth (longest call chain, counted in functions) of the emitted call graph"""
    callees: Dict[str, List[str]] = {name: [] for name in manifest.functions}
    for caller, callee in manifest.calls:
        callees.setdefault(caller, []).append(callee)
        callees.setdefault(callee, [])
    depth: Dict[str, int] = {}

    def longest(name: str, active: frozenset) -> int:
        if name in depth:
            return depth[name]
        if name in active:
            raise CodegenError(f"call cycle through {name}", rule_id="call-cycle")
        best = 1 + max((longest(c, active | {name}) for c in callees[name]), default=0)
        depth[name] = best
        return best

    deepest = max((longest(name, frozenset()) for name in callees), default=0)
    return CallGraphStats(len(manifest.functions), deepest, list(manifest.calls))


def count_lines(text: str) -> int:
    """Non-blank lines that are not comments"""
    return sum(1 for line in text.splitlines() if line.strip() and not line.strip().startswith("#"))


def measure(bundle: SourceBundle) -> PotencyMetrics:
    """Potency metrics over the generated sources; the copied runtime is not counted"""
    stats = call_graph(bundle.manifest)
    return PotencyMetrics(
        lines=sum(count_lines(bundle.files[name]) for name in SOURCE_FILES),
        type_definitions=len(bundle.manifest.types),
        call_graph_size=stats.size,
        call_graph_depth=stats.depth,
    )


def write_bundle(bundle: SourceBundle, out_dir: Union[str, Path]) -> Path:
    """Write the bundle under out_dir/<protocol>_<planhash8>/ and return that directory"""
    target = Path(out_dir) / bundle.directory_name
    target.mkdir(parents=True, exist_ok=True)
    for name, text in bundle.files.items():
        (target / name).write_text(text, encoding="utf-8")
    logger.info(f"Wrote bundle {bundle.directory_name} to {target}")
    return target


def load_bundle(path: Union[str, Path]) -> ModuleType:
    """Import a written bundle as a package"""
    path = Path(path)
    init = path / "__init__.py"
    if not init.is_file():
        raise CodegenError(f"no generated bundle at {path}", rule_id="missing-bundle")
    module_name = f"protoobf_generated_{path.name}"
    for name in [m for m in sys.modules if m == module_name or m.startswith(module_name + ".")]:
        del sys.modules[name]
    spec = importlib.util.spec_from_file_location(module_name, init, submodule_search_locations=[str(path)])
    module = importlib.util.module_from_spec(spec)
    sys.modules[module_name] = module
    spec.loader.exec_module(module)
    return module


def load_manifest(path: Union[str, Path]) -> BundleManifest:
    return BundleManifest.model_validate(json.loads((Path(path) / MANIFEST_FILE).read_text(encoding="utf-8")))
