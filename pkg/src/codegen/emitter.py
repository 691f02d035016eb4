"""Emission model of a generated codec bundle.

The emitter walks the transformed graph of a plan and builds, for every node,
the functions of the generated library as lists of source lines. It records
each call it writes, so the call graph of the bundle is known exactly without
reading the rendered text back.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple
import logging

from src.errors import CodegenError
from src.format.graph import REPEATED_TYPES, BoundaryKind, FormatNode, NodeType, logical_width, min_width, static_width

MESSAGE_MODULE = "message"
CODEC_MODULE = "codec"
MESSAGE_PREFIXES = ("Struct_", "new_", "agg_", "deagg_", "enc_", "dec_", "split_", "combine_")


@dataclass
class EmittedFunction:
    name: str
    params: str
    module: str
    body: List[str] = field(default_factory=list)
    calls: List[str] = field(default_factory=list)


@dataclass
class TypeDefinition:
    name: str
    node: str
    role: str
    fields: List[str] = field(default_factory=list)


@dataclass
class Accessor:
    """Method of the generated Message class; its prototype depends on the original graph only"""

    name: str
    params: List[str]
    returns: str
    body: List[str] = field(default_factory=list)
    calls: List[str] = field(default_factory=list)

    @property
    def qualified_name(self) -> str:
        return f"Message.{self.name}"

    @property
    def prototype(self) -> str:
        return f"{self.name}({', '.join(['self'] + self.params)}) -> {self.returns}"


@dataclass
class BundleModel:
    protocol: str
    root_skeleton: str
    types: List[TypeDefinition]
    functions: List[EmittedFunction]
    accessors: List[Accessor]

    def module_functions(self, module: str) -> List[EmittedFunction]:
        return [f for f in self.functions if f.module == module]

    def function_names(self) -> List[str]:
        return [f.name for f in self.functions] + [a.qualified_name for a in self.accessors]

    def call_edges(self) -> List[Tuple[str, str]]:
        edges = [(f.name, callee) for f in self.functions for callee in f.calls]
        edges += [(a.qualified_name, callee) for a in self.accessors for callee in a.calls]
        return sorted(set(edges))


class Code:
    """Source lines of one function body plus the calls they make"""

    def __init__(self, module: str):
        self.module = module
        self.lines: List[str] = []
        self.calls: List[str] = []

    def add(self, text: str, indent: int = 0) -> None:
        self.lines.append("    " * indent + text)

    def ref(self, name: str) -> str:
        """Reference to a generated function, recording the call"""
        if not name.startswith("Struct_") and name not in self.calls:
            self.calls.append(name)
        if self.module == CODEC_MODULE and name.startswith(MESSAGE_PREFIXES):
            return f"m.{name}"
        return name


def field_name(node: FormatNode) -> str:
    return f"f_{node.name}"


def quoted(name: str) -> str:
    return f'"{name}"'


def stored(node: FormatNode) -> bool:
    return not node.is_pad and not node.is_derived


def is_value(node: FormatNode) -> bool:
    return (node.type == NodeType.TERMINAL and not node.is_pad) or node.split_hook is not None


class BundleEmitter:
    """Builds the functions, types and accessors of the library generated for a plan"""

    def __init__(self, plan):
        self.plan = plan
        self.graph = plan.final_graph
        self.original = plan.graph
        self.origin: Dict[str, str] = {}
        for node in self.graph.dfs_nodes():
            if node.frame_hook is not None:
                self.origin[node.frame_hook.body] = self.origin.get(node.name, node.name)
        nodes = self.graph.dfs_nodes()
        self.targets: Set[str] = {n.derivation.ref for n in nodes if n.is_derived}
        self.presence_refs: Set[str] = {n.presence.ref for n in nodes if n.presence is not None}
        self.functions: List[EmittedFunction] = []
        self.types: List[TypeDefinition] = []
        self.logger = logging.getLogger(__name__)

    def build(self) -> BundleModel:
        for node in self.graph.dfs_nodes():
            self._emit_node(node)
        self._emit_entry_points()
        accessors = self._accessors()
        self.logger.debug(
            f"Emitted {len(self.functions)} function(s), {len(self.types)} type(s), "
            f"{len(accessors)} accessor(s) for {self.graph.name}"
        )
        return BundleModel(self.graph.name, self._skeleton(self.graph.root), self.types, self.functions, accessors)

    def _function(self, name: str, params: str, code: Code) -> None:
        self.functions.append(EmittedFunction(name, params, code.module, code.lines, code.calls))
        self.logger.debug(f"Generated {code.module}.{name}")

    def _key(self, node: FormatNode) -> str:
        return self.origin.get(node.name, node.name)

    def _skeleton(self, node: FormatNode) -> str:
        if is_value(node) or node.type == NodeType.OPTIONAL:
            return "None"
        if node.type in REPEATED_TYPES:
            return "[]"
        return f"new_{node.name}()"

    def _emit_node(self, node: FormatNode) -> None:
        if node.type in (NodeType.SEQUENCE, NodeType.OPTIONAL):
            self._emit_type(node)
            if node.split_hook is None:
                self._emit_new(node)
        for position, hook in enumerate(node.const_hooks):
            self._emit_const(node, position, hook)
        if node.split_hook is not None:
            self._emit_split(node)
        if is_value(node):
            self._emit_agg(node)
            self._emit_deagg(node)
        if node.is_pad:
            self._emit_pad(node)
        if node.mirror_count % 2 == 1:
            self._emit_extent(node)
        if node.is_derived:
            self._emit_resolve(node)
        if node.spread_hook is not None and self._delegated_parts(node):
            self._emit_count(node)
        self._emit_serialize(node)
        self._emit_parse(node)

    def _emit_type(self, node: FormatNode) -> None:
        if node.split_hook is not None:
            role = "split"
        elif node.frame_hook is not None:
            role = "frame"
        elif node.spread_hook is not None:
            role = "spread"
        else:
            role = node.type.value
        fields = [field_name(c) for c in node.children if stored(c)]
        self.types.append(TypeDefinition(f"Struct_{node.name}", node.name, role, fields))

    def _emit_new(self, node: FormatNode) -> None:
        code = Code(MESSAGE_MODULE)
        args = []
        for child in node.children:
            if stored(child):
                skeleton = self._skeleton(child)
                if skeleton.startswith("new_"):
                    code.ref(f"new_{child.name}")
                args.append(f"{field_name(child)}={skeleton}")
        code.add(f"return {code.ref(f'Struct_{node.name}')}({', '.join(args)})")
        self._function(f"new_{node.name}", "", code)

    def _emit_const(self, node: FormatNode, position: int, hook) -> None:
        constant = repr(hook.constant)
        encode = Code(MESSAGE_MODULE)
        encode.add(f'return rt.const_encode("{hook.op.value}", value, {constant})')
        self._function(f"enc_{node.name}_{position}", "value", encode)
        decode = Code(MESSAGE_MODULE)
        decode.add(f'return rt.const_decode("{hook.op.value}", value, {constant})')
        self._function(f"dec_{node.name}_{position}", "value", decode)

    def _emit_split(self, node: FormatNode) -> None:
        split = node.split_hook
        first_width = logical_width(node.child_named(split.first)) or 0
        code = Code(MESSAGE_MODULE)
        code.add(f'return rt.split_value("{split.op.value}", value, mask, {first_width})')
        self._function(f"split_{node.name}", "value, mask", code)
        code = Code(MESSAGE_MODULE)
        code.add(f'return rt.combine_value("{split.op.value}", first, second)')
        self._function(f"combine_{node.name}", "first, second", code)

    def _width_check(self, code: Code, node: FormatNode, width: int) -> None:
        code.add(f"if len(value) != {width}:")
        code.add(
            f'raise rt.CodecError(f"expected {width} byte(s), got {{len(value)}}", "width-mismatch", {quoted(node.name)})',
            1,
        )

    def _emit_agg(self, node: FormatNode) -> None:
        """Setter-side aggregation: logical value to stored representation"""
        code = Code(MESSAGE_MODULE)
        code.add("value = bytes(value)")
        for position, _ in enumerate(node.const_hooks):
            code.add(f"value = {code.ref(f'enc_{node.name}_{position}')}(value)")
        split = node.split_hook
        if split is None:
            if node.boundary.kind == BoundaryKind.FIXED:
                self._width_check(code, node, node.boundary.size)
            code.add("return value")
        else:
            self._width_check(code, node, split.width)
            if split.op.value == "cat":
                mask = 'b""'
            else:
                mask = f"rt.slot_bytes(ctx.msg_seed, {quoted(node.name)}, idx, {split.width})"
            code.add(f"first, second = {code.ref(f'split_{node.name}')}(value, {mask})")
            args = []
            for child in node.children:
                if not stored(child):
                    continue
                part = "first" if child.name == split.first else "second"
                args.append(f"{field_name(child)}={code.ref(f'agg_{child.name}')}(ctx, {part}, idx)")
            code.add(f"return {code.ref(f'Struct_{node.name}')}({', '.join(args)})")
        self._function(f"agg_{node.name}", "ctx, value, idx", code)

    def _emit_deagg(self, node: FormatNode) -> None:
        """Getter-side inverse of the aggregation"""
        code = Code(MESSAGE_MODULE)
        code.add("if obj is None:")
        code.add("return None", 1)
        split = node.split_hook
        if split is None:
            code.add("value = obj")
        else:
            first = node.child_named(split.first)
            second = node.child_named(split.second)
            code.add(
                f"value = {code.ref(f'combine_{node.name}')}("
                f"{code.ref(f'deagg_{first.name}')}(obj.{field_name(first)}), "
                f"{code.ref(f'deagg_{second.name}')}(obj.{field_name(second)}))"
            )
        for position in reversed(range(len(node.const_hooks))):
            code.add(f"value = {code.ref(f'dec_{node.name}_{position}')}(value)")
        code.add("return value")
        self._function(f"deagg_{node.name}", "obj", code)

    def _emit_pad(self, node: FormatNode) -> None:
        code = Code(CODEC_MODULE)
        code.add(f"return rt.slot_bytes(ctx.msg_seed, {quoted(node.name)}, idx, {node.boundary.size})")
        self._function(f"pad_{node.name}", "ctx, idx", code)

    def _extent(self, node: FormatNode) -> str:
        bound = node.boundary
        name = quoted(node.name)
        if bound.kind == BoundaryKind.FIXED:
            return str(bound.size)
        if bound.kind == BoundaryKind.LENGTH:
            return f"scope.lookup({quoted(bound.ref)}, {name})"
        if bound.kind == BoundaryKind.END:
            return "reader.remaining"
        if bound.kind == BoundaryKind.COUNTER:
            return f"scope.lookup({quoted(bound.ref)}, {name}) * {self._static(node.children[0])}"
        if node.type == NodeType.OPTIONAL:
            condition = f"scope.values.get({quoted(node.presence.ref)}) == {node.presence.expected!r}"
            return f"({self._extent(node.children[0])} if {condition} else 0)"
        if node.type == NodeType.REPETITION:
            return f"(count or 0) * {self._static(node.children[0])}"
        return str(self._static(node))

    def _static(self, node: FormatNode) -> int:
        width = static_width(node)
        if width is None:
            raise CodegenError(f"extent of {node.name} is not static", rule_id="unsupported-construct", node=node.name)
        return width

    def _emit_extent(self, node: FormatNode) -> None:
        code = Code(CODEC_MODULE)
        code.add(f"return {self._extent(node)}")
        self._function(f"extent_{node.name}", "ctx, reader, scope, count", code)

    def _value_emission(self, code: Code, node: FormatNode, obj: str, out: str) -> None:
        if node.type == NodeType.TERMINAL:
            if node.boundary.kind == BoundaryKind.DELIMITED:
                code.add(f"{out}.append(rt.check_delimited({obj}, {node.boundary.delim!r}, {quoted(node.name)}))")
            else:
                code.add(f"{out}.append({obj})")
            return
        for child in node.children:
            child_obj = f"{obj}.{field_name(child)}" if stored(child) else "None"
            code.add(f"{code.ref(f'ser_{child.name}')}(ctx, {child_obj}, {out}, scope, idx)")

    def _emit_resolve(self, node: FormatNode) -> None:
        code = Code(CODEC_MODULE)
        derivation = node.derivation
        code.add(
            f"value = rt.from_int(scope.measure({quoted(derivation.ref)}, {quoted(derivation.kind.value)}), "
            f"{logical_width(node)}, {quoted(node.name)})"
        )
        code.add(f"obj = {code.ref(f'agg_{node.name}')}(ctx, value, idx)")
        code.add("inner = rt.Fragment()")
        self._value_emission(code, node, "obj", "inner")
        code.add("slot.fill(inner.to_bytes())")
        self._function(f"resolve_{node.name}", "ctx, slot, scope, idx", code)

    def _delegated_parts(self, node: FormatNode) -> List[FormatNode]:
        spread = node.spread_hook
        return [
            c
            for c in node.children
            if spread.part_of(c.name) is not None and c.boundary.kind == BoundaryKind.DELEGATED
        ]

    def _holders(self, node: FormatNode) -> List[FormatNode]:
        spread = node.spread_hook
        return [c for c in node.children if spread.part_of(c.name) is not None]

    def _emit_count(self, node: FormatNode) -> None:
        holders = self._holders(node)
        others = sum(self._static(c) for c in node.children if c not in holders)
        unit = sum(self._static(c.children[0]) for c in holders)
        code = Code(CODEC_MODULE)
        code.add(f"available = region.remaining - {others}")
        code.add(f"if available < 0 or available % {unit}:")
        code.add(
            f'raise rt.CodecError(f"{{available}} byte(s) do not hold whole elements of {unit} byte(s)", '
            f'"element-size", {quoted(node.name)})',
            1,
        )
        code.add(f"return available // {unit}")
        self._function(f"count_{node.name}", "region", code)

    def _count_expr(self, node: FormatNode, var: str) -> str:
        if node.type in REPEATED_TYPES:
            return f"len({var})"
        if node.spread_hook is not None:
            return f"len({var}.{field_name(self._holders(node)[0])})"
        return "0"

    def _emit_serialize(self, node: FormatNode) -> None:
        code = Code(CODEC_MODULE)
        name = quoted(node.name)
        mirrored = node.mirror_count % 2 == 1
        own = mirrored or node.name in self.targets
        if own:
            code.add(f"out = rt.Fragment(mirrored={mirrored})")
        else:
            code.add("out = frag")

        if node.is_pad:
            code.add(f"out.append({code.ref(f'pad_{node.name}')}(ctx, idx))")
        elif node.is_derived:
            code.add(f"slot = rt.Slot({self._static(node)}, {name})")
            code.add("out.append(slot)")
            code.add(f"ctx.pending.append(({code.ref(f'resolve_{node.name}')}, slot, scope, idx))")
        elif is_value(node):
            code.add("if obj is None:")
            code.add(f'raise rt.CodecError("missing required value", "missing-value", {name})', 1)
            if self._key(node) in self.presence_refs:
                code.add(f"scope.values[{quoted(self._key(node))}] = {code.ref(f'deagg_{node.name}')}(obj)")
            self._value_emission(code, node, "obj", "out")
        elif node.type == NodeType.SEQUENCE:
            for child in node.children:
                child_obj = f"obj.{field_name(child)}" if stored(child) else "None"
                code.add(f"{code.ref(f'ser_{child.name}')}(ctx, {child_obj}, out, scope, idx)")
        elif node.type == NodeType.OPTIONAL:
            child = node.children[0]
            code.add(f"present = scope.values.get({quoted(node.presence.ref)}) == {node.presence.expected!r}")
            code.add("if present != (obj is not None):")
            code.add(
                f'raise rt.CodecError("optional presence inconsistent with referent value", '
                f'"presence-mismatch", {name})',
                1,
            )
            code.add("if present:")
            code.add(f"{code.ref(f'ser_{child.name}')}(ctx, obj.{field_name(child)}, out, scope, idx)", 1)
        else:
            child = node.children[0]
            serialize_child = code.ref(f"ser_{child.name}")
            code.add("for position, element in enumerate(obj):")
            if node.boundary.kind == BoundaryKind.DELIMITED:
                delim = repr(node.boundary.delim)
                code.add("piece = rt.Fragment()", 1)
                code.add(f"{serialize_child}(ctx, element, piece, scope.child(), idx + (position,))", 1)
                code.add(f"ctx.leading.append((piece, {delim}, {name}))", 1)
                code.add("out.append(piece)", 1)
                code.add(f"out.append({delim})")
            else:
                code.add(f"{serialize_child}(ctx, element, out, scope.child(), idx + (position,))", 1)

        if own:
            code.add("frag.append(out)")
        if node.name in self.targets:
            code.add(f"scope.measures[{name}] = (len(out), {self._count_expr(node, 'obj')})")
        self._function(f"ser_{node.name}", "ctx, obj, frag, scope, idx", code)

    def _parse_children(self, code: Code, node: FormatNode, count: str) -> List[str]:
        args = []
        for child in node.children:
            call = f"{code.ref(f'parse_{child.name}')}(ctx, region, scope, {count})"
            if stored(child):
                code.add(f"v_{child.name} = {call}")
                args.append(f"{field_name(child)}=v_{child.name}")
            else:
                code.add(call)
        return args

    def _record_derived(self, code: Code, node: FormatNode, value: str) -> None:
        name = quoted(node.name)
        derivation = node.derivation
        code.add(f"value = {code.ref(f'deagg_{node.name}')}({value})")
        code.add(f"scope.values[{name}] = value")
        code.add(
            f"ctx.derived.append(({name}, value, scope, {quoted(derivation.ref)}, {quoted(derivation.kind.value)}))"
        )
        code.add("result = None")

    def _emit_parse(self, node: FormatNode) -> None:
        code = Code(CODEC_MODULE)
        name = quoted(node.name)
        bound = node.boundary
        if node.name in self.targets:
            code.add("before = reader.pos")
        carved = True
        if node.mirror_count % 2 == 1:
            code.add(f"region = reader.mirrored({code.ref(f'extent_{node.name}')}(ctx, reader, scope, count), {name})")
        elif bound.kind in (BoundaryKind.FIXED, BoundaryKind.LENGTH, BoundaryKind.END):
            code.add(f"region = reader.sub({self._extent(node)}, {name})")
        else:
            code.add("region = reader")
            carved = False

        if node.type == NodeType.TERMINAL:
            if bound.kind == BoundaryKind.DELIMITED:
                code.add(f"wire = region.take_delimited({bound.delim!r}, {name})")
            else:
                code.add("wire = region.take_rest()")
            if node.is_pad:
                code.add("result = None")
            elif node.is_derived:
                self._record_derived(code, node, "wire")
            else:
                code.add("result = wire")
                if self._key(node) in self.presence_refs:
                    code.add(f"scope.values[{quoted(self._key(node))}] = {code.ref(f'deagg_{node.name}')}(result)")
        elif node.type == NodeType.SEQUENCE:
            count = "None"
            if node.spread_hook is not None and self._delegated_parts(node):
                code.add(f"total = {code.ref(f'count_{node.name}')}(region)")
                count = "total"
            args = self._parse_children(code, node, count)
            code.add(f"result = {code.ref(f'Struct_{node.name}')}({', '.join(args)})")
            if node.split_hook is not None:
                if node.is_derived:
                    self._record_derived(code, node, "result")
                elif self._key(node) in self.presence_refs:
                    code.add(f"scope.values[{quoted(self._key(node))}] = {code.ref(f'deagg_{node.name}')}(result)")
            if node.spread_hook is not None and len(self._holders(node)) > 1:
                sizes = ", ".join(f"len(result.{field_name(h)})" for h in self._holders(node))
                code.add(f"if len({{{sizes}}}) > 1:")
                code.add(f'raise rt.CodecError("spread parts disagree on the element count", "part-count", {name})', 1)
        elif node.type == NodeType.OPTIONAL:
            child = node.children[0]
            code.add(f"if scope.values.get({quoted(node.presence.ref)}) == {node.presence.expected!r}:")
            code.add(
                f"result = {code.ref(f'Struct_{node.name}')}({field_name(child)}="
                f"{code.ref(f'parse_{child.name}')}(ctx, region, scope, None))",
                1,
            )
            code.add("else:")
            code.add("result = None", 1)
        else:
            self._parse_elements(code, node)

        if carved:
            code.add(f"region.expect_end({name})")
        if node.name in self.targets:
            code.add(f"scope.measures[{name}] = (reader.pos - before, {self._count_expr(node, 'result')})")
        code.add("return result")
        self._function(f"parse_{node.name}", "ctx, reader, scope, count", code)

    def _parse_elements(self, code: Code, node: FormatNode) -> None:
        name = quoted(node.name)
        bound = node.boundary
        parse_child = code.ref(f"parse_{node.children[0].name}")
        code.add("result = []")
        if bound.kind in (BoundaryKind.COUNTER, BoundaryKind.DELEGATED):
            total = f"scope.lookup({quoted(bound.ref)}, {name})" if bound.kind == BoundaryKind.COUNTER else "count or 0"
            code.add(f"for _ in range(rt.check_count({total}, {min_width(node.children[0])}, region, {name})):")
            code.add(f"result.append({parse_child}(ctx, region, scope.child(), None))", 1)
            return
        if bound.kind == BoundaryKind.DELIMITED:
            delim = repr(bound.delim)
            code.add("while True:")
            code.add(f"if region.startswith({delim}):", 1)
            code.add(f"region.skip({delim}, {name})", 2)
            code.add("break", 2)
            code.add("if not region.remaining:", 1)
            code.add(
                f'raise rt.CodecError("missing delimiter {bound.delim.hex()}", "missing-delimiter", {name})', 2
            )
        else:
            code.add("while region.remaining:")
        code.add("start = region.pos", 1)
        code.add(f"result.append({parse_child}(ctx, region, scope.child(), None))", 1)
        code.add("if region.pos == start:", 1)
        code.add(f'raise rt.CodecError("repeated element consumed no input", "zero-progress", {name})', 2)

    def _emit_entry_points(self) -> None:
        root = self.graph.root
        code = Code(CODEC_MODULE)
        code.add("ctx = Context(msg.msg_seed)")
        code.add("out = rt.Fragment()")
        code.add(f"{code.ref(f'ser_{root.name}')}(ctx, msg.root, out, rt.Scope(), ())")
        code.add("for resolve, slot, scope, idx in ctx.pending:")
        code.add("resolve(ctx, slot, scope, idx)", 1)
        code.add("for piece, delim, name in ctx.leading:")
        code.add("if piece.to_bytes().startswith(delim):", 1)
        code.add(
            'raise rt.CodecError(f"element starts with delimiter {delim.hex()}", "delimiter-collision", name)', 2
        )
        code.add("return out.to_bytes()")
        self._function("serialize", "msg", code)

        code = Code(CODEC_MODULE)
        code.add("ctx = Context(msg_seed)")
        code.add("reader = rt.Reader(bytes(data))")
        code.add(f"root = {code.ref(f'parse_{root.name}')}(ctx, reader, rt.Scope(), None)")
        code.add(f"reader.expect_end({quoted(root.name)})")
        code.add("for name, value, scope, ref, kind in ctx.derived:")
        code.add("measure = scope.measure(ref, kind)", 1)
        code.add("if rt.to_int(value) != measure:", 1)
        code.add(
            'raise rt.CodecError(f"derived value {rt.to_int(value)} disagrees with content ({measure})", '
            '"inconsistent-derived", name)',
            2,
        )
        code.add("msg = m.Message(msg_seed)")
        code.add("msg.root = root")
        code.add("return msg")
        self._function("parse", "data, msg_seed=0", code)

    def _location(self, name: str) -> Optional[FormatNode]:
        node = self.graph.index.get(name)
        while node is not None and node.frame_hook is not None:
            node = node.child_named(node.frame_hook.body)
        return node

    def _navigate(self, code: Code, target: FormatNode, indices: List[str]) -> str:
        """Walk the stored message down to target; returns the expression of its slot"""
        chain = list(reversed(list(target.ancestors()))) + [target]
        if len(chain) == 1:
            return "self.root"
        pending = list(indices)
        code.add("obj = self.root")
        slot = ""
        for parent, child in zip(chain, chain[1:]):
            if parent.type in REPEATED_TYPES:
                if not pending:
                    raise CodegenError(f"no element index left for {parent.name}", rule_id="unsupported-construct")
                index = pending.pop(0)
                code.add(f"rt.element(obj, {index}, {quoted(parent.name)})")
                step = f"obj[{index}]"
            else:
                if parent.type == NodeType.OPTIONAL:
                    code.add("if obj is None:")
                    code.add(
                        f'raise rt.CodecError("optional {parent.name} is absent", "absent-optional", '
                        f"{quoted(parent.name)})",
                        1,
                    )
                step = f"obj.{field_name(child)}"
            if child is target:
                slot = step
            else:
                code.add(f"obj = {step}")
        if pending:
            raise CodegenError(f"unused element index for {target.name}", rule_id="unsupported-construct")
        return slot

    def _push(self, code: Code, node: FormatNode, var: str) -> None:
        if node.frame_hook is not None:
            body = node.child_named(node.frame_hook.body)
            self._push(code, body, f"{var}.{field_name(body)}")
        elif node.spread_hook is not None:
            for holder in self._holders(node):
                self._push(code, holder, f"{var}.{field_name(holder)}")
        else:
            skeleton = self._skeleton(node.children[0])
            if skeleton.startswith("new_"):
                skeleton = f"{code.ref(f'new_{node.children[0].name}')}()"
            code.add(f"{var}.append({skeleton})")

    def _count_of(self, node: FormatNode, var: str) -> str:
        if node.frame_hook is not None:
            body = node.child_named(node.frame_hook.body)
            return self._count_of(body, f"{var}.{field_name(body)}")
        if node.spread_hook is not None:
            holder = self._holders(node)[0]
            return self._count_of(holder, f"{var}.{field_name(holder)}")
        return f"len({var})"

    def _accessors(self) -> List[Accessor]:
        accessors: List[Accessor] = []
        for original in self.original.dfs_nodes():
            if original.is_derived:
                continue
            depth = sum(1 for a in original.ancestors() if a.type in REPEATED_TYPES)
            indices = [f"i{k}" for k in range(depth)]
            index_params = [f"{i}: int" for i in indices]
            index_tuple = f"({', '.join(indices)},)" if indices else "()"
            location = self._location(original.name)
            if location is None:
                continue

            def accessor(name: str, params: List[str], returns: str) -> Tuple[Accessor, Code]:
                code = Code(MESSAGE_MODULE)
                return Accessor(name, params, returns), code

            if original.type == NodeType.TERMINAL:
                setter, code = accessor(f"set_{original.name}", ["value: bytes"] + index_params, "None")
                slot = self._navigate(code, location, indices)
                code.add(f"{slot} = {code.ref(f'agg_{location.name}')}(self, value, {index_tuple})")
                setter.body, setter.calls = code.lines, code.calls
                getter, code = accessor(f"get_{original.name}", index_params, "Optional[bytes]")
                slot = self._navigate(code, location, indices)
                code.add(f"return {code.ref(f'deagg_{location.name}')}({slot})")
                getter.body, getter.calls = code.lines, code.calls
                accessors += [setter, getter]
            elif original.type == NodeType.OPTIONAL:
                setter, code = accessor(f"set_present_{original.name}", ["flag: bool"] + index_params, "None")
                slot = self._navigate(code, location, indices)
                code.add("if not flag:")
                code.add(f"{slot} = None", 1)
                code.add(f"elif {slot} is None:")
                code.add(f"{slot} = {code.ref(f'new_{location.name}')}()", 1)
                setter.body, setter.calls = code.lines, code.calls
                getter, code = accessor(f"is_present_{original.name}", index_params, "bool")
                slot = self._navigate(code, location, indices)
                code.add(f"return {slot} is not None")
                getter.body, getter.calls = code.lines, code.calls
                accessors += [setter, getter]
            elif original.type in REPEATED_TYPES:
                pusher, code = accessor(f"push_{original.name}", index_params, "int")
                slot = self._navigate(code, location, indices)
                code.add(f"items = {slot}")
                self._push(code, location, "items")
                code.add(f"return {self._count_of(location, 'items')}")
                pusher.body, pusher.calls = code.lines, code.calls
                counter, code = accessor(f"count_{original.name}", index_params, "int")
                slot = self._navigate(code, location, indices)
                code.add(f"return {self._count_of(location, slot)}")
                counter.body, counter.calls = code.lines, code.calls
                accessors += [pusher, counter]
        return accessors
