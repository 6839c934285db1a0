"""Kernel/host split for one offload pattern.

Each offloaded loop becomes a single-work-item OpenCL 1.2 kernel. The host
side is one ``offload_pattern_<ids>`` routine that walks the ten OpenCL host
stages once for the whole pattern (shared device/program setup, one buffer per
variable), followed by the CPU-side functions with the offloaded loops cut out.
The pattern routine is called where the first offloaded loop used to be and
launches the kernels in source order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from ..errors import CodegenError, UnsupportedLoop
from ..frontend import nodes as N
from ..frontend import printer
from ..frontend.loops import (
    DEFAULT_TRIP,
    LoopInfo,
    OpCounts,
    access_expressions,
    array_base,
    const_table,
    extent_elements,
    element_bytes,
    resolve,
    stmt_ops,
)
from .unroll import apply_unroll

STAGE_MARKERS = (
    "OFFLOAD STAGE 1/10: device setup",
    "OFFLOAD STAGE 2/10: kernel setup",
    "OFFLOAD STAGE 3/10: device memory allocation",
    "OFFLOAD STAGE 4/10: host to device transfer",
    "OFFLOAD STAGE 5/10: kernel argument setup",
    "OFFLOAD STAGE 6/10: kernel launch",
    "OFFLOAD STAGE 7/10: device to host transfer",
    "OFFLOAD STAGE 8/10: device memory release",
    "OFFLOAD STAGE 9/10: kernel release",
    "OFFLOAD STAGE 10/10: remaining object release",
)

MATH_BUILTINS = {
    "sin", "cos", "tan", "asin", "acos", "atan", "atan2", "sinh", "cosh", "tanh",
    "exp", "exp2", "log", "log2", "log10", "pow", "sqrt", "rsqrt", "cbrt", "fabs",
    "floor", "ceil", "round", "trunc", "fmod", "fmin", "fmax", "hypot", "abs",
    "min", "max", "sinf", "cosf", "tanf", "expf", "logf", "powf", "sqrtf", "fabsf",
    "floorf", "ceilf", "fminf", "fmaxf", "atan2f", "atanf", "hypotf",
}

DIRECTIONS = ("to_device", "to_host", "both")


@dataclass(frozen=True)
class InterfaceVar:
    variable: str
    direction: str
    byte_size: int
    kind: str = "array"  # array | scalar


@dataclass(frozen=True)
class StaticOps:
    add: int = 0
    mul: int = 0
    div: int = 0
    other: int = 0
    access: int = 0

    def __add__(self, o):
        return StaticOps(self.add + o.add, self.mul + o.mul, self.div + o.div,
                         self.other + o.other, self.access + o.access)


@dataclass(frozen=True)
class KernelArtifact:
    pattern_loops: tuple
    kernel_text: str
    host_text: str
    interface: tuple
    unroll: int
    stage_markers: tuple = STAGE_MARKERS
    static_ops: StaticOps = field(default_factory=StaticOps)
    kernel_names: tuple = ()

    @property
    def name(self) -> str:
        return pattern_name(self.pattern_loops)


def pattern_name(loop_ids) -> str:
    return "pattern_" + "_".join(str(i) for i in sorted(loop_ids))


def kernel_name(loop_id: int) -> str:
    return f"offload_loop_{loop_id}"


# -- analysis of one loop ----------------------------------------------------


@dataclass
class _Var:
    name: str
    decl: N.VarDecl
    read: bool = False
    written: bool = False
    depth: int = 0  # deepest index chain seen


@dataclass
class _LoopPlan:
    loop: LoopInfo
    arrays: dict
    scalars: dict
    locals_: list  # kernel-local declarations hoisted from the function
    constants: dict
    structs: list
    body: object  # transformed loop statement (flattened, unrolled)


def _usage(stmt, record):
    """Call ``record(name, read, write, depth)`` for every variable use."""

    def visit(e, write=False, read=True):
        if isinstance(e, N.Name):
            record(e.name, read, write, 0)
        elif isinstance(e, N.Index):
            name, depth = array_base(e)
            if name is not None:
                record(name, read, write, depth)
            x = e
            while isinstance(x, N.Index):
                visit(x.index)
                x = x.base
            if not isinstance(x, N.Name):
                visit(x, write, read)
        elif isinstance(e, N.Member):
            visit(e.base, write, read)
        elif isinstance(e, N.Assign):
            visit(e.target, True, e.op != "=")
            visit(e.value)
        elif isinstance(e, N.Unary) and e.op in ("pre++", "pre--", "post++", "post--"):
            visit(e.operand, True, True)
        elif isinstance(e, N.Unary) and e.op == "&":
            visit(e.operand, True, True)
        elif isinstance(e, N.Call):
            for a in e.args:
                visit(a)
        elif isinstance(e, N.VarDecl):
            for c in N.children(e):
                visit(c)
        else:
            for c in N.children(e):
                visit(c)

    visit(stmt)


def _local_names(stmt) -> set:
    return {n.name for n in N.walk(stmt) if isinstance(n, N.VarDecl)}


def _induction_names(stmt) -> set:
    out = set()
    for n in N.walk(stmt):
        if isinstance(n, N.For) and isinstance(n.init, N.ExprStmt):
            e = n.init.expr
            for a in (e.exprs if isinstance(e, N.Comma) else [e]):
                if isinstance(a, N.Assign) and isinstance(a.target, N.Name):
                    out.add(a.target.name)
    return out


def _check_supported(stmt, unit):
    for n in N.walk(stmt):
        if isinstance(n, N.Opaque):
            raise UnsupportedLoop(f"loop contains an unparsed construct: {n.text[:40]}")
        if isinstance(n, N.Return):
            raise UnsupportedLoop("loop body returns from the enclosing function")
        if isinstance(n, N.Labeled) and n.label not in ("case", "default"):
            raise UnsupportedLoop("loop body contains a goto label")
        if isinstance(n, N.Call):
            fname = n.func.name if isinstance(n.func, N.Name) else None
            if fname not in MATH_BUILTINS:
                raise UnsupportedLoop(f"loop calls {fname or 'a computed function'}, which has no kernel equivalent")
        if isinstance(n, N.Unary) and n.op == "*":
            raise UnsupportedLoop("pointer dereference in loop body")
        if isinstance(n, N.Member) and n.arrow:
            raise UnsupportedLoop("pointer member access in loop body")
        if isinstance(n, N.Const) and isinstance(n.value, str) and n.text.startswith('"'):
            raise UnsupportedLoop("string literal in loop body")


def _flatten(stmt, arrays: dict, constants: dict):
    """Rewrite ``a[i][j]`` on known-shape arrays as ``a[i * D1 + j]``."""

    def fn(n):
        if not isinstance(n, N.Index):
            return None
        name, depth = array_base(n)
        if name is None or name not in arrays or depth < 2:
            return None
        decl = arrays[name].decl
        if len(decl.dims) < depth:
            raise UnsupportedLoop(f"{name} is indexed through pointers of unknown shape")
        strides = []
        for d in decl.dims[1:depth]:
            v = _const(d, constants)
            if not isinstance(v, int):
                raise UnsupportedLoop(f"{name} has a non-constant inner dimension")
            strides.append(v)
        indices = []
        x = n
        while isinstance(x, N.Index):
            indices.append(x.index)
            x = x.base
        indices.reverse()
        flat = N.rewrite(indices[0], fn)
        for stride, idx in zip(strides, indices[1:]):
            flat = N.Binary(
                "+",
                N.Binary("*", flat, N.Const(str(stride), stride)),
                N.rewrite(idx, fn),
            )
        return N.Index(N.Name(name), flat)

    return N.rewrite(stmt, fn)


def _const(e, constants):
    from ..frontend.parser import eval_const

    return eval_const(e, constants)


def _plan_loop(loop: LoopInfo, unit, b: int, default_trip: int) -> _LoopPlan:
    stmt, func = loop.node, loop.function
    constants = const_table(unit)
    _check_supported(stmt, unit)
    if loop.kind != "for" and b > 1:
        # unrolling needs a counted loop; the tail rule in apply_unroll would reject it
        pass
    local = _local_names(stmt)
    induction = _induction_names(stmt) - local
    uses: dict[str, _Var] = {}

    def record(name, read, write, depth):
        if name in local:
            return
        v = uses.get(name)
        if v is None:
            decl = resolve(name, func, unit)
            if decl is None:
                if name in unit.constants or name in MATH_BUILTINS:
                    return
                raise CodegenError(f"loop {loop.id} references unresolvable symbol {name!r}")
            v = uses[name] = _Var(name, decl)
        v.read |= read
        v.written |= write
        v.depth = max(v.depth, depth)

    _usage(stmt, record)
    arrays, scalars, locals_ = {}, {}, []
    used_constants = {}
    for name, v in uses.items():
        if name in induction and not v.decl.is_array_like:
            locals_.append(v.decl)
            continue
        if v.decl.is_array_like:
            if v.depth == 0:
                raise UnsupportedLoop(f"array {name} is used without an index")
            arrays[name] = v
        else:
            scalars[name] = v
    for n in N.walk(stmt):
        if isinstance(n, N.Name) and n.name not in uses and n.name not in local and n.name in unit.constants:
            used_constants[n.name] = unit.constants[n.name]
    structs = []
    for v in list(arrays.values()) + list(scalars.values()):
        s = unit.struct_named(v.decl.ctype.base) if v.decl.ctype.struct else None
        if v.decl.ctype.struct and s is None:
            raise UnsupportedLoop(f"{v.name} has a record type whose layout is unknown")
        if s is not None and s not in structs:
            structs.append(s)
    body = _flatten(stmt, arrays, constants)
    trip = loop.trip
    body = apply_unroll(body, trip, b, constants)
    return _LoopPlan(loop, arrays, scalars, locals_, used_constants, structs, body)


def _array_bytes(v: _Var, loop: LoopInfo, constants, default_trip) -> int:
    extent = extent_elements(v.decl, constants)
    if extent is None:
        extent = loop.trip.resolved(default_trip)
    return extent * element_bytes(v.decl, v.depth if v.depth else 1)


def _direction(read: bool, written: bool) -> str:
    if written and read:
        return "both"
    return "to_host" if written else "to_device"


def _merge(a: str, b: str) -> str:
    return a if a == b else "both"


# -- text rendering ----------------------------------------------------------


def _elem_type(decl: N.VarDecl) -> str:
    ptr = max(0, decl.ctype.pointer - (0 if decl.dims else 1))
    return decl.ctype.base + (" " + "*" * ptr if ptr else "")


def _struct_text(s: N.StructDef) -> str:
    fields = "\n".join(f"    {printer.decl(f)};" for f in s.fields)
    if s.typedef_name:
        tag = f" {s.tag}" if s.tag else ""
        return f"typedef {s.kind}{tag} {{\n{fields}\n}} {s.typedef_name};"
    return f"{s.kind} {s.tag} {{\n{fields}\n}};"


def _scalar_io(name: str) -> str:
    return f"{name}_io"


def _kernel_function(plan: _LoopPlan) -> str:
    params = []
    for name, v in plan.arrays.items():
        const = "const " if not v.written else ""
        params.append(f"__global {const}{_elem_type(v.decl)} *restrict {name}")
    pre, post = [], []
    for name, v in plan.scalars.items():
        t = v.decl.ctype.base
        if v.written:
            params.append(f"__global {t} *restrict {_scalar_io(name)}")
            pre.append(f"    {t} {name} = {_scalar_io(name)}[0];")
            post.append(f"    {_scalar_io(name)}[0] = {name};")
        else:
            params.append(f"const {t} {name}")
    head = f"__kernel void {kernel_name(plan.loop.id)}({', '.join(params) or 'void'})"
    lines = [head, "{"]
    for d in plan.locals_:
        lines.append(f"    {d.ctype.base} {d.name};")
    lines.extend(pre)
    lines.append(printer.stmt(plan.body, 1))
    lines.extend(post)
    lines.append("}")
    return "\n".join(lines)


def _stub_kernel(loop: LoopInfo) -> str:
    params = ", ".join(
        f"__global {'double' if a.element_bytes == 8 else 'float' if a.element_bytes == 4 else 'char'} *restrict {a.name}"
        for a in loop.body_profile.arrays
    )
    return (
        f"__kernel void {kernel_name(loop.id)}({params or 'void'})\n{{\n"
        f"    /* loop {loop.id}: body comes from an external loop inventory */\n}}"
    )


def _uses_double(plan: _LoopPlan) -> bool:
    decls = [v.decl for v in plan.arrays.values()] + [v.decl for v in plan.scalars.values()] + plan.locals_
    return any("double" in d.ctype.base for d in decls) or "double" in printer.stmt(plan.body)


def _kernel_text(loop_ids, plans, stubs, b) -> str:
    out = [f"/* offload kernels for {pattern_name(loop_ids)} (unroll {b}) */"]
    if any("double" in t for t in stubs) or any(_uses_double(p) for p in plans):
        out.append("#pragma OPENCL EXTENSION cl_khr_fp64 : enable")
    consts = {}
    for p in plans:
        consts.update(p.constants)
    for name in sorted(consts):
        out.append(f"#define {name} {consts[name]!r}")
    structs = []
    for p in plans:
        for s in p.structs:
            if s not in structs:
                structs.append(s)
    out.extend(_struct_text(s) for s in structs)
    out.append("")
    bodies = {p.loop.id: _kernel_function(p) for p in plans}
    for lid, s in zip([i for i in loop_ids if i not in bodies], stubs):
        bodies[lid] = s
    out.append("\n\n".join(bodies[i] for i in sorted(bodies)))
    return "\n".join(out) + "\n"


def _host_arg_type(v: _Var) -> str:
    return _elem_type(v.decl) + " *"


def _host_text(loop_ids, plans, stubs_loops, interface, unit) -> str:
    pname = pattern_name(loop_ids)
    func = f"offload_{pname}"
    arrays, scalars = {}, {}
    for p in plans:
        for name, v in p.arrays.items():
            arrays.setdefault(name, v)
        for name, v in p.scalars.items():
            if name in scalars:
                scalars[name].written |= v.written
            else:
                scalars[name] = _Var(name, v.decl, v.read, v.written)
    for lp in stubs_loops:
        for a in lp.body_profile.arrays:
            if a.name not in arrays:
                ctype = N.CType({8: "double", 4: "float", 2: "short", 1: "char"}[a.element_bytes], a.element_bytes, 1)
                arrays[a.name] = _Var(a.name, N.VarDecl(a.name, ctype), True, True, 1)
    sizes = {iv.variable: iv for iv in interface}
    params = []
    for name, v in arrays.items():
        params.append(f"{_host_arg_type(v)}{name}")
    for name, v in scalars.items():
        t = v.decl.ctype.base
        params.append(f"{t} *{name}" if v.written else f"{t} {name}")

    L = []
    L.append(f"/* host program for {pname}: kernels {', '.join(kernel_name(i) for i in loop_ids)} */")
    L.append("#include <stdio.h>")
    L.append("#include <stdlib.h>")
    L.append("#include <CL/cl.h>")
    L.append("")
    L.append("#define OFFLOAD_CHECK(e) do { cl_int e_ = (e); if (e_ != CL_SUCCESS) { \\")
    L.append('    fprintf(stderr, "OpenCL error %d at %s:%d\\n", (int)e_, __FILE__, __LINE__); exit(1); } } while (0)')
    L.append("")
    L.append("static unsigned char *offload_read_binary(const char *path, size_t *len)")
    L.append("{")
    L.append('    FILE *f = fopen(path, "rb");')
    L.append("    unsigned char *buf;")
    L.append('    if (!f) { fprintf(stderr, "cannot open %s\\n", path); exit(1); }')
    L.append("    fseek(f, 0, SEEK_END);")
    L.append("    *len = (size_t)ftell(f);")
    L.append("    fseek(f, 0, SEEK_SET);")
    L.append("    buf = (unsigned char *)malloc(*len);")
    L.append("    if (fread(buf, 1, *len, f) != *len) { fclose(f); exit(1); }")
    L.append("    fclose(f);")
    L.append("    return buf;")
    L.append("}")
    L.append("")
    L.append(f"void {func}({', '.join(params) or 'void'})")
    L.append("{")
    L.append("    cl_int err;")
    L.append(f"    /* {STAGE_MARKERS[0]} */")
    L.append("    cl_platform_id platform;")
    L.append("    cl_device_id device;")
    L.append("    OFFLOAD_CHECK(clGetPlatformIDs(1, &platform, NULL));")
    L.append("    OFFLOAD_CHECK(clGetDeviceIDs(platform, CL_DEVICE_TYPE_ACCELERATOR, 1, &device, NULL));")
    L.append("    cl_context context = clCreateContext(NULL, 1, &device, NULL, NULL, &err);")
    L.append("    OFFLOAD_CHECK(err);")
    L.append("    cl_command_queue queue = clCreateCommandQueue(context, device, 0, &err);")
    L.append("    OFFLOAD_CHECK(err);")
    L.append(f"    /* {STAGE_MARKERS[1]} */")
    L.append("    size_t binary_len = 0;")
    L.append(f'    unsigned char *binary = offload_read_binary("{pname}.aocx", &binary_len);')
    L.append("    cl_program program = clCreateProgramWithBinary(context, 1, &device, &binary_len,")
    L.append("        (const unsigned char **)&binary, NULL, &err);")
    L.append("    OFFLOAD_CHECK(err);")
    L.append('    OFFLOAD_CHECK(clBuildProgram(program, 1, &device, "", NULL, NULL));')
    for i in loop_ids:
        L.append(f'    cl_kernel k_{i} = clCreateKernel(program, "{kernel_name(i)}", &err);')
        L.append("    OFFLOAD_CHECK(err);")
    L.append(f"    /* {STAGE_MARKERS[2]} */")
    flags = {"to_device": "CL_MEM_READ_ONLY", "to_host": "CL_MEM_WRITE_ONLY", "both": "CL_MEM_READ_WRITE"}
    buffers = []
    for name in arrays:
        iv = sizes[name]
        buffers.append((name, iv, name))
    for name, v in scalars.items():
        if v.written:
            buffers.append((name, sizes[name], name))
    for name, iv, _ in buffers:
        L.append(f"    cl_mem d_{name} = clCreateBuffer(context, {flags[iv.direction]}, {iv.byte_size}, NULL, &err);")
        L.append("    OFFLOAD_CHECK(err);")
    L.append(f"    /* {STAGE_MARKERS[3]} */")
    for name, iv, host in buffers:
        if iv.direction in ("to_device", "both"):
            L.append(f"    OFFLOAD_CHECK(clEnqueueWriteBuffer(queue, d_{name}, CL_TRUE, 0, {iv.byte_size}, {host}, 0, NULL, NULL));")
    L.append(f"    /* {STAGE_MARKERS[4]} */")
    for p in plans:
        k = 0
        for name in p.arrays:
            L.append(f"    OFFLOAD_CHECK(clSetKernelArg(k_{p.loop.id}, {k}, sizeof(cl_mem), &d_{name}));")
            k += 1
        for name, v in p.scalars.items():
            if v.written:
                L.append(f"    OFFLOAD_CHECK(clSetKernelArg(k_{p.loop.id}, {k}, sizeof(cl_mem), &d_{name}));")
            else:
                L.append(f"    OFFLOAD_CHECK(clSetKernelArg(k_{p.loop.id}, {k}, sizeof({v.decl.ctype.base}), &{name}));")
            k += 1
    for lp in stubs_loops:
        for k, a in enumerate(lp.body_profile.arrays):
            L.append(f"    OFFLOAD_CHECK(clSetKernelArg(k_{lp.id}, {k}, sizeof(cl_mem), &d_{a.name}));")
    L.append(f"    /* {STAGE_MARKERS[5]} */")
    for i in loop_ids:
        L.append(f"    OFFLOAD_CHECK(clEnqueueTask(queue, k_{i}, 0, NULL, NULL));")
    L.append("    OFFLOAD_CHECK(clFinish(queue));")
    L.append(f"    /* {STAGE_MARKERS[6]} */")
    for name, iv, host in buffers:
        if iv.direction in ("to_host", "both"):
            L.append(f"    OFFLOAD_CHECK(clEnqueueReadBuffer(queue, d_{name}, CL_TRUE, 0, {iv.byte_size}, {host}, 0, NULL, NULL));")
    L.append(f"    /* {STAGE_MARKERS[7]} */")
    for name, _, _ in buffers:
        L.append(f"    clReleaseMemObject(d_{name});")
    L.append(f"    /* {STAGE_MARKERS[8]} */")
    for i in loop_ids:
        L.append(f"    clReleaseKernel(k_{i});")
    L.append("    clReleaseProgram(program);")
    L.append(f"    /* {STAGE_MARKERS[9]} */")
    L.append("    free(binary);")
    L.append("    clReleaseCommandQueue(queue);")
    L.append("    clReleaseContext(context);")
    L.append("}")

    # CPU remainder: functions that held offloaded loops
    call_args = []
    for name, v in arrays.items():
        call_args.append(f"({_host_arg_type(v)}){name}" if len(v.decl.dims) > 1 else name)
    for name, v in scalars.items():
        call_args.append(f"&{name}" if v.written else name)
    call = N.Opaque(f"{func}({', '.join(call_args)});")
    if plans:
        by_node = {id(p.loop.node): p.loop.id for p in plans}
        first = min(by_node.values())
        funcs = []
        for p in plans:
            if p.loop.function not in funcs:
                funcs.append(p.loop.function)
        for f in funcs:
            def swap(n):
                lid = by_node.get(id(n))
                if lid is None:
                    return None
                if lid == first:
                    return call
                return N.Opaque(f"/* loop {lid} runs on the device inside {func} */")

            body = N.rewrite(f.body, swap)
            L.append("")
            L.append(f"/* CPU side of {f.name} ({f.file}:{f.line}) */")
            params_txt = ", ".join(printer.decl(x) for x in f.params) or "void"
            L.append(f"{f.return_type.spelled()} {f.name}({params_txt})")
            L.append(printer.stmt(body, 0))
    return "\n".join(L) + "\n"


def _static_ops(loop: LoopInfo) -> StaticOps:
    if loop.node is None:
        bp = loop.body_profile
        return StaticOps(bp.ops_add, bp.ops_mul, bp.ops_div, bp.ops_other, bp.access_exprs)
    counts = OpCounts()
    stmt_ops(loop.node, counts, lambda s: 1, include_headers=True)
    return StaticOps(counts.add, counts.mul, counts.div, counts.other, len(access_expressions(loop.node)))


def generate_artifact(loops, unit, b: int = 1, default_trip: int = DEFAULT_TRIP) -> KernelArtifact:
    """Kernel and host text for offloading ``loops`` together."""
    if not loops:
        raise CodegenError("an offload pattern needs at least one loop")
    if b < 1:
        raise CodegenError(f"unroll factor must be >= 1, got {b}")
    loops = sorted(loops, key=lambda lp: lp.id)
    ids = {lp.id for lp in loops}
    for lp in loops:
        if lp.parent_id in ids:
            raise UnsupportedLoop(f"loop {lp.id} is nested inside loop {lp.parent_id} of the same pattern")
    loop_ids = tuple(lp.id for lp in loops)
    constants = const_table(unit)
    plans = [_plan_loop(lp, unit, b, default_trip) for lp in loops if lp.node is not None]
    stub_loops = [lp for lp in loops if lp.node is None]
    stubs = [_stub_kernel(lp) for lp in stub_loops]

    merged: dict[str, InterfaceVar] = {}

    def add(iv):
        old = merged.get(iv.variable)
        if old is None:
            merged[iv.variable] = iv
        else:
            merged[iv.variable] = InterfaceVar(
                iv.variable, _merge(old.direction, iv.direction), max(old.byte_size, iv.byte_size), old.kind
            )

    for p in plans:
        for name, v in p.arrays.items():
            add(InterfaceVar(name, _direction(v.read, v.written), _array_bytes(v, p.loop, constants, default_trip)))
        for name, v in p.scalars.items():
            add(InterfaceVar(name, _direction(v.read, v.written), v.decl.ctype.size, "scalar"))
    for lp in stub_loops:
        for a in lp.body_profile.arrays:
            extent = a.extent_elements if a.extent_elements is not None else lp.trip.resolved(default_trip)
            add(InterfaceVar(a.name, "both", extent * a.element_bytes))
    interface = tuple(merged.values())
    ops = StaticOps()
    for lp in loops:
        ops = ops + _static_ops(lp)
    return KernelArtifact(
        pattern_loops=loop_ids,
        kernel_text=_kernel_text(loop_ids, plans, stubs, b),
        host_text=_host_text(loop_ids, plans, stub_loops, interface, unit),
        interface=interface,
        unroll=b,
        static_ops=ops,
        kernel_names=tuple(kernel_name(i) for i in loop_ids),
    )


def markers_in_order(host_text: str, markers=STAGE_MARKERS) -> bool:
    """True when every marker occurs exactly once, at strictly increasing offsets."""
    last = -1
    for m in markers:
        if host_text.count(m) != 1:
            return False
        at = host_text.find(m)
        if at <= last:
            return False
        last = at
    return True


def interface_manifest(artifact: KernelArtifact) -> dict:
    return {
        "pattern": artifact.name,
        "pattern_loops": list(artifact.pattern_loops),
        "unroll": artifact.unroll,
        "kernels": list(artifact.kernel_names),
        "interface": [asdict(iv) for iv in artifact.interface],
        "static_ops": asdict(artifact.static_ops),
        "stage_markers": list(artifact.stage_markers),
    }


def write_artifact(artifact: KernelArtifact, directory) -> dict:
    """Write ``<name>.kernel.cl``, ``<name>.host.c`` and ``interface.json`` under ``directory/<name>/``."""
    out = Path(directory) / artifact.name
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "kernel": out / f"{artifact.name}.kernel.cl",
        "host": out / f"{artifact.name}.host.c",
        "interface": out / "interface.json",
        "workdir": out,
    }
    paths["kernel"].write_text(artifact.kernel_text)
    paths["host"].write_text(artifact.host_text)
    paths["interface"].write_text(json.dumps(interface_manifest(artifact), indent=2, sort_keys=True) + "\n")
    return paths

