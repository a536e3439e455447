"""SMT encoding of tileable routing at a fixed trial depth.

Variables: the qudit map of every logical qudit at every time slice, the time
and physical coordinates of every logical gate, and one SWAP boolean per time
slice and hardware edge class (translated copies of an edge share it).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

from .core import (
    BasisCircuit, BasisGraph, QuditCoord, TilingError, critical_path_depth,
    edge_class, seed_load, timed_dependencies, validate_basis_circuit,
)


@dataclass(frozen=True)
class RoutingOptions:
    cyclic: bool = False
    gate_dependencies: bool = True
    merge_swaps: bool = False
    slice_depth: int | None = None
    minimize_swaps: bool = True
    fixed_naked_swaps: int | None = None
    delta: int = 1
    solver_timeout: float | None = None

    def __post_init__(self) -> None:
        if self.delta != 1:
            raise ValueError("only a mobility radius of 1 is supported")
        if self.fixed_naked_swaps is not None:
            if not self.merge_swaps:
                raise ValueError("fixed_naked_swaps requires merge_swaps")
            if self.fixed_naked_swaps < 0:
                raise ValueError("fixed_naked_swaps must be non-negative")
        if self.slice_depth is not None and self.slice_depth < 1:
            raise ValueError("slice_depth must be positive")

    def to_json(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_json(cls, doc: Mapping) -> "RoutingOptions":
        return cls(**{k: v for k, v in doc.items() if k in cls.__dataclass_fields__})


QuditMap = Mapping[QuditCoord, QuditCoord]


@dataclass(frozen=True)
class RoutingProblem:
    logical: BasisCircuit
    hardware: BasisGraph
    options: RoutingOptions = RoutingOptions()
    fixed_initial_map: QuditMap | None = None
    final_map_target: QuditMap | None = None
    carry_over: bool = False        # allow SWAPs in the last layer (sliced routing)

    def check(self) -> None:
        self.hardware.check()
        for q in self.logical.declared_qudits:
            if abs(q.x) > 1 or abs(q.y) > 1:
                raise TilingError(f"logical qudit {q} exceeds the one-cell reach; reseed first")
        for a, b in self.hardware.edges:
            if max(abs(a.x), abs(a.y), abs(b.x), abs(b.y)) > 1 or (a.cell != (0, 0) and b.cell != (0, 0)):
                raise TilingError(f"hardware edge {a}-{b} must touch cell (0,0) within reach one; reseed first")
        for g in self.logical.gates:
            if g.arity == 2 and g.qudits[0].s == g.qudits[1].s:
                raise TilingError(f"gate {g.id} acts twice on seed {g.qudits[0].s}; reseed the circuit")
        timed = BasisCircuit(tuple(g for g in self.logical.gates if g.time is not None), frozenset())
        if self.options.gate_dependencies and timed.gates:
            report = validate_basis_circuit(timed)
            if not report.valid:
                raise TilingError(f"logical circuit is not tileable: {report.violations[:3]}")
        if len(self.logical.seeds) > self.hardware.n_seeds:
            raise TilingError("more logical seeds than hardware seeds")
        if self.fixed_initial_map is not None:
            missing = self.logical.declared_qudits - set(self.fixed_initial_map)
            if missing:
                raise TilingError(f"fixed initial map misses {sorted(missing)[:3]}")
            images = [self.fixed_initial_map[q] for q in self.logical.declared_qudits]
            if len(set(images)) != len(images):
                raise TilingError("fixed initial map is not injective")

    @property
    def lower_bound(self) -> int:
        if not self.logical.gates:
            return 1
        bound = seed_load(self.logical)
        timed = BasisCircuit(tuple(g for g in self.logical.gates if g.time is not None), frozenset())
        if self.options.gate_dependencies and timed.gates:
            bound = max(bound, critical_path_depth(timed))
        return bound

    def ordered(self, g, h) -> bool:
        """Whether the relative order of two gates is fixed by the logical circuit."""
        return self.options.gate_dependencies and g.time is not None and h.time is not None

    def horizon(self, depth: int) -> int:
        open_end = self.options.cyclic or self.carry_over or self.final_map_target is not None
        return depth if open_end else depth - 1


# ------------------------------------------------------------------ geometry


@dataclass
class Geometry:
    """Mobility zone, SWAP sites and allowed gate edges for one problem."""
    zone_cells: list[tuple[int, int]]
    zone_vertices: list[QuditCoord]
    classes: list[tuple[QuditCoord, QuditCoord]]
    class_of: dict[tuple, int]
    swap_sites: list[tuple[int, QuditCoord, QuditCoord]]
    allowed: list[tuple[QuditCoord, QuditCoord]]
    incident: dict[QuditCoord, list[int]]

    def in_zone(self, v: QuditCoord) -> bool:
        return v.cell in self._cells

    def __post_init__(self) -> None:
        self._cells = set(self.zone_cells)


def is_one_dimensional(p: RoutingProblem) -> bool:
    return all(a.y == 0 and b.y == 0 for a, b in p.hardware.edges) and all(
        q.y == 0 for q in p.logical.declared_qudits)


def build_geometry(p: RoutingProblem) -> Geometry:
    d = p.options.delta
    flat = is_one_dimensional(p)
    ys = [0] if flat else list(range(-d, d + 1))
    zone_cells = [(x, y) for x in range(-d, d + 1) for y in ys]
    cells = set(zone_cells)
    n_seeds = p.hardware.n_seeds
    zone_vertices = [QuditCoord(x, y, s) for x, y in zone_cells for s in range(n_seeds)]
    classes = list(p.hardware.edges)
    class_of = {edge_class(a, b): k for k, (a, b) in enumerate(classes)}
    reach = d + 1
    sites = []
    for dx in range(-reach, reach + 1):
        for dy in ([0] if flat else range(-reach, reach + 1)):
            for k, (a, b) in enumerate(classes):
                ta, tb = a.shifted(dx, dy), b.shifted(dx, dy)
                if ta.cell in cells or tb.cell in cells:
                    sites.append((k, ta, tb))
    allowed = [(a, b) for _, a, b in sites if a.cell in cells and b.cell in cells]
    incident: dict[QuditCoord, list[int]] = {v: [] for v in zone_vertices}
    for idx, (_, a, b) in enumerate(sites):
        for v in (a, b):
            if v in incident:
                incident[v].append(idx)
    return Geometry(zone_cells, zone_vertices, classes, class_of, sites, allowed, incident)


# ------------------------------------------------------------------ formula


def _int(v: int) -> str:
    return str(v) if v >= 0 else f"(- {-v})"


def _and(*terms: str) -> str:
    parts = [t for t in terms if t != "true"]
    if "false" in parts:
        return "false"
    if not parts:
        return "true"
    return parts[0] if len(parts) == 1 else f"(and {' '.join(parts)})"


def _or(*terms: str) -> str:
    parts = [t for t in terms if t != "false"]
    if "true" in parts:
        return "true"
    if not parts:
        return "false"
    return parts[0] if len(parts) == 1 else f"(or {' '.join(parts)})"


def _not(t: str) -> str:
    return {"true": "false", "false": "true"}.get(t, f"(not {t})")


def _implies(a: str, b: str) -> str:
    return f"(=> {a} {b})"


def _eq(a: str, b: str) -> str:
    return f"(= {a} {b})"


def _sum(terms: list[str]) -> str:
    if not terms:
        return "0"
    return terms[0] if len(terms) == 1 else f"(+ {' '.join(terms)})"


@dataclass
class SmtFormula:
    depth: int
    horizon: int
    int_vars: dict[str, None] = field(default_factory=dict)
    bool_vars: dict[str, None] = field(default_factory=dict)
    assertions: list[tuple[str, str]] = field(default_factory=list)
    objectives: list[tuple[str, str]] = field(default_factory=list)
    intern: dict[tuple, str] = field(default_factory=dict)
    qudits: list[QuditCoord] = field(default_factory=list)
    problem: RoutingProblem | None = None
    geometry: Geometry | None = None

    # variable handles ---------------------------------------------------
    def qx(self, t: int, i: int) -> str:
        return f"qx_{t}_{i}"

    def qy(self, t: int, i: int) -> str:
        return f"qy_{t}_{i}"

    def qs(self, t: int, i: int) -> str:
        if t == 0:
            return self.intern[("seed0", self.qudits[i].s)]
        return f"qs_{t}_{i}"

    def q(self, t: int, i: int) -> tuple[str, str, str]:
        return self.qx(t, i), self.qy(t, i), self.qs(t, i)

    @staticmethod
    def gt(g: int) -> str:
        return f"gt_{g}"

    @staticmethod
    def gq(g: int, slot: int) -> tuple[str, str, str]:
        return f"gx_{g}_{slot}", f"gy_{g}_{slot}", f"gs_{g}_{slot}"

    def sw(self, t: int, k: int) -> str:
        return self.intern[("swap", t, k)]

    def swap_site_var(self, t: int, site: int) -> str:
        """Boolean of a concrete SWAP site; translated sites share the class variable."""
        return self.sw(t, self.geometry.swap_sites[site][0])

    # construction helpers ----------------------------------------------
    def declare_int(self, name: str) -> str:
        self.int_vars.setdefault(name)
        return name

    def declare_bool(self, name: str) -> str:
        self.bool_vars.setdefault(name)
        return name

    def add(self, family: str, term: str) -> None:
        if term == "true":
            return
        self.assertions.append((family, term))

    def audit(self) -> dict[str, int]:
        return dict(Counter(f for f, _ in self.assertions))

    @property
    def variables(self) -> list[str]:
        return list(self.int_vars) + list(self.bool_vars)

    def render(self, *, objectives: bool = True, extra: tuple[str, ...] = (),
               get_values: bool = True, timeout_ms: int | None = None) -> str:
        lines = ["(set-option :produce-models true)"]
        if timeout_ms is not None:
            lines.append(f"(set-option :timeout {int(timeout_ms)})")
        lines.append("(set-logic QF_LIA)")
        lines += [f"(declare-fun {v} () Int)" for v in self.int_vars]
        lines += [f"(declare-fun {v} () Bool)" for v in self.bool_vars]
        lines += [f"(define-fun {name} () Int {term})" for name, term in self.objectives]
        lines += [f"(assert {t})" for _, t in self.assertions]
        lines += [f"(assert {t})" for t in extra]
        if objectives:
            lines += [f"(minimize {name})" for name, _ in self.objectives]
        lines.append("(check-sat)")
        if get_values:
            names = self.variables + [name for name, _ in self.objectives]
            if names:
                lines.append(f"(get-value ({' '.join(names)}))")
        return "\n".join(lines) + "\n"


def _pos_eq(vars3: tuple[str, str, str], v: QuditCoord) -> str:
    return _and(_eq(vars3[0], _int(v.x)), _eq(vars3[1], _int(v.y)), _eq(vars3[2], _int(v.s)))


def _vars_eq(a: tuple[str, str, str], b: tuple[str, str, str]) -> str:
    return _and(*(_eq(x, y) for x, y in zip(a, b)))


def declare_variables(p: RoutingProblem, depth: int) -> SmtFormula:
    if depth < p.lower_bound:
        raise ValueError(f"trial depth {depth} is below the lower bound {p.lower_bound}")
    horizon = p.horizon(depth)
    f = SmtFormula(depth, horizon, problem=p, geometry=build_geometry(p))
    f.qudits = sorted(p.logical.declared_qudits)
    for seed in sorted({q.s for q in f.qudits}):
        f.intern[("seed0", seed)] = f.declare_int(f"s0_{seed}")
    for t in range(horizon + 1):
        for i in range(len(f.qudits)):
            for name in f.q(t, i):
                f.declare_int(name)
    for g in p.logical.gates:
        f.declare_int(f.gt(g.id))
        for slot in range(g.arity):
            for name in f.gq(g.id, slot):
                f.declare_int(name)
    for t in range(horizon):
        for k in range(len(f.geometry.classes)):
            f.intern[("swap", t, k)] = f.declare_bool(f"sw_{t}_{k}")
    return f


def emit_mapping_constraints(f: SmtFormula, p: RoutingProblem, depth: int) -> SmtFormula:
    n_seeds = p.hardware.n_seeds
    zone = sorted({c for c in f.geometry.zone_cells})
    xs = sorted({c[0] for c in zone})
    ys = sorted({c[1] for c in zone})
    for i, q in enumerate(f.qudits):
        x, y, s = f.q(0, i)
        if p.fixed_initial_map is not None:
            f.add("mapping", _pos_eq((x, y, s), p.fixed_initial_map[q]))
        else:
            f.add("mapping", _and(_eq(x, _int(q.x)), _eq(y, _int(q.y))))
        f.add("mapping", f"(and (<= 0 {s}) (< {s} {n_seeds}))")
        for t in range(1, f.horizon + 1):
            x, y, s = f.q(t, i)
            f.add("mapping", f"(and (<= {_int(xs[0])} {x} {_int(xs[-1])}) (<= {_int(ys[0])} {y} {_int(ys[-1])}) "
                             f"(<= 0 {s}) (< {s} {n_seeds}))")
    # Different logical seeds never share a physical seed: otherwise two whole
    # translation orbits of qudits would collide somewhere in the lattice.
    for t in range(f.horizon + 1):
        for i in range(len(f.qudits)):
            for j in range(i + 1, len(f.qudits)):
                a, b = f.q(t, i), f.q(t, j)
                if f.qudits[i].s != f.qudits[j].s:
                    f.add("injectivity", _not(_eq(a[2], b[2])))
                else:
                    f.add("injectivity", _not(_vars_eq(a, b)))
    return f


def time_windows(p: RoutingProblem, depth: int) -> dict[int, tuple[int, int]]:
    """Earliest and latest feasible layer of every gate under the dependency order.

    These bounds follow from the dependency constraints alone; stating them
    explicitly only prunes the solver's search.
    """
    deps = timed_dependencies(p.logical) if p.options.gate_dependencies else []
    order = [g.id for g in p.logical.execution_order()]
    parents: dict[int, list[int]] = {}
    children: dict[int, list[int]] = {}
    for i, j in deps:
        parents.setdefault(j, []).append(i)
        children.setdefault(i, []).append(j)
    head: dict[int, int] = {}
    for gid in order:
        head[gid] = max((head[i] + 1 for i in parents.get(gid, [])), default=0)
    tail: dict[int, int] = {}
    for gid in reversed(order):
        tail[gid] = max((tail[j] + 1 for j in children.get(gid, [])), default=0)
    return {gid: (head[gid], depth - 1 - tail[gid]) for gid in order}


def emit_dynamics_constraints(f: SmtFormula, p: RoutingProblem, depth: int) -> SmtFormula:
    geo = f.geometry
    index = {q: i for i, q in enumerate(f.qudits)}
    windows = time_windows(p, depth)
    for g in p.logical.gates:
        gt = f.gt(g.id)
        f.add("time", f"(and (<= 0 {gt}) (< {gt} {depth}))")
        lo, hi = windows[g.id]
        if lo > 0 or hi < depth - 1:
            f.add("time-window", f"(and (<= {lo} {gt}) (<= {gt} {hi}))")
        for t in range(depth):
            eqs = [_vars_eq(f.gq(g.id, slot), f.q(t, index[q])) for slot, q in enumerate(g.qudits)]
            f.add("consistency", _implies(_eq(gt, str(t)), _and(*eqs)))
        if g.arity == 2:
            a, b = f.gq(g.id, 0), f.gq(g.id, 1)
            options = []
            for u, v in geo.allowed:
                options.append(_and(_pos_eq(a, u), _pos_eq(b, v)))
                options.append(_and(_pos_eq(a, v), _pos_eq(b, u)))
            f.add("connectivity", _or(*options))
    for t in range(f.horizon):
        for i in range(len(f.qudits)):
            here, nxt = f.q(t, i), f.q(t + 1, i)
            for v in geo.zone_vertices:
                idle = [_not(f.swap_site_var(t, site)) for site in geo.incident[v]]
                f.add("swap-effect", _implies(_and(_pos_eq(here, v), *idle), _pos_eq(nxt, v)))
            for site, (k, a, b) in enumerate(geo.swap_sites):
                for src, dst in ((a, b), (b, a)):
                    if geo.in_zone(src):
                        f.add("swap-effect", _implies(_and(_pos_eq(here, src), f.sw(t, k)), _pos_eq(nxt, dst)))
    return f


def _h(f: SmtFormula, gate_id: int, u: QuditCoord, v: QuditCoord) -> str:
    a, b = f.gq(gate_id, 0), f.gq(gate_id, 1)
    return _or(_and(_pos_eq(a, u), _pos_eq(b, v)), _and(_pos_eq(a, v), _pos_eq(b, u)))


def emit_collision_and_dependency_constraints(f: SmtFormula, p: RoutingProblem, depth: int) -> SmtFormula:
    geo = f.geometry
    classes = geo.classes
    for t in range(f.horizon):
        for k, (a, b) in enumerate(classes):
            if a.s == b.s:
                # an edge joining two copies of one seed collides with its own translate
                f.add("swap-swap", _not(f.sw(t, k)))
            for k2 in range(k + 1, len(classes)):
                c, d = classes[k2]
                if {a.s, b.s} & {c.s, d.s}:
                    f.add("swap-swap", _not(_and(f.sw(t, k), f.sw(t, k2))))
    gates = list(p.logical.gates)
    if p.options.gate_dependencies:
        for i, j in timed_dependencies(p.logical):
            f.add("dependency", f"(< {f.gt(i)} {f.gt(j)})")
    for x in range(len(gates)):
        for y in range(x + 1, len(gates)):
            g, h = gates[x], gates[y]
            if not p.ordered(g, h):
                differ = [_not(_eq(f.gq(g.id, sa)[2], f.gq(h.id, sb)[2]))
                          for sa in range(g.arity) for sb in range(h.arity)]
                f.add("gate-gate", _implies(_eq(f.gt(g.id), f.gt(h.id)), _and(*differ)))
    for t in range(f.horizon):
        for g in gates:
            at_t = _eq(f.gt(g.id), str(t))
            clauses = []
            for slot in range(g.arity):
                gs = f.gq(g.id, slot)[2]
                for k, (a, b) in enumerate(classes):
                    hit = _or(*(_eq(gs, str(s)) for s in sorted({a.s, b.s})))
                    clauses.append(_not(_and(at_t, hit, f.sw(t, k))))
            if p.options.merge_swaps and g.arity == 2:
                merged = [_and(at_t, _h(f, g.id, u, v), f.sw(t, geo.class_of[edge_class(u, v)]))
                          for u, v in geo.allowed]
                f.add("gate-swap", _or(_and(*clauses), *merged))
            else:
                for c in clauses:
                    f.add("gate-swap", c)
    return f


def emit_cyclicity_constraint(f: SmtFormula, p: RoutingProblem, depth: int) -> SmtFormula:
    if p.final_map_target is not None:
        for i, q in enumerate(f.qudits):
            f.add("cyclicity", _pos_eq(f.q(f.horizon, i), p.final_map_target[q]))
        return f
    if not p.options.cyclic:
        return f
    for i in range(len(f.qudits)):
        for a, b in zip(f.q(f.horizon, i), f.q(0, i)):
            f.add("cyclicity", _eq(a, b))
    return f


def merged_indicator(f: SmtFormula, p: RoutingProblem, t: int, k: int) -> str:
    """Some gate of the 3x3 logical patch sits on a translate of class ``k`` at time ``t``."""
    options = []
    for g in p.logical.gates:
        if g.arity != 2:
            continue
        for u, v in f.geometry.allowed:
            if f.geometry.class_of[edge_class(u, v)] == k:
                options.append(_and(_eq(f.gt(g.id), str(t)), _h(f, g.id, u, v)))
    return _or(*options)


def emit_objectives(f: SmtFormula, p: RoutingProblem, depth: int) -> SmtFormula:
    opts = p.options
    if opts.fixed_naked_swaps is not None and not opts.merge_swaps:
        raise ValueError("fixed_naked_swaps requires merge_swaps")
    n_classes = len(f.geometry.classes)
    total = [f"(ite {f.sw(t, k)} 1 0)" for t in range(f.horizon) for k in range(n_classes)]
    if opts.merge_swaps and (opts.minimize_swaps or opts.fixed_naked_swaps is not None):
        naked = [f"(ite {_and(f.sw(t, k), _not(merged_indicator(f, p, t, k)))} 1 0)"
                 for t in range(f.horizon) for k in range(n_classes)]
        if opts.fixed_naked_swaps is not None:
            f.add("objective", _eq(_sum(naked), str(opts.fixed_naked_swaps)))
        elif opts.minimize_swaps:
            f.objectives.append(("naked_swaps", _sum(naked)))
    if opts.minimize_swaps:
        f.objectives.append(("total_swaps", _sum(total)))
    return f


def build_formula(p: RoutingProblem, depth: int) -> SmtFormula:
    f = declare_variables(p, depth)
    emit_mapping_constraints(f, p, depth)
    emit_dynamics_constraints(f, p, depth)
    emit_collision_and_dependency_constraints(f, p, depth)
    emit_cyclicity_constraint(f, p, depth)
    emit_objectives(f, p, depth)
    return f
