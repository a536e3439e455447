"""Value types and pure algorithms on basis graphs and basis circuits.

A lattice qudit is addressed by its cell ``(x, y)`` and a seed number ``s``.
Translating a basis object by whole cells (and, for circuits, whole layers)
and merging the copies yields a lattice graph or lattice circuit.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, NamedTuple, Sequence

from . import _kernels


class TilingError(ValueError):
    """Raised when a basis object violates a structural requirement."""


class QuditCoord(NamedTuple):
    x: int
    y: int
    s: int

    @property
    def cell(self) -> tuple[int, int]:
        return (self.x, self.y)

    def shifted(self, dx: int, dy: int) -> "QuditCoord":
        return QuditCoord(self.x + dx, self.y + dy, self.s)

    def wrapped(self) -> "QuditCoord":
        return QuditCoord(0, 0, self.s)


def qc(x: int, y: int, s: int) -> QuditCoord:
    """Checked constructor used by the parsers."""
    if s < 0:
        raise TilingError(f"negative seed in {(x, y, s)}")
    return QuditCoord(int(x), int(y), int(s))


@dataclass(frozen=True)
class Gate:
    id: int
    label: str
    qudits: tuple[QuditCoord, ...]
    time: int | None = None

    def __post_init__(self) -> None:
        if not 1 <= len(self.qudits) <= 2:
            raise TilingError(f"gate {self.id}: arity must be 1 or 2")
        if len(self.qudits) == 2 and self.qudits[0] == self.qudits[1]:
            raise TilingError(f"gate {self.id}: repeated qudit {self.qudits[0]}")
        if self.time is not None and self.time < 0:
            raise TilingError(f"gate {self.id}: negative time")

    @property
    def arity(self) -> int:
        return len(self.qudits)

    def key(self) -> tuple:
        """Identity used for full-duplicate detection."""
        return (frozenset(self.qudits), self.time, self.label)


@dataclass(frozen=True)
class BasisCircuit:
    gates: tuple[Gate, ...]
    declared_qudits: frozenset[QuditCoord] = field(default=frozenset())
    dimensions: str | None = None

    def __post_init__(self) -> None:
        ids = [g.id for g in self.gates]
        if len(set(ids)) != len(ids):
            raise TilingError("gate ids must be unique")
        used = {q for g in self.gates for q in g.qudits}
        object.__setattr__(self, "declared_qudits", frozenset(self.declared_qudits) | used)

    @classmethod
    def of(cls, gates: Iterable[Gate], idle: Iterable[QuditCoord] = ()) -> "BasisCircuit":
        return cls(tuple(gates), frozenset(idle))

    @property
    def timed(self) -> bool:
        return all(g.time is not None for g in self.gates)

    @property
    def depth(self) -> int:
        times = [g.time for g in self.gates if g.time is not None]
        return max(times) + 1 if times else 0

    @property
    def seeds(self) -> list[int]:
        return sorted({q.s for q in self.declared_qudits})

    def gate(self, gate_id: int) -> Gate:
        for g in self.gates:
            if g.id == gate_id:
                return g
        raise KeyError(gate_id)

    def execution_order(self) -> list[Gate]:
        """Gates sorted by time when every time is present, else list order."""
        if self.gates and self.timed:
            return sorted(self.gates, key=lambda g: g.time)
        return list(self.gates)


def canonical_edge(a: QuditCoord, b: QuditCoord) -> tuple[QuditCoord, QuditCoord]:
    return (a, b) if a <= b else (b, a)


def edge_class(a: QuditCoord, b: QuditCoord) -> tuple[int, int, int, int]:
    """Translation-invariant key of an undirected lattice edge: (seed, seed, dx, dy)."""
    if (a.s, b.s) > (b.s, a.s) or (a.s == b.s and (b.x - a.x, b.y - a.y) < (0, 0)):
        a, b = b, a
    return (a.s, b.s, b.x - a.x, b.y - a.y)


@dataclass(frozen=True)
class BasisGraph:
    vertices: frozenset[QuditCoord]
    edges: tuple[tuple[QuditCoord, QuditCoord], ...]
    name: str = ""

    def __post_init__(self) -> None:
        canon = sorted({canonical_edge(a, b) for a, b in self.edges})
        object.__setattr__(self, "edges", tuple(canon))
        object.__setattr__(self, "vertices", frozenset(self.vertices))

    @property
    def n_seeds(self) -> int:
        return len({v.s for v in self.vertices})

    def edge_classes(self) -> dict[tuple[int, int, int, int], tuple[QuditCoord, QuditCoord]]:
        return {edge_class(a, b): (a, b) for a, b in self.edges}

    def check(self) -> None:
        """Raise TilingError unless the basis-graph invariants hold."""
        seeds = {v.s for v in self.vertices}
        if seeds != set(range(len(seeds))):
            raise TilingError(f"{self.name}: seeds are not congruent: {sorted(seeds)}")
        if any(v.cell != (0, 0) for v in self.vertices):
            raise TilingError(f"{self.name}: vertices must live in cell (0,0)")
        for a, b in self.edges:
            if a == b:
                raise TilingError(f"{self.name}: self loop at {a}")
            for v in (a, b):
                if v.s not in seeds:
                    raise TilingError(f"{self.name}: endpoint {v} has an unknown seed")
            if a.cell == b.cell and a.cell != (0, 0):
                raise TilingError(f"{self.name}: edge {a}-{b} lies outside the central cell")
        keys = [edge_class(a, b) for a, b in self.edges]
        if len(set(keys)) != len(keys):
            raise TilingError(f"{self.name}: redundant translated edges")

    def lattice_edges(self, offsets: Iterable[tuple[int, int]]) -> list[tuple[QuditCoord, QuditCoord]]:
        out = []
        for dx, dy in offsets:
            for a, b in self.edges:
                out.append((a.shifted(dx, dy), b.shifted(dx, dy)))
        return out


@dataclass(frozen=True)
class PatchSpec:
    n: int
    m: int
    l: int = 1

    def __post_init__(self) -> None:
        if min(self.n, self.m, self.l) < 1:
            raise ValueError("patch sizes must be positive")

    @classmethod
    def parse(cls, text: str) -> "PatchSpec":
        parts = [int(p) for p in text.lower().split("x")]
        if len(parts) == 2:
            parts.append(1)
        if len(parts) != 3:
            raise ValueError(f"expected NxMxL, got {text!r}")
        return cls(*parts)


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    violations: tuple[tuple[int, int, tuple[int, ...]], ...] = ()


class InvalidCircuitError(TilingError):
    def __init__(self, report: ValidationReport):
        self.report = report
        first = report.violations[0] if report.violations else None
        super().__init__(f"basis circuit is not tileable; first violation (time, seed, gates) = {first}")


# ---------------------------------------------------------------- translation


def translate(g: Gate, dx: int, dy: int, dt: int = 0) -> Gate:
    if dt and g.time is None:
        raise TilingError("cannot shift the time of an unscheduled gate")
    time = None if g.time is None else g.time + dt
    if time is not None and time < 0:
        raise TilingError("time underflow")
    return Gate(g.id, g.label, tuple(q.shifted(dx, dy) for q in g.qudits), time)


def translate_circuit(c: BasisCircuit, dx: int, dy: int, dt: int = 0) -> BasisCircuit:
    return BasisCircuit(
        tuple(translate(g, dx, dy, dt) for g in c.gates),
        frozenset(q.shifted(dx, dy) for q in c.declared_qudits),
        c.dimensions,
    )


# ----------------------------------------------------------------- validation


def _slot_table(gates: Sequence[Gate]) -> dict[tuple[int, int], list[int]]:
    table: dict[tuple[int, int], list[int]] = defaultdict(list)
    for g in gates:
        for q in g.qudits:
            table[(g.time, q.s)].append(g.id)
    return table


def validate_basis_circuit(c: BasisCircuit, *, allow_merged_swaps: bool = False,
                           swap_label: str = "SWAP") -> ValidationReport:
    """Tileability check: per layer, each seed may be acted on by one gate slot.

    With ``allow_merged_swaps`` a SWAP whose edge is a translate of a
    two-qudit gate in the same layer is treated as merged into that gate.
    """
    if not c.timed:
        raise TilingError("validation needs every gate time")
    gates = list(c.gates)
    if allow_merged_swaps:
        shapes = {(g.time, edge_class(*g.qudits)) for g in gates
                  if g.arity == 2 and g.label != swap_label}
        gates = [g for g in gates
                 if not (g.label == swap_label and g.arity == 2
                         and (g.time, edge_class(*g.qudits)) in shapes)]
    rows, labels = _kernels.gates_to_rows(gates)
    slot_keys, slot_gate = _kernels.slot_keys_time_seed(rows)
    dup = _kernels.duplicate_mask(slot_keys)
    if not dup.any():
        return ValidationReport(True, ())
    table = _slot_table(gates)
    violations = tuple(
        (t, s, tuple(sorted(ids))) for (t, s), ids in sorted(table.items()) if len(ids) > 1
    )
    return ValidationReport(False, violations)


# -------------------------------------------------------------------- patching


def _patch_offsets(p: PatchSpec, depth: int) -> list[tuple[int, int, int]]:
    return [(i, j, k * depth) for k in range(p.l) for i in range(p.n) for j in range(p.m)]


def tile_gates(gates: Sequence[Gate], offsets: Sequence[tuple[int, int, int]]
               ) -> tuple[list[Gate], list[tuple[int, int, int, int]]]:
    """Translate every gate by every offset; returns gates plus (source id, dx, dy, dt)."""
    if not gates or not offsets:
        return [], []
    rows, labels = _kernels.gates_to_rows(gates)
    tiled = _kernels.tile_rows(rows, _kernels.as_offsets(offsets))
    out: list[Gate] = []
    origin: list[tuple[int, int, int, int]] = []
    n_gates = len(gates)
    for idx, row in enumerate(tiled.tolist()):
        src = gates[idx % n_gates]
        off = offsets[idx // n_gates]
        qs = (QuditCoord(row[0], row[1], row[2]),)
        if row[7] == 2:
            qs = qs + (QuditCoord(row[3], row[4], row[5]),)
        out.append(Gate(idx, src.label, qs, None if src.time is None else row[6]))
        origin.append((src.id, off[0], off[1], off[2]))
    return out, origin


def dedupe_gates(gates: Sequence[Gate]) -> tuple[list[Gate], int]:
    """Drop full duplicates (same qudit set, time and label); keeps first occurrences."""
    if not gates:
        return [], 0
    rows, _ = _kernels.gates_to_rows(gates)
    keep = _kernels.first_occurrence(_kernels.gate_identity_keys(rows))
    kept = [g for g, k in zip(gates, keep) if k]
    return kept, len(gates) - len(kept)


@dataclass(frozen=True)
class PatchResult:
    circuit: BasisCircuit
    duplicates: int


def make_patch_report(c: BasisCircuit, p: PatchSpec, *, check: bool = True,
                      allow_merged_swaps: bool = False) -> PatchResult:
    if check:
        report = validate_basis_circuit(c, allow_merged_swaps=allow_merged_swaps)
        if not report.valid:
            raise InvalidCircuitError(report)
    depth = c.depth
    offsets = _patch_offsets(p, depth)
    tiled, _ = tile_gates(list(c.gates), offsets)
    kept, dups = dedupe_gates(tiled)
    kept = [replace(g, id=i) for i, g in enumerate(kept)]
    qudits = {q.shifted(dx, dy) for dx, dy, _ in offsets for q in c.declared_qudits}
    return PatchResult(BasisCircuit(tuple(kept), frozenset(qudits), c.dimensions), dups)


def make_patch(c: BasisCircuit, p: PatchSpec, **kwargs) -> BasisCircuit:
    """Merge ``n*m*l`` translated copies of ``c`` into one circuit."""
    return make_patch_report(c, p, **kwargs).circuit


def patch_has_collision(c: BasisCircuit) -> bool:
    """True when some qudit is acted on twice in one layer (exact coordinates)."""
    if not c.gates:
        return False
    rows, _ = _kernels.gates_to_rows(list(c.gates))
    return bool(_kernels.duplicate_mask(_kernels.slot_keys_time_coord(rows)).any())


# ------------------------------------------------------------------ reseeding


def _reseed_map(n: int, m: int, n_seeds: int):
    def remap(q: QuditCoord) -> QuditCoord:
        cx, rx = divmod(q.x, n)
        cy, ry = divmod(q.y, m)
        return QuditCoord(cx, cy, (rx * m + ry) * n_seeds + q.s)
    return remap


def reseed_graph(b: BasisGraph, n: int, m: int) -> BasisGraph:
    """Express the ``n x m`` patch of ``b`` as a basis graph with a larger cell."""
    if n < 1 or m < 1:
        raise ValueError("reseeding sizes must be positive")
    remap = _reseed_map(n, m, b.n_seeds)
    vertices = {remap(v.shifted(i, j)) for i in range(n) for j in range(m) for v in b.vertices}
    edges: dict[tuple, tuple[QuditCoord, QuditCoord]] = {}
    for a, c in b.lattice_edges([(i, j) for i in range(n) for j in range(m)]):
        ra, rc = remap(a), remap(c)
        edges.setdefault(edge_class(ra, rc), (ra, rc))
    suffix = "" if (n, m) == (1, 1) else f"({n},{m})"
    return BasisGraph(frozenset(vertices), tuple(edges.values()), b.name + suffix)


def reseed_circuit(c: BasisCircuit, n: int, m: int) -> BasisCircuit:
    """Express the ``n x m`` patch of ``c`` as one basis circuit; times are kept."""
    if n < 1 or m < 1:
        raise ValueError("reseeding sizes must be positive")
    n_seeds = max(c.seeds) + 1 if c.declared_qudits else 1
    remap = _reseed_map(n, m, n_seeds)
    gates = []
    for i in range(n):
        for j in range(m):
            for g in c.gates:
                moved = translate(g, i, j)
                gates.append(Gate(0, g.label, tuple(remap(q) for q in moved.qudits), g.time))
    if c.timed:
        gates.sort(key=lambda g: g.time)
    gates = [replace(g, id=k) for k, g in enumerate(gates)]
    idle = {remap(q.shifted(i, j)) for i in range(n) for j in range(m) for q in c.declared_qudits}
    return BasisCircuit(tuple(gates), frozenset(idle), c.dimensions)


# ------------------------------------------------------------ wrapped DAG ops


def gate_dependencies(c: BasisCircuit) -> list[tuple[int, int]]:
    """Direct parent/child pairs of the wrapped circuit's DAG, in execution order."""
    last: dict[int, int] = {}
    pairs: list[tuple[int, int]] = []
    seen = set()
    for g in c.execution_order():
        for q in g.qudits:
            parent = last.get(q.s)
            if parent is not None and parent != g.id and (parent, g.id) not in seen:
                seen.add((parent, g.id))
                pairs.append((parent, g.id))
        for q in g.qudits:
            last[q.s] = g.id
    return pairs


def timed_dependencies(c: BasisCircuit) -> list[tuple[int, int]]:
    """Dependencies among gates that carry a time; untimed gates stay unordered."""
    timed = [g for g in c.gates if g.time is not None]
    if not timed:
        return []
    return gate_dependencies(BasisCircuit(tuple(timed), frozenset(), c.dimensions))


def schedule(c: BasisCircuit) -> BasisCircuit:
    """As-soon-as-possible layering of the wrapped circuit, then unwrapped."""
    ready: dict[int, int] = {}
    times: dict[int, int] = {}
    for g in c.execution_order():
        t = max((ready.get(q.s, 0) for q in g.qudits), default=0)
        times[g.id] = t
        for q in g.qudits:
            ready[q.s] = t + 1
    gates = tuple(replace(g, time=times[g.id]) for g in c.gates)
    return BasisCircuit(gates, c.declared_qudits, c.dimensions)


def seed_multiplicity(g: Gate) -> int:
    counts: dict[int, int] = defaultdict(int)
    for q in g.qudits:
        counts[q.s] += 1
    return max(counts.values())


def critical_path_depth(c: BasisCircuit) -> int:
    """Longest chain of the wrapped DAG.

    A gate touching one seed on two different cells occupies that seed in two
    lattice gates, so it weighs two layers.
    """
    finish: dict[int, int] = {}
    best = 0
    for g in c.execution_order():
        start = max((finish.get(q.s, 0) for q in g.qudits), default=0)
        end = start + seed_multiplicity(g)
        for q in g.qudits:
            finish[q.s] = end
        best = max(best, end)
    return best


def seed_load(c: BasisCircuit) -> int:
    """Largest number of gate slots sharing one seed: a depth bound for any order."""
    counts: dict[int, int] = defaultdict(int)
    for g in c.gates:
        for q in g.qudits:
            counts[q.s] += 1
    return max(counts.values(), default=0)


def lattice_max_degree(b: BasisGraph) -> int:
    """Largest vertex degree of the generated lattice.

    Every endpoint of a basis edge with seed ``s`` contributes one incident
    lattice edge to each vertex of seed ``s`` (the wrapped degree).
    """
    degree: dict[int, int] = defaultdict(int)
    for a, c in b.edges:
        degree[a.s] += 1
        degree[c.s] += 1
    return max(degree.values(), default=0)


# ----------------------------------------------------------------------- JSON


def coord_list(q: QuditCoord) -> list[int]:
    return [q.x, q.y, q.s]


def graph_to_json(b: BasisGraph) -> dict:
    return {
        "name": b.name,
        "vertices": [coord_list(v) for v in sorted(b.vertices)],
        "edges": [[coord_list(a), coord_list(c)] for a, c in b.edges],
    }


def graph_from_json(data: dict) -> BasisGraph:
    try:
        vertices = frozenset(qc(*v) for v in data["vertices"])
        edges = tuple((qc(*a), qc(*c)) for a, c in data["edges"])
    except (KeyError, TypeError, ValueError) as exc:
        raise TilingError(f"malformed basis graph document: {exc}") from exc
    b = BasisGraph(vertices, edges, str(data.get("name", "")))
    b.check()
    return b


def circuit_to_json(c: BasisCircuit) -> dict:
    doc: dict = {
        "gates": [
            {"id": g.id, "label": g.label, "qudits": [coord_list(q) for q in g.qudits], "time": g.time}
            for g in c.gates
        ]
    }
    used = {q for g in c.gates for q in g.qudits}
    idle = sorted(c.declared_qudits - used)
    if idle:
        doc["idle_qudits"] = [coord_list(q) for q in idle]
    if c.dimensions is not None:
        doc["dimensions"] = c.dimensions
    return doc


def circuit_from_json(data: dict) -> BasisCircuit:
    try:
        gates = []
        for entry in data["gates"]:
            time = entry.get("time")
            gates.append(Gate(int(entry["id"]), str(entry.get("label", "")),
                              tuple(qc(*q) for q in entry["qudits"]),
                              None if time is None else int(time)))
        idle = frozenset(qc(*q) for q in data.get("idle_qudits", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise TilingError(f"malformed basis circuit document: {exc}") from exc
    return BasisCircuit(tuple(gates), idle, data.get("dimensions"))


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=False)


def iter_cells(radius: int) -> Iterator[tuple[int, int]]:
    for x in range(-radius, radius + 1):
        for y in range(-radius, radius + 1):
            yield (x, y)
