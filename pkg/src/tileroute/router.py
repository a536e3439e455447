"""End-to-end routing: solve, keep one SWAP per translation class, emit patches."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from . import _kernels
from .core import (
    BasisCircuit, BasisGraph, Gate, PatchSpec, QuditCoord, TilingError, circuit_from_json,
    circuit_to_json, coord_list, edge_class, graph_from_json, graph_to_json, qc, schedule,
    validate_basis_circuit,
)
from .encoder import RoutingOptions, RoutingProblem
from .solver import RawAssignment, SolverSession, extract, route_min_depth

SWAP = "SWAP"


class VerificationError(RuntimeError):
    def __init__(self, report):
        self.report = report
        super().__init__(f"routed solution failed verification: {report.failures[:3]}")


@dataclass
class RoutingStats:
    depth: int
    lower_bound: int
    naked_swaps: int
    total_swaps: int
    qudit_overhead: int
    seconds: float = 0.0
    solver_queries: int = 0
    optimal: bool = True

    @property
    def depth_overhead(self) -> int:
        return self.depth - self.lower_bound

    @property
    def overhead_percent(self) -> float:
        return 100.0 * self.depth_overhead / self.lower_bound if self.lower_bound else 0.0

    def to_json(self) -> dict:
        doc = dict(self.__dict__)
        doc["depth_overhead"] = self.depth_overhead
        doc["overhead_percent"] = round(self.overhead_percent, 3)
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "RoutingStats":
        return cls(**{k: doc[k] for k in cls.__dataclass_fields__ if k in doc})


@dataclass
class RoutedSolution:
    logical: BasisCircuit
    hardware: BasisGraph
    options: RoutingOptions
    physical: BasisCircuit
    maps: list[dict[QuditCoord, QuditCoord]]
    swap_copies: list[tuple[int, QuditCoord, QuditCoord]]
    stats: RoutingStats = field(default=None)

    @property
    def depth(self) -> int:
        return self.stats.depth

    @property
    def initial_map(self) -> dict[QuditCoord, QuditCoord]:
        return self.maps[0]

    @property
    def final_map(self) -> dict[QuditCoord, QuditCoord]:
        return self.maps[-1]

    def to_json(self) -> dict:
        def dump_map(mp):
            return [[coord_list(k), coord_list(v)] for k, v in sorted(mp.items())]
        return {
            "format": "tileroute-solution/1",
            "stats": self.stats.to_json(),
            "options": self.options.to_json(),
            "physical": circuit_to_json(self.physical),
            "initial_map": dump_map(self.initial_map),
            "final_map": dump_map(self.final_map),
            "maps": [dump_map(mp) for mp in self.maps],
            "swap_copies": [[t, coord_list(a), coord_list(b)] for t, a, b in self.swap_copies],
            "logical": circuit_to_json(self.logical),
            "hardware": graph_to_json(self.hardware),
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "RoutedSolution":
        def load_map(rows):
            return {qc(*k): qc(*v) for k, v in rows}
        return cls(
            logical=circuit_from_json(doc["logical"]),
            hardware=graph_from_json(doc["hardware"]),
            options=RoutingOptions.from_json(doc["options"]),
            physical=circuit_from_json(doc["physical"]),
            maps=[load_map(rows) for rows in doc["maps"]],
            swap_copies=[(int(t), qc(*a), qc(*b)) for t, a, b in doc["swap_copies"]],
            stats=RoutingStats.from_json(doc["stats"]),
        )


# ------------------------------------------------------------ postprocessing


def select_swap_representatives(raw: RawAssignment, p: RoutingProblem) -> BasisCircuit:
    """Logical gates at their physical places plus one SWAP per active (time, class)."""
    gates = [Gate(g.id, g.label, raw.gate_coords[g.id], raw.gate_times[g.id]) for g in p.logical.gates]
    next_id = max((g.id for g in gates), default=-1) + 1
    by_class = {edge_class(a, b): (a, b) for a, b in p.hardware.edges}
    classes = list(p.hardware.edges)
    for t, k in sorted(raw.active_classes):
        a, b = classes[k]
        if by_class.get(edge_class(a, b)) != (a, b):
            raise TilingError("SWAP class without a basis-graph representative")
        gates.append(Gate(next_id, SWAP, (a, b), t))
        next_id += 1
    return BasisCircuit(tuple(gates), frozenset())


def swap_merged(physical: BasisCircuit) -> dict[int, bool]:
    """For each SWAP gate id: does a two-qudit gate on a translate of its edge share its layer."""
    shapes = {(g.time, edge_class(*g.qudits)) for g in physical.gates if g.label != SWAP and g.arity == 2}
    return {g.id: (g.time, edge_class(*g.qudits)) in shapes for g in physical.gates if g.label == SWAP}


def replay_maps(physical: BasisCircuit, initial: Mapping[QuditCoord, QuditCoord], depth: int
                ) -> list[dict[QuditCoord, QuditCoord]]:
    """Positions of the tracked logical qudits before each layer and after the last."""
    swaps: dict[int, list[tuple[QuditCoord, QuditCoord]]] = {}
    for g in physical.gates:
        if g.label == SWAP:
            swaps.setdefault(g.time, []).append(g.qudits)
    current = dict(initial)
    maps = [dict(current)]
    for t in range(depth):
        for a, b in swaps.get(t, []):
            for q, v in current.items():
                for src, dst in ((a, b), (b, a)):
                    if v.s == src.s:
                        dx, dy = v.x - src.x, v.y - src.y
                        current[q] = dst.shifted(dx, dy)
        maps.append(dict(current))
    return maps


def _qudit_overhead(p: RoutingProblem) -> int:
    return p.hardware.n_seeds - len(p.logical.seeds)


def assemble(p: RoutingProblem, raw: RawAssignment, *, seconds: float = 0.0, queries: int = 0,
             optimal: bool = True, lower_bound: int | None = None) -> RoutedSolution:
    physical = select_swap_representatives(raw, p)
    maps = replay_maps(physical, raw.maps[0], raw.depth)
    for t, decoded in enumerate(raw.maps):
        if maps[t] != decoded:
            raise TilingError(f"decoded qudit map disagrees with SWAP replay at time {t}")
    merged = swap_merged(physical)
    stats = RoutingStats(
        depth=raw.depth,
        lower_bound=p.lower_bound if lower_bound is None else lower_bound,
        naked_swaps=sum(1 for v in merged.values() if not v),
        total_swaps=len(merged),
        qudit_overhead=_qudit_overhead(p),
        seconds=seconds, solver_queries=queries, optimal=optimal,
    )
    return RoutedSolution(p.logical, p.hardware, p.options, physical, maps, list(raw.swap_copies), stats)


# -------------------------------------------------------------------- routing


def route(p: RoutingProblem, s: SolverSession | None = None, *, window: PatchSpec = PatchSpec(3, 3, 2),
          log: Callable[[str], None] | None = None, verify_result: bool = True) -> RoutedSolution:
    """Route ``p`` at minimal depth; the result is verified before it is returned."""
    from .verifier import verify

    s = s or SolverSession(timeout=p.options.solver_timeout)
    start, q0 = time.perf_counter(), s.queries
    if p.options.slice_depth:
        sol = _route_sliced(p, s, log)
    else:
        model, depth = route_min_depth(p, s, log=log)
        sol = assemble(p, extract(model, model.formula), optimal=model.optimal)
    sol.stats.seconds = time.perf_counter() - start
    sol.stats.solver_queries = s.queries - q0
    if verify_result:
        report = verify(p.logical, sol, p.hardware, p.options, window)
        if not report.passed:
            raise VerificationError(report)
    return sol


def _reschedule_physical(physical: BasisCircuit) -> BasisCircuit:
    """ASAP over seeds, keeping each merged SWAP in the layer of its gate."""
    order = sorted(physical.gates, key=lambda g: (g.time, g.label == SWAP, g.id))
    shapes: dict[tuple, int] = {}
    units: list[list[Gate]] = []
    for g in order:
        if g.label == SWAP and (g.time, edge_class(*g.qudits)) in shapes:
            units[shapes[(g.time, edge_class(*g.qudits))]].append(g)
            continue
        if g.label != SWAP and g.arity == 2:
            shapes.setdefault((g.time, edge_class(*g.qudits)), len(units))
        units.append([g])
    ready: dict[int, int] = {}
    out = []
    for unit in units:
        seeds = {q.s for g in unit for q in g.qudits}
        t = max((ready.get(s, 0) for s in seeds), default=0)
        for s in seeds:
            ready[s] = t + 1
        out.extend(replace(g, time=t) for g in unit)
    out.sort(key=lambda g: g.id)
    return BasisCircuit(tuple(out), frozenset())


def _route_sliced(p: RoutingProblem, s: SolverSession, log) -> RoutedSolution:
    opts = p.options
    timed = schedule(p.logical)
    width = opts.slice_depth
    n_slices = -(-timed.depth // width) if timed.gates else 1
    inner = replace(opts, slice_depth=None, cyclic=False)
    first_map = None
    current = None
    pieces: list[BasisCircuit] = []
    offset = 0
    copies = []
    for k in range(n_slices):
        gates = tuple(replace(g, time=g.time - k * width) for g in timed.gates
                      if k * width <= g.time < (k + 1) * width)
        part = BasisCircuit(gates, p.logical.declared_qudits)
        last = k == n_slices - 1
        sub = RoutingProblem(part, p.hardware, inner, fixed_initial_map=current,
                             final_map_target=first_map if (last and opts.cyclic) else None,
                             carry_over=not last or opts.cyclic)
        if log:
            log(f"slice {k + 1}/{n_slices}")
        model, depth = route_min_depth(sub, s, log=log)
        raw = extract(model, model.formula)
        piece = select_swap_representatives(raw, sub)
        if first_map is None:
            first_map = raw.maps[0]
        current = raw.maps[-1]
        pieces.append(BasisCircuit(tuple(replace(g, time=g.time + offset) for g in piece.gates), frozenset()))
        copies += [(t + offset, a, b) for t, a, b in raw.swap_copies]
        offset += depth
    gates, next_id = [], max((g.id for g in p.logical.gates), default=-1) + 1
    for piece in pieces:
        for g in piece.gates:
            if g.label == SWAP:
                g = replace(g, id=next_id)
                next_id += 1
            gates.append(g)
    stitched = _reschedule_physical(BasisCircuit(tuple(gates), frozenset()))
    depth = stitched.depth
    maps = replay_maps(stitched, first_map, depth)
    merged = swap_merged(stitched)
    copies = _expand_copies(stitched, p)
    stats = RoutingStats(depth, p.lower_bound, sum(1 for v in merged.values() if not v), len(merged),
                         _qudit_overhead(p))
    return RoutedSolution(p.logical, p.hardware, p.options, stitched, maps, copies, stats)


def _expand_copies(physical: BasisCircuit, p: RoutingProblem) -> list[tuple[int, QuditCoord, QuditCoord]]:
    from .encoder import build_geometry

    geo = build_geometry(p)
    out = []
    for g in physical.gates:
        if g.label != SWAP:
            continue
        key = edge_class(*g.qudits)
        out += [(g.time, a, b) for k, a, b in geo.swap_sites if edge_class(a, b) == key]
    return out


# ------------------------------------------------------------ patch emission


@dataclass
class PatchEntry:
    gate: Gate
    origin: tuple[int | None, int, int, int]   # (logical gate id or None, dx, dy, temporal copy)
    order: int                                 # position within its layer


def _copy_time(t: int, k: int, depth: int, reverse: bool) -> int:
    return k * depth + (depth - 1 - t if reverse else t)


def _reversed_copy(sol: RoutedSolution, k: int) -> bool:
    return not sol.options.cyclic and k % 2 == 1


def _initial_positions(sol: RoutedSolution, qudits) -> dict[QuditCoord, QuditCoord]:
    by_seed = {}
    for q, v in sol.initial_map.items():
        by_seed.setdefault(q.s, (q, v))
    out = {}
    for q in qudits:
        rep, v = by_seed[q.s]
        out[q] = v.shifted(q.x - rep.x, q.y - rep.y)
    return out


def patch_logical_qudits(sol: RoutedSolution, p: PatchSpec) -> dict[QuditCoord, list[tuple[int, int]]]:
    """Logical qudits of the patch, each with the copy offsets that contain it."""
    out: dict[QuditCoord, list[tuple[int, int]]] = {}
    for i in range(p.n):
        for j in range(p.m):
            for q in sol.logical.declared_qudits:
                out.setdefault(q.shifted(i, j), []).append((i, j))
    return out


def emit_patch_entries(sol: RoutedSolution, p: PatchSpec) -> list[PatchEntry]:
    depth = sol.depth
    flat = all(a.y == 0 and b.y == 0 for a, b in sol.hardware.edges)
    ring = 2 * sol.options.delta
    entries: list[PatchEntry] = []
    swaps = [g for g in sol.physical.gates if g.label == SWAP]
    ops = [g for g in sol.physical.gates if g.label != SWAP]
    interior = {(i, j) for i in range(p.n) for j in range(p.m)}
    ys = range(0, p.m) if flat else range(-ring, p.m + ring)
    outer = [(i, j) for i in range(-ring, p.n + ring) for j in ys]
    for k in range(p.l):
        rev = _reversed_copy(sol, k)
        gate_rank, swap_rank = (1, 0) if rev else (0, 1)
        for dx, dy in sorted(interior):
            for g in ops:
                t = _copy_time(g.time, k, depth, rev)
                moved = Gate(0, g.label, tuple(q.shifted(dx, dy) for q in g.qudits), t)
                entries.append(PatchEntry(moved, (g.id, dx, dy, k), gate_rank))
        for dx, dy in outer:
            for g in swaps:
                t = _copy_time(g.time, k, depth, rev)
                moved = Gate(0, SWAP, tuple(q.shifted(dx, dy) for q in g.qudits), t)
                entries.append(PatchEntry(moved, (None, dx, dy, k), swap_rank))
    entries.sort(key=lambda e: (e.gate.time, e.order))
    # keep interior SWAPs; keep boundary SWAPs only where they move logical state
    occupied = {v: q for q, v in _initial_positions(sol, patch_logical_qudits(sol, p)).items()}
    kept = []
    for e in entries:
        if e.gate.label != SWAP:
            kept.append(e)
            continue
        a, b = e.gate.qudits
        inside = (e.origin[1], e.origin[2]) in interior
        if inside or a in occupied or b in occupied:
            kept.append(e)
            qa, qb = occupied.pop(a, None), occupied.pop(b, None)
            if qa is not None:
                occupied[b] = qa
            if qb is not None:
                occupied[a] = qb
    return kept


def get_patch(sol: RoutedSolution, p: PatchSpec) -> BasisCircuit:
    """Patch of the routed solution with boundary SWAPs repaired.

    Temporal copies of a non-cyclic solution alternate with the time-reversed
    step, so that repetition returns every qudit home.
    """
    entries = emit_patch_entries(sol, p)
    gates = tuple(replace(e.gate, id=i) for i, e in enumerate(entries))
    return BasisCircuit(gates, frozenset())


def get_patch_fast(sol: RoutedSolution, p: PatchSpec) -> BasisCircuit:
    """Tile gates and every in-zone SWAP copy, then drop duplicate SWAPs."""
    depth = sol.depth
    ops = [g for g in sol.physical.gates if g.label != SWAP]
    swaps = [Gate(0, SWAP, (a, b), t) for t, a, b in sol.swap_copies]
    base = ops + swaps
    if not base:
        return BasisCircuit((), frozenset())
    rows, labels = _kernels.gates_to_rows(base)
    is_swap = np.array([g.label == SWAP for g in base])
    offsets = [(i, j, 0) for i in range(p.n) for j in range(p.m)]
    blocks, ranks = [], []
    for k in range(p.l):
        rev = _reversed_copy(sol, k)
        tiled = _kernels.tile_rows(rows, _kernels.as_offsets(offsets))
        t = tiled[:, 6]
        tiled[:, 6] = k * depth + (depth - 1 - t if rev else t)
        blocks.append(tiled)
        swap_rank = 0 if rev else 1
        ranks.append(np.where(np.tile(is_swap, len(offsets)), swap_rank, 1 - swap_rank))
    allrows = np.concatenate(blocks)
    rank = np.concatenate(ranks)
    keep = _kernels.first_occurrence(_kernels.gate_identity_keys(allrows))
    allrows, rank = allrows[keep], rank[keep]
    order = np.lexsort((rank, allrows[:, 6]))
    gates = []
    for i, r in enumerate(allrows[order].tolist()):
        qs = (QuditCoord(r[0], r[1], r[2]),) + ((QuditCoord(r[3], r[4], r[5]),) if r[7] == 2 else ())
        gates.append(Gate(i, labels[r[8]], qs, r[6]))
    return BasisCircuit(tuple(gates), frozenset())


def active_part(patch: BasisCircuit, sol: RoutedSolution, p: PatchSpec) -> set[tuple]:
    """Canonical gate set restricted to SWAPs that move logical state."""
    occupied = {v: q for q, v in _initial_positions(sol, patch_logical_qudits(sol, p)).items()}
    out = set()
    layers: dict[int, list[Gate]] = {}
    for g in patch.gates:
        layers.setdefault(g.time, []).append(g)
    for t in sorted(layers):
        for g in layers[t]:
            if g.label != SWAP:
                out.add(g.key())
                continue
            a, b = g.qudits
            if a in occupied or b in occupied:
                out.add(g.key())
                qa, qb = occupied.pop(a, None), occupied.pop(b, None)
                if qa is not None:
                    occupied[b] = qa
                if qb is not None:
                    occupied[a] = qb
    return out


def physical_is_tileable(sol: RoutedSolution) -> bool:
    return validate_basis_circuit(sol.physical, allow_merged_swaps=sol.options.merge_swaps).valid
