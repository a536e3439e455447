"""Independent checks of routed solutions on a finite patch, and a brute-force router.

The replay never looks at solver terms.  Every check is re-derived from the
positional routing rules:

    consistency   gate copies act on the physical qudits holding their logical qudits
    connectivity  two-qudit gates and SWAPs sit on lattice edges
    gate-gate / swap-swap / gate-swap   no physical qudit is used twice in a layer
    mobility      a qudit stays within delta cells of the copy that owns it
    injectivity   the qudit map is one to one and keeps seeds together
    cyclicity     qudits return home after each temporal copy (pair, if reversed)
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

from .core import (
    BasisCircuit, BasisGraph, PatchSpec, QuditCoord, edge_class, timed_dependencies,
    validate_basis_circuit,
)
from .encoder import RoutingOptions, RoutingProblem
from .router import SWAP, RoutedSolution, assemble, emit_patch_entries, patch_logical_qudits
from .solver import RawAssignment

CHECKS = ("consistency", "connectivity", "swap-swap", "gate-gate", "gate-swap", "cyclicity", "injectivity", "mobility")


class Failure(NamedTuple):
    check: str
    time: int | None
    location: str
    detail: str


@dataclass
class VerifyReport:
    failures: list[Failure] = field(default_factory=list)
    truncated: bool = False

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, check: str, time: int | None, location, detail: str) -> None:
        if len(self.failures) >= 200:
            self.truncated = True
            return
        self.failures.append(Failure(check, time, str(location), detail))

    def failed_checks(self) -> set[str]:
        return {f.check for f in self.failures}

    def to_json(self) -> dict:
        return {"pass": self.passed, "truncated": self.truncated,
                "failures": [f._asdict() for f in self.failures]}

    def summary(self) -> str:
        if self.passed:
            return "pass"
        lines = [f"{f.check} at t={f.time} {f.location}: {f.detail}" for f in self.failures[:20]]
        return "\n".join(["FAIL"] + lines)


def _check_basis(report: VerifyReport, logical: BasisCircuit, sol: RoutedSolution, options: RoutingOptions) -> None:
    """The basis solution itself: tileable, one placement per logical gate, agreeing with its maps."""
    phys = sol.physical
    if phys.gates:
        check = validate_basis_circuit(phys, allow_merged_swaps=options.merge_swaps)
        for t, seed, ids in check.violations[:5]:
            swaps = sum(phys.gate(i).label == SWAP for i in ids)
            kind = "swap-swap" if swaps == len(ids) else "gate-swap" if swaps else "gate-gate"
            report.fail(kind, t, f"seed {seed}", f"physical circuit is not tileable: gates {ids}")
        if phys.depth > sol.depth:
            report.fail("consistency", None, "basis", f"physical depth {phys.depth} exceeds reported {sol.depth}")
    if len(sol.maps) != sol.depth + 1:
        report.fail("consistency", None, "basis", f"expected {sol.depth + 1} qudit maps, found {len(sol.maps)}")
        return
    placed = {g.id: g for g in phys.gates if g.label != SWAP}
    if set(placed) != {g.id for g in logical.gates}:
        report.fail("consistency", None, "basis", "physical gates do not match the logical gates one to one")
        return
    for g in logical.gates:
        p = placed[g.id]
        if p.label != g.label or p.time is None or not 0 <= p.time < sol.depth:
            report.fail("consistency", p.time, f"gate {g.id}", "wrong label or time")
            continue
        expect = tuple(sol.maps[p.time].get(q) for q in g.qudits)
        if expect != p.qudits:
            report.fail("consistency", p.time, f"gate {g.id}", f"acts on {p.qudits}, the map holds {expect}")


def _start_positions(report, sol, homes) -> dict[QuditCoord, QuditCoord] | None:
    by_seed: dict[int, tuple[QuditCoord, QuditCoord]] = {}
    for q, v in sol.initial_map.items():
        by_seed.setdefault(q.s, (q, v))
    where = {}
    for q in homes:
        if q.s not in by_seed:
            report.fail("injectivity", 0, q, f"no image for seed {q.s}")
            return None
        rep, v = by_seed[q.s]
        where[q] = v.shifted(q.x - rep.x, q.y - rep.y)
    return where


def _check_map(report: VerifyReport, where: dict, t: int) -> None:
    if len(set(where.values())) != len(where):
        report.fail("injectivity", t, "patch", "two logical qudits share a physical qudit")
    seeds: dict[int, set[int]] = {}
    for q, v in where.items():
        seeds.setdefault(q.s, set()).add(v.s)
    for s, images in seeds.items():
        if len(images) > 1:
            report.fail("injectivity", t, f"seed {s}", f"copies spread over physical seeds {sorted(images)}")


def verify(logical: BasisCircuit, sol: RoutedSolution, hardware: BasisGraph, options: RoutingOptions,
           window: PatchSpec = PatchSpec(3, 3, 2)) -> VerifyReport:
    """Replay the solution's patch layer by layer and check every routing rule."""
    report = VerifyReport()
    _check_basis(report, logical, sol, options)
    if not report.passed or not logical.gates and not sol.physical.gates:
        return report
    depth = sol.depth
    lattice_classes = set(hardware.edge_classes())
    delta = options.delta

    homes = patch_logical_qudits(sol, window)
    where = _start_positions(report, sol, homes)
    if where is None:
        return report
    _check_map(report, where, 0)
    start = dict(where)
    occupant = {v: q for q, v in where.items()}

    entries = emit_patch_entries(sol, window)
    layers: dict[int, list] = {}
    for e in entries:
        layers.setdefault(e.gate.time, []).append(e)
    logical_by_id = {g.id: g for g in logical.gates}
    seen: dict[tuple, int] = {}
    history: dict[tuple[QuditCoord, int], list[int]] = {}

    def mobility(t: int) -> None:
        for q, v in where.items():
            for dx, dy in homes[q]:
                if abs(v.x - dx) > delta or abs(v.y - dy) > delta:
                    report.fail("mobility", t, q, f"at {v}, outside the zone of copy {(dx, dy)}")
                    return

    mobility(0)
    for t in range(depth * window.l):
        k, local = divmod(t, depth)
        gate_use: dict[QuditCoord, frozenset] = {}
        swap_use: dict[QuditCoord, frozenset] = {}
        for e in layers.get(t, []):
            g = e.gate
            if g.arity == 2 and edge_class(*g.qudits) not in lattice_classes:
                report.fail("connectivity", t, g.qudits, f"{g.label} is not on a lattice edge")
            use = swap_use if g.label == SWAP else gate_use
            for v in g.qudits:
                if v in use:
                    report.fail("swap-swap" if g.label == SWAP else "gate-gate", t, v, "qudit used twice")
                use[v] = frozenset(g.qudits)
            if g.label == SWAP:
                a, b = g.qudits
                qa, qb = occupant.pop(a, None), occupant.pop(b, None)
                if qa is not None:
                    occupant[b] = qa
                    where[qa] = b
                if qb is not None:
                    occupant[a] = qb
                    where[qb] = a
                continue
            gid, dx, dy, copy = e.origin
            seen[(gid, dx, dy, copy)] = seen.get((gid, dx, dy, copy), 0) + 1
            src = logical_by_id.get(gid)
            if src is None or copy != k:
                report.fail("consistency", t, g.qudits, "patch gate without a logical origin in this copy")
                continue
            if src.label != g.label:
                report.fail("consistency", t, g.qudits, f"label {g.label} differs from logical {src.label}")
            for lq, v in zip(src.qudits, g.qudits):
                want = lq.shifted(dx, dy)
                if occupant.get(v) != want:
                    report.fail("consistency", t, v, f"gate {gid} copy {(dx, dy)} finds {occupant.get(v)}, "
                                                     f"expected {want}")
                history.setdefault((want, k), []).append(gid)
        for v, sites in gate_use.items():
            other = swap_use.get(v)
            if other is not None and not (options.merge_swaps and other == sites):
                report.fail("gate-swap", t, v, "gate and SWAP share a qudit")
        _check_map(report, where, t + 1)
        mobility(t + 1)
        if local == depth - 1:
            if (options.cyclic or k % 2 == 1) and where != start:
                report.fail("cyclicity", t + 1, f"copy {k}", "qudits are not back at their initial positions")
            if k == 0 and where != _translated_final(sol, homes):
                report.fail("consistency", t + 1, "copy 0", "replay disagrees with the reported final map")
    for g in logical.gates:
        for dx in range(window.n):
            for dy in range(window.m):
                for k in range(window.l):
                    n = seen.get((g.id, dx, dy, k), 0)
                    if n != 1:
                        report.fail("consistency", None, f"gate {g.id} copy {(dx, dy, k)}", f"appears {n} times")
    if options.gate_dependencies:
        # untimed gates are unordered; timed ones keep their layer order per qudit
        order = {g.id: (g.time, i) for i, g in enumerate(logical.gates) if g.time is not None}
        for (q, k), ids in history.items():
            ranks = [order[i] for i in ids if i in order]
            if ranks != sorted(ranks, reverse=not options.cyclic and k % 2 == 1):
                report.fail("consistency", None, q, f"gates run out of dependency order in copy {k}")
    return report


def _translated_final(sol: RoutedSolution, homes) -> dict[QuditCoord, QuditCoord]:
    out = {}
    for q, offsets in homes.items():
        dx, dy = offsets[0]
        out[q] = sol.final_map[q.shifted(-dx, -dy)].shifted(dx, dy)
    return out


# ---------------------------------------------------------------- brute force


class BruteForceLimit(ValueError):
    pass


def _swap_layers(classes) -> list[frozenset[int]]:
    usable = [k for k, (a, b) in enumerate(classes) if a.s != b.s]
    layers = []
    for r in range(len(usable) + 1):
        for combo in itertools.combinations(usable, r):
            seeds = [s for k in combo for s in (classes[k][0].s, classes[k][1].s)]
            if len(seeds) == len(set(seeds)):
                layers.append(frozenset(combo))
    return layers


def _step(positions: dict, active: frozenset[int], classes) -> dict:
    out = {}
    for q, v in positions.items():
        out[q] = v
        for k in active:
            a, b = classes[k]
            for src, dst in ((a, b), (b, a)):
                if v.s == src.s:
                    out[q] = dst.shifted(v.x - src.x, v.y - src.y)
    return out


def _zone(hardware: BasisGraph, logical: BasisCircuit, delta: int):
    flat = all(a.y == 0 and b.y == 0 for a, b in hardware.edges) and all(q.y == 0 for q in logical.declared_qudits)
    ys = [0] if flat else range(-delta, delta + 1)
    cells = {(x, y) for x in range(-delta, delta + 1) for y in ys}
    sites = []
    for dx in range(-delta - 1, delta + 2):
        for dy in ([0] if flat else range(-delta - 1, delta + 2)):
            for k, (a, b) in enumerate(hardware.edges):
                ta, tb = a.shifted(dx, dy), b.shifted(dx, dy)
                if ta.cell in cells or tb.cell in cells:
                    sites.append((k, ta, tb))
    return cells, sites


def brute_force_route(p: RoutingProblem, max_depth: int = 6,
                      window: PatchSpec = PatchSpec(3, 3, 2)) -> tuple[int, RoutedSolution] | None:
    """Exhaustive minimal-depth routing for tiny instances.

    Enumerates seed placements, SWAP subsets per layer and gate times.
    Candidates at the first feasible depth are ranked by (naked, total) SWAPs
    and the first one passing ``verify`` is returned with its depth.
    """
    logical, hardware, options = p.logical, p.hardware, p.options
    sizes = (len(logical.declared_qudits), len(logical.gates), len(hardware.edges))
    if sizes[0] > 3 or sizes[1] > 3 or sizes[2] > 6:
        raise BruteForceLimit(f"instance too large for brute force: {sizes[0]} qudits, {sizes[1]} gates, "
                              f"{sizes[2]} SWAP classes (limits 3, 3, 6)")
    if options.slice_depth or p.fixed_initial_map is not None or p.final_map_target is not None:
        raise BruteForceLimit("brute force handles plain problems only")
    p.check()
    classes = list(hardware.edges)
    zone, sites = _zone(hardware, logical, options.delta)
    lattice = set(hardware.edge_classes())
    layer_choices = _swap_layers(classes)
    seeds = logical.seeds
    qudits = sorted(logical.declared_qudits)
    gates = list(logical.gates)
    deps = timed_dependencies(logical) if options.gate_dependencies else []

    def placements(t, g, maps, active):
        where = tuple(maps[t][q] for q in g.qudits)
        if g.arity == 2 and edge_class(*where) not in lattice:
            return None
        hit = {v.s for v in where}
        for k in (active[t] if t < len(active) else ()):
            a, b = classes[k]
            if {a.s, b.s} & hit:
                if options.merge_swaps and g.arity == 2 and edge_class(*where) == edge_class(a, b):
                    continue
                return None
        return where

    for depth in range(1, max_depth + 1):
        horizon = p.horizon(depth)
        candidates = []
        for image in itertools.permutations(range(hardware.n_seeds), len(seeds)):
            sigma = dict(zip(seeds, image))
            start = {q: QuditCoord(q.x, q.y, sigma[q.s]) for q in qudits}
            for active in itertools.product(layer_choices, repeat=horizon):
                maps = [start]
                for layer in active:
                    nxt = _step(maps[-1], layer, classes)
                    if any(v.cell not in zone for v in nxt.values()) or len(set(nxt.values())) != len(nxt):
                        break
                    maps.append(nxt)
                else:
                    if options.cyclic and maps[-1] != maps[0]:
                        continue
                    found = _assign_times(gates, deps, depth, maps, active, placements, classes)
                    if found is not None:
                        times, coords, merged = found
                        total = sum(len(layer) for layer in active)
                        candidates.append(((total - len(merged), total), times, coords, active, maps))
        candidates.sort(key=lambda c: c[0])
        for score, times, coords, active, maps in candidates:
            act = {(t, k) for t, layer in enumerate(active) for k in layer}
            copies = [(t, a, b) for t in range(len(active)) for k, a, b in sites if (t, k) in act]
            raw = RawAssignment(depth, len(active), times, coords, act, copies, maps, list(score))
            sol = assemble(p, raw, lower_bound=p.lower_bound)
            if verify(logical, sol, hardware, options, window).passed:
                return depth, sol
    return None


def _assign_times(gates, deps, depth, maps, active, placements, classes):
    """Cheapest gate timing for a fixed SWAP schedule: (times, coords, merged SWAP keys)."""
    index = {g.id: i for i, g in enumerate(gates)}
    dep_pairs = [(index[a], index[b]) for a, b in deps]
    best = None
    for times in itertools.product(range(depth), repeat=len(gates)):
        if any(times[a] >= times[b] for a, b in dep_pairs):
            continue
        coords = {}
        used: dict[int, set[int]] = {}
        for g, t in zip(gates, times):
            sites = placements(t, g, maps, active)
            if sites is None:
                break
            seeds = {v.s for v in sites}
            if used.setdefault(t, set()) & seeds:
                break
            used[t] |= seeds
            coords[g.id] = sites
        else:
            shapes = {(t, edge_class(*coords[g.id])) for g, t in zip(gates, times) if g.arity == 2}
            merged = {(t, k) for t, layer in enumerate(active) for k in layer
                      if (t, edge_class(*classes[k])) in shapes}
            naked = sum(len(layer) for layer in active) - len(merged)
            if best is None or naked < best[0]:
                best = (naked, {g.id: t for g, t in zip(gates, times)}, coords, merged)
    return None if best is None else best[1:]
