"""Perturbations of routed solutions that must be caught by the verifier."""

import random
from dataclasses import replace

from tileroute import BasisCircuit, RoutedSolution
from tileroute.core import edge_class
from tileroute.router import SWAP

KINDS = ("swap-time", "gate-time", "gate-edge", "swap-edge")


def _with_gate(sol: RoutedSolution, idx: int, gate) -> RoutedSolution:
    gates = list(sol.physical.gates)
    gates[idx] = gate
    return replace(sol, physical=BasisCircuit(tuple(gates), sol.physical.declared_qudits))


def mutate(sol: RoutedSolution, kind: str, rng: random.Random) -> RoutedSolution | None:
    """One random perturbation of ``kind``; None when the solution offers no target."""
    gates = list(sol.physical.gates)
    swaps = [i for i, g in enumerate(gates) if g.label == SWAP]
    ops = [i for i, g in enumerate(gates) if g.label != SWAP]
    if kind in ("swap-time", "gate-time"):
        pool = swaps if kind == "swap-time" else ops
        if not pool:
            return None
        i = rng.choice(pool)
        g = gates[i]
        shift = rng.choice([s for s in (-1, 1) if g.time + s >= 0])
        return _with_gate(sol, i, replace(g, time=g.time + shift))
    if kind == "gate-edge":
        pool = [i for i in ops if gates[i].arity == 2]
        if not pool:
            return None
        i = rng.choice(pool)
        g = gates[i]
        slot = rng.randrange(2)
        other = g.qudits[1 - slot]
        # any other zone vertex that is not merely a whole-cell translate of the original
        zone = [v.shifted(dx, dy) for v in sol.hardware.vertices for dx in (-1, 0, 1) for dy in (-1, 0, 1)]
        moved = g.qudits[slot]
        choices = [v for v in zone if v != other and v.s != moved.s]
        new = list(g.qudits)
        new[slot] = rng.choice(choices)
        return _with_gate(sol, i, replace(g, qudits=tuple(new)))
    if kind == "swap-edge":
        if not swaps:
            return None
        i = rng.choice(swaps)
        g = gates[i]
        others = [e for e in sol.hardware.edges if edge_class(*e) != edge_class(*g.qudits)]
        if not others:
            return None
        return _with_gate(sol, i, replace(g, qudits=rng.choice(others)))
    raise ValueError(kind)


def encoder_admits(p, sol: RoutedSolution, session) -> bool:
    """Independent judge for mutants the verifier accepted.

    Pins gate times and endpoints, SWAP classes per layer and the initial map in the routing
    formula. SAT means the mutant is a valid routing (an equivalent mutant).
    """
    from tileroute.encoder import build_formula
    from tileroute.solver import Status, _query

    f = build_formula(replace(p, options=replace(p.options, slice_depth=None)), sol.depth)
    if any(g.time >= sol.depth or g.time < 0 for g in sol.physical.gates):
        return False
    pins = []
    for g in sol.physical.gates:
        if g.label != SWAP:
            pins.append(f"(= {f.gt(g.id)} {g.time})")
            for slot, v in enumerate(g.qudits):
                x, y, s = f.gq(g.id, slot)
                pins += [f"(= {x} {v.x})", f"(= {y} {v.y})", f"(= {s} {v.s})"]
    on = set()
    for g in sol.physical.gates:
        if g.label == SWAP:
            k = f.geometry.class_of.get(edge_class(*g.qudits))
            if k is None or ("swap", g.time, k) not in f.intern:
                return False
            on.add((g.time, k))
    for t in range(f.horizon):
        for k in range(len(f.geometry.classes)):
            if ("swap", t, k) in f.intern:
                var = f.sw(t, k)
                pins.append(var if (t, k) in on else f"(not {var})")
    for i, q in enumerate(f.qudits):
        v = sol.initial_map[q]
        pins += [f"(= {f.qx(0, i)} {v.x})", f"(= {f.qy(0, i)} {v.y})", f"(= {f.qs(0, i)} {v.s})"]
    return _query(f, session, objectives=False, extra=tuple(pins)).status is Status.SAT
