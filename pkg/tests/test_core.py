import random
from collections import defaultdict
from itertools import product

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from tileroute import (
    BasisCircuit, Gate, PatchSpec, QuditCoord, TilingError, critical_path_depth, make_patch, reseed_graph,
    rule54_circuit, schedule, validate_basis_circuit,
)
from tileroute.circuitlib import atl_trotter_circuit, builtin_basis_graph
from tileroute.core import (
    InvalidCircuitError, edge_class, gate_dependencies, lattice_max_degree, make_patch_report, patch_has_collision,
    seed_load, translate, translate_circuit,
)

Q = QuditCoord


# ------------------------------------------------------------------ helpers


def random_circuit(rng: random.Random, *, n_gates: int | None = None, seeds: int = 3, times: int = 3,
                   one_d: bool = False, timed: bool = True, single_seed_gates: bool = False) -> BasisCircuit:
    """Random basis circuit with qudits inside the 3x3 cell window."""
    n_gates = n_gates if n_gates is not None else rng.randint(1, 5)
    gates = []
    while len(gates) < n_gates:
        def coord():
            return Q(rng.randint(-1, 1), 0 if one_d else rng.randint(-1, 1), rng.randrange(seeds))
        qs = (coord(),) if rng.random() < 0.3 else (coord(), coord())
        if len(qs) == 2 and (qs[0] == qs[1] or (single_seed_gates and qs[0].s == qs[1].s)):
            continue
        gates.append(Gate(len(gates), rng.choice("ab"), qs, rng.randrange(times) if timed else None))
    return BasisCircuit.of(gates)


def span(c: BasisCircuit) -> int:
    xs = [q.x for q in c.declared_qudits]
    ys = [q.y for q in c.declared_qudits]
    return max(max(xs) - min(xs), max(ys) - min(ys))


def brute_force_collides(c: BasisCircuit, k: int) -> bool:
    """Tile ``c`` over a k x k window and look for two tile instances on one qudit and layer."""
    seen: dict[tuple, int] = {}
    for idx, (dx, dy) in enumerate(product(range(k), range(k))):
        for g in c.gates:
            for q in g.qudits:
                key = (g.time, q.x + dx, q.y + dy, q.s)
                if key in seen:
                    return True
                seen[key] = (idx, g.id)
    return False


def scheduling_figure() -> BasisCircuit:
    """Three-seed chain circuit where naive (unwrapped) ASAP layering goes wrong."""
    return BasisCircuit.of([
        Gate(0, "u", (Q(0, 0, 0),)),
        Gate(1, "cz", (Q(0, 0, 0), Q(0, 0, 1))),
        Gate(2, "u", (Q(0, 0, 2),)),
        Gate(3, "cz", (Q(1, 0, 0), Q(0, 0, 2))),
    ])


# -------------------------------------------------------------- translation


def test_translate_identity_and_inverse():
    g = Gate(0, "u", (Q(0, 0, 0),), 1)
    assert translate(g, 0, 0, 0) == g
    assert translate(translate(g, 1, 0, 0), -1, 0, 0) == g


def test_translate_fieldwise():
    g = Gate(0, "cz", (Q(0, 0, 0), Q(1, 0, 1)), 2)
    moved = translate(g, 2, 3, 5)
    assert moved.qudits == (Q(2, 3, 0), Q(3, 3, 1)) and moved.time == 7


def test_translate_underflow():
    with pytest.raises(TilingError, match="underflow"):
        translate(Gate(0, "u", (Q(0, 0, 0),), 1), 0, 0, -2)


@given(st.integers(-5, 5), st.integers(-5, 5), st.integers(0, 4), st.integers(-5, 5), st.integers(-5, 5),
       st.integers(0, 4))
def test_translation_composes(a, b, c, d, e, f):
    g = Gate(0, "cz", (Q(0, 0, 0), Q(1, -1, 2)), 0)
    assert translate(translate(g, a, b, c), d, e, f) == translate(g, a + d, b + e, c + f)


# ------------------------------------------------------------------ patches


def test_patch_counts_multiply():
    c = BasisCircuit.of([Gate(0, "u", (Q(0, 0, 0),), 0), Gate(1, "cz", (Q(0, 0, 0), Q(0, 0, 1)), 1)])
    assert len(make_patch(c, PatchSpec(2, 3, 2)).gates) == 24
    assert make_patch(c, PatchSpec(1, 1, 1)).gates == c.gates


def test_rule54_patch_collision_free():
    c = rule54_circuit()
    patch = make_patch(c, PatchSpec(3, 1, 2))
    assert patch.depth == 2 * c.depth
    assert not patch_has_collision(patch)
    assert not brute_force_collides(c, 3)


def test_patch_rejects_invalid_input():
    bad = BasisCircuit.of([Gate(0, "u", (Q(0, 0, 0),), 0), Gate(1, "u", (Q(1, 0, 0),), 0)])
    with pytest.raises(InvalidCircuitError):
        make_patch(bad, PatchSpec(2, 1, 1))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 3), st.integers(1, 2))
def test_patch_count_minus_duplicates(seed, n, m, l):
    c = random_circuit(random.Random(seed))
    res = make_patch_report(c, PatchSpec(n, m, l), check=False)
    assert len(res.circuit.gates) + res.duplicates == n * m * l * len(c.gates)
    keys = {g.key() for g in res.circuit.gates}
    assert len(keys) == len(res.circuit.gates)


def test_patch_qudit_count_by_enumeration():
    c = rule54_circuit()
    patch = make_patch(c, PatchSpec(4, 1, 1))
    expected = {q.shifted(dx, 0) for dx in range(4) for q in c.declared_qudits}
    assert patch.declared_qudits == expected


# --------------------------------------------------------------- validation


def test_validator_small_examples():
    bad = BasisCircuit.of([Gate(0, "u", (Q(0, 0, 0),), 0), Gate(1, "u", (Q(1, 0, 0),), 0)])
    report = validate_basis_circuit(bad)
    assert not report.valid and report.violations[0][:2] == (0, 0)
    assert validate_basis_circuit(BasisCircuit.of([Gate(0, "u", (Q(0, 0, 0),), 0)])).valid


def test_validator_agrees_with_brute_force():
    rng = random.Random(7)
    for _ in range(200):
        c = random_circuit(rng, one_d=rng.random() < 0.5)
        k = span(c) + 1
        assert validate_basis_circuit(c).valid == (not brute_force_collides(c, k))


def test_validator_merged_swap_exemption():
    c = BasisCircuit.of([Gate(0, "cz", (Q(0, 0, 0), Q(1, 0, 1)), 0), Gate(1, "SWAP", (Q(1, 0, 0), Q(2, 0, 1)), 0)])
    assert not validate_basis_circuit(c).valid
    assert validate_basis_circuit(c, allow_merged_swaps=True).valid


# --------------------------------------------------------------- scheduling


def test_schedule_single_gate():
    c = schedule(BasisCircuit.of([Gate(0, "u", (Q(0, 0, 0),))]))
    assert c.gates[0].time == 0 and c.depth == 1


def test_scheduling_figure_wrapped_times():
    c = schedule(scheduling_figure())
    assert [g.time for g in c.gates] == [0, 1, 0, 2]
    assert validate_basis_circuit(c).valid
    # Layering that ignores translates puts g3 in layer 1, which collides with g1's copy.
    naive = BasisCircuit.of([Gate(g.id, g.label, g.qudits, t) for g, t in zip(c.gates, [0, 1, 0, 1])])
    assert not validate_basis_circuit(naive).valid


def test_scheduling_figure_dependency():
    deps = gate_dependencies(scheduling_figure())
    assert (1, 3) in deps
    assert gate_dependencies(BasisCircuit.of([Gate(0, "u", (Q(0, 0, 0),)), Gate(1, "u", (Q(0, 0, 1),))])) == []


def _closure(n: int, pairs) -> set:
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from(pairs)
    return set(nx.transitive_closure_dag(g).edges)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10_000))
def test_schedule_properties(seed):
    rng = random.Random(seed)
    c = random_circuit(rng, timed=False, single_seed_gates=True, n_gates=rng.randint(1, 7))
    s = schedule(c)
    assert s.depth == critical_path_depth(c)
    assert [g.time for g in schedule(s).gates] == [g.time for g in s.gates]
    assert [(g.label, g.qudits) for g in s.gates] == [(g.label, g.qudits) for g in c.gates]
    assert validate_basis_circuit(s).valid
    deps = gate_dependencies(c)
    times = {g.id: g.time for g in s.gates}
    assert all(times[i] < times[j] for i, j in deps)
    # Direct pairs generate the same order as every same-seed pair.
    all_pairs = [(g.id, h.id) for a, g in enumerate(c.gates) for h in c.gates[a + 1:]
                 if {q.s for q in g.qudits} & {q.s for q in h.qudits}]
    assert _closure(len(c.gates), deps) == _closure(len(c.gates), all_pairs)


# ------------------------------------------------------------- lower bounds


def test_lower_bound_values():
    assert critical_path_depth(BasisCircuit.of([])) == 0
    assert critical_path_depth(BasisCircuit.of([Gate(0, "u", (Q(0, 0, 0),))])) == 1
    assert critical_path_depth(atl_trotter_circuit(builtin_basis_graph("line"))) == 2
    assert critical_path_depth(atl_trotter_circuit(builtin_basis_graph("J1J2-line"))) == 4
    for name, z in {"line": 2, "J1J2-line": 4, "triangular": 6, "ladder": 3, "square": 4}.items():
        b = builtin_basis_graph(name)
        assert lattice_max_degree(b) == z
        assert seed_load(atl_trotter_circuit(b)) == z


# --------------------------------------------------------------- reseeding


def test_reseed_line():
    line = builtin_basis_graph("line")
    assert sorted(reseed_graph(line, 1, 1).edges) == sorted(line.edges)
    r = reseed_graph(line, 3, 1)
    assert r.n_seeds == 3
    assert {edge_class(a, b) for a, b in r.edges} == {
        edge_class(Q(0, 0, 0), Q(0, 0, 1)), edge_class(Q(0, 0, 1), Q(0, 0, 2)), edge_class(Q(0, 0, 2), Q(1, 0, 0))}
    with pytest.raises(ValueError):
        reseed_graph(line, 0, 1)


def test_translate_circuit_shifts_declared_qudits():
    c = BasisCircuit.of([Gate(0, "u", (Q(0, 0, 0),), 0)], idle=[Q(0, 0, 1)])
    assert translate_circuit(c, 1, 2).declared_qudits == {Q(1, 2, 0), Q(1, 2, 1)}
