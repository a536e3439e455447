import pytest

from tileroute import (
    BasisCircuit, Gate, QuditCoord, RoutingOptions, RoutingProblem, SolverSession, build_formula, reseed_graph,
    verify,
)
from tileroute.circuitlib import atl_trotter_circuit, builtin_basis_graph
from tileroute.encoder import build_geometry, time_windows
from tileroute.router import assemble
from tileroute.solver import Status, _query, extract, solve

from conftest import needs_solver

Q = QuditCoord
LINE = builtin_basis_graph("line")
LINE3 = reseed_graph(LINE, 3, 1)


def one_qudit(opts=RoutingOptions(), hw=LINE) -> RoutingProblem:
    return RoutingProblem(BasisCircuit.of([Gate(0, "u", (Q(0, 0, 0),))]), hw, opts)


def test_variable_counts_small():
    f = build_formula(one_qudit(), 2)
    assert f.horizon == 1
    assert [v for v in f.variables if v.startswith("qx_")] == ["qx_0_0", "qx_1_0"]
    # one translation class of chain edges meets the zone
    assert len([v for v in f.variables if v.startswith("sw_")]) == 1 * f.horizon


def test_equal_seeds_share_initial_seed_variable():
    c = BasisCircuit.of([Gate(0, "u", (Q(0, 0, 0),)), Gate(1, "u", (Q(1, 0, 0),))])
    f = build_formula(RoutingProblem(c, reseed_graph(LINE, 2, 1)), 2)
    assert f.qs(0, 0) == f.qs(0, 1)
    assert f.qs(1, 0) != f.qs(1, 1)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_injectivity_count(k):
    c = BasisCircuit.of([Gate(i, "u", (Q(0, 0, i),)) for i in range(k)])
    p = RoutingProblem(c, reseed_graph(LINE, 4, 1))
    f = build_formula(p, 3)
    assert f.audit().get("injectivity", 0) == k * (k - 1) // 2 * (f.horizon + 1)


def test_fixed_initial_map_assertion():
    p = RoutingProblem(one_qudit().logical, LINE3, fixed_initial_map={Q(0, 0, 0): Q(0, 0, 1)})
    f = build_formula(p, 1)
    assert ("mapping", "(and (= qx_0_0 0) (= qy_0_0 0) (= s0_0 1))") in f.assertions


def test_connectivity_families():
    assert "connectivity" not in build_formula(one_qudit(), 1).audit()
    assert build_formula(one_qudit(), 1).audit()["consistency"] == 1
    assert sorted(build_geometry(one_qudit()).allowed) == [(Q(-1, 0, 0), Q(0, 0, 0)), (Q(0, 0, 0), Q(1, 0, 0))]
    p = RoutingProblem(atl_trotter_circuit(LINE), LINE)
    assert build_formula(p, 2).audit()["connectivity"] == 1


def test_no_gate_swap_terms_without_swaps():
    f = build_formula(one_qudit(), 1)
    assert f.horizon == 0 and "gate-swap" not in f.audit()


def test_unordered_gates_get_pairwise_collision_terms():
    c = BasisCircuit.of([Gate(0, "a", (Q(0, 0, 0), Q(1, 0, 0))), Gate(1, "b", (Q(0, 0, 0), Q(-1, 0, 0)))])
    f = build_formula(RoutingProblem(c, LINE), 4)
    terms = [t for fam, t in f.assertions if fam == "gate-gate"]
    assert len(terms) == 1 and terms[0].startswith("(=> (= gt_0 gt_1)")
    assert "gs_0_0 gs_1_0" in terms[0]
    assert "dependency" not in f.audit()


def test_timed_gates_get_dependencies_and_windows():
    c = BasisCircuit.of([Gate(0, "a", (Q(0, 0, 0),), 0), Gate(1, "b", (Q(0, 0, 0),), 1),
                         Gate(2, "c", (Q(0, 0, 0),), 2)])
    p = RoutingProblem(c, LINE)
    f = build_formula(p, 4)
    assert f.audit()["dependency"] == 2
    assert "gate-gate" not in f.audit()
    assert time_windows(p, 4) == {0: (0, 1), 1: (1, 2), 2: (2, 3)}


def test_cyclicity_terms():
    assert "cyclicity" not in build_formula(one_qudit(), 2).audit()
    assert build_formula(one_qudit(RoutingOptions(cyclic=True)), 2).audit()["cyclicity"] == 3


def test_objectives():
    assert build_formula(one_qudit(RoutingOptions(minimize_swaps=False)), 2).objectives == []
    names = [n for n, _ in build_formula(one_qudit(RoutingOptions(merge_swaps=True)), 2).objectives]
    assert names == ["naked_swaps", "total_swaps"]
    with pytest.raises(ValueError):
        RoutingOptions(fixed_naked_swaps=1)
    fixed = build_formula(one_qudit(RoutingOptions(merge_swaps=True, fixed_naked_swaps=0)), 2)
    assert [n for n, _ in fixed.objectives] == ["total_swaps"] and fixed.audit()["objective"] == 1


def test_depth_below_lower_bound_rejected():
    with pytest.raises(ValueError, match="lower bound"):
        build_formula(RoutingProblem(atl_trotter_circuit(LINE), LINE), 1)


def test_rendering_is_deterministic():
    p = RoutingProblem(atl_trotter_circuit(builtin_basis_graph("ladder")), reseed_graph(LINE, 2, 1),
                       RoutingOptions(merge_swaps=True, cyclic=True))
    assert build_formula(p, 4).render() == build_formula(p, 4).render()


def test_translated_swap_sites_share_one_variable():
    f = build_formula(one_qudit(hw=LINE3), 2)
    by_class: dict[int, set] = {}
    for site, (k, a, b) in enumerate(f.geometry.swap_sites):
        by_class.setdefault(k, set()).add(f.swap_site_var(0, site))
    assert all(len(v) == 1 for v in by_class.values())
    assert len(by_class) == 3 and len(f.geometry.swap_sites) > 3


def test_audit_lists_every_family():
    p = RoutingProblem(atl_trotter_circuit(builtin_basis_graph("ladder")), reseed_graph(LINE, 2, 1),
                       RoutingOptions(merge_swaps=True, cyclic=True))
    fams = set(build_formula(p, 4).audit())
    assert {"mapping", "injectivity", "time", "consistency", "connectivity", "swap-effect", "swap-swap",
            "gate-gate", "gate-swap", "cyclicity"} <= fams


def _merge_instance(merge: bool) -> RoutingProblem:
    """One gate on the rung of a two-seed cell whose endpoints must also trade places."""
    c = BasisCircuit.of([Gate(0, "cz", (Q(0, 0, 0), Q(0, 0, 1)))])
    hw = reseed_graph(LINE, 2, 1)
    return RoutingProblem(c, hw, RoutingOptions(merge_swaps=merge),
                          fixed_initial_map={Q(0, 0, 0): Q(0, 0, 0), Q(0, 0, 1): Q(0, 0, 1)},
                          final_map_target={Q(0, 0, 0): Q(0, 0, 1), Q(0, 0, 1): Q(0, 0, 0)})


@needs_solver
def test_merged_swap_sat_only_with_merging():
    s = SolverSession()
    assert solve(build_formula(_merge_instance(True), 1), s).status is Status.SAT
    assert solve(build_formula(_merge_instance(False), 1), s).status is Status.UNSAT


@needs_solver
def test_swap_swap_family_is_necessary():
    """Without it, two SWAPs on spare qudits may share a seed; the verifier must catch that."""
    p = RoutingProblem(BasisCircuit.of([Gate(0, "u", (Q(0, 0, 0),))]), LINE3, RoutingOptions(minimize_swaps=False))
    f = build_formula(p, 2)
    f.assertions = [(fam, t) for fam, t in f.assertions if fam != "swap-swap"]
    k01, k12 = (next(k for k, (a, b) in enumerate(f.geometry.classes) if {a.s, b.s} == pair)
                for pair in ({0, 1}, {1, 2}))
    model = _query(f, SolverSession(), objectives=False, extra=(f.sw(0, k01), f.sw(0, k12)))
    assert model.status is Status.SAT
    report = verify(p.logical, assemble(p, extract(model, f)), p.hardware, p.options)
    assert "swap-swap" in report.failed_checks()
    intact = build_formula(p, 2)
    assert _query(intact, SolverSession(), objectives=False,
                  extra=(intact.sw(0, k01), intact.sw(0, k12))).status is Status.UNSAT
