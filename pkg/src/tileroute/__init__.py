"""Tileable routing of translation-invariant quantum circuits on periodic lattices."""

from .circuitlib import atl_trotter_circuit, available_graphs, builtin_basis_graph, load_circuit, rule54_circuit
from .core import (
    BasisCircuit, BasisGraph, Gate, InvalidCircuitError, PatchSpec, QuditCoord, TilingError, critical_path_depth,
    make_patch, qc, reseed_circuit, reseed_graph, schedule, validate_basis_circuit,
)
from .encoder import RoutingOptions, RoutingProblem, build_formula
from .router import RoutedSolution, VerificationError, get_patch, get_patch_fast, route
from .solver import RoutingInfeasible, RoutingTimeout, SolverError, SolverSession, route_min_depth
from .verifier import VerifyReport, brute_force_route, verify

__all__ = [
    "BasisCircuit", "BasisGraph", "Gate", "InvalidCircuitError", "PatchSpec", "QuditCoord", "RoutedSolution",
    "RoutingInfeasible", "RoutingOptions", "RoutingProblem", "RoutingTimeout", "SolverError", "SolverSession",
    "TilingError", "VerificationError", "VerifyReport", "atl_trotter_circuit", "available_graphs",
    "brute_force_route", "build_formula", "builtin_basis_graph", "critical_path_depth", "get_patch",
    "get_patch_fast", "load_circuit", "make_patch", "qc", "reseed_circuit", "reseed_graph", "route",
    "route_min_depth", "rule54_circuit", "schedule", "validate_basis_circuit", "verify",
]
