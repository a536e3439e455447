"""Builtin basis graphs and logical basis-circuit generators."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .core import (
    BasisCircuit, BasisGraph, Gate, InvalidCircuitError, QuditCoord, TilingError,
    circuit_from_json, graph_from_json, graph_to_json, schedule, validate_basis_circuit,
)

DATABASE = "basis_graphs.json"
DATABASE_VERSION = 1


@lru_cache(maxsize=1)
def _database() -> dict[str, BasisGraph]:
    text = resources.files("tileroute").joinpath("data", DATABASE).read_text()
    doc = json.loads(text)
    if doc.get("version") != DATABASE_VERSION:
        raise TilingError(f"unsupported graph database version {doc.get('version')}")
    return {entry["name"]: graph_from_json(entry) for entry in doc["graphs"]}


def available_graphs() -> list[str]:
    return sorted(_database())


def builtin_basis_graph(name: str) -> BasisGraph:
    db = _database()
    if name not in db:
        raise KeyError(f"unknown lattice {name!r}; available: {', '.join(sorted(db))}")
    return db[name]


def build_database() -> dict:
    """Regenerate the database document from the geometric definitions."""
    from .lattices import catalogue

    graphs = []
    for name, pg in sorted(catalogue().items()):
        b = pg.to_basis_graph(name)
        b.check()
        graphs.append(graph_to_json(b))
    return {"version": DATABASE_VERSION, "graphs": graphs}


def write_database(path: Path) -> None:
    path.write_text(json.dumps(build_database(), indent=1) + "\n")


def atl_trotter_circuit(b: BasisGraph) -> BasisCircuit:
    """One unscheduled two-qudit gate per basis edge; the router picks the order."""
    gates = [Gate(i, "U_ij", (a, c), None) for i, (a, c) in enumerate(b.edges)]
    return BasisCircuit(tuple(gates), frozenset(b.vertices))


def _toffoli_like(left: QuditCoord, target: QuditCoord, right: QuditCoord) -> list[tuple[QuditCoord, QuditCoord]]:
    # controlled-root gates and control-control CNOTs, with the outer CNOT
    # pair absorbed into the first and last two-qubit gates
    return [(right, target), (left, right), (right, target), (left, right), (left, target)]


def rule54_circuit() -> BasisCircuit:
    """Rule 54 update on a chain with four sites per cell, as a timed basis circuit.

    Even sites are updated first from their current neighbors, then odd
    sites.  Each site update is a five-gate two-qubit decomposition of the
    doubly controlled flip.  The cell starts so that the first update in
    each half-step targets seed 2 (then 0, 3, 1); other cell alignments
    give the same lattice circuit but a different routing problem.
    """
    def site(i: int) -> QuditCoord:
        cell, seed = divmod(i, 4)
        return QuditCoord(cell, 0, seed)

    pairs = []
    for target in (2, 0, 3, 1):
        pairs.extend(_toffoli_like(site(target - 1), site(target), site(target + 1)))
    gates = tuple(Gate(k, f"R54_{k}", pair, None) for k, pair in enumerate(pairs))
    return schedule(BasisCircuit(gates, frozenset(site(i) for i in range(4))))


def load_circuit(path: str | Path) -> BasisCircuit:
    """Parse a JSON basis circuit; timed circuits must be tileable."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise TilingError(f"{path}: malformed JSON: {exc}") from exc
    c = circuit_from_json(doc)
    if c.gates and c.timed:
        report = validate_basis_circuit(c)
        if not report.valid:
            raise InvalidCircuitError(report)
    return c


def load_graph(spec: str) -> BasisGraph:
    """Builtin name or path to a JSON basis graph."""
    p = Path(spec)
    if p.suffix == ".json" or p.exists():
        return graph_from_json(json.loads(p.read_text()))
    return builtin_basis_graph(spec)
