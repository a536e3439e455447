"""Command-line front end and benchmark harness."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import re
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

from . import _kernels
from .circuitlib import atl_trotter_circuit, available_graphs, builtin_basis_graph, load_graph, rule54_circuit
from .core import (
    BasisCircuit, InvalidCircuitError, PatchSpec, TilingError, circuit_from_json, circuit_to_json, dumps,
    graph_to_json, reseed_circuit, reseed_graph, schedule, validate_basis_circuit,
)
from .encoder import RoutingOptions, RoutingProblem
from .router import RoutedSolution, VerificationError, get_patch, get_patch_fast, route
from .solver import RoutingInfeasible, RoutingTimeout, SolverError, SolverSession
from .verifier import verify

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def parse_duration(text: str) -> float:
    """Seconds from '90', '90s', '5m', '2h' or combinations such as '1h30m'."""
    text = text.strip().lower()
    if re.fullmatch(r"\d+(\.\d+)?", text):
        return float(text)
    parts = re.findall(r"(\d+(?:\.\d+)?)([hms])", text)
    if not parts or "".join(a + b for a, b in parts) != text:
        raise argparse.ArgumentTypeError(f"bad duration {text!r}; use e.g. 90, 90s, 5m, 1h30m")
    scale = {"h": 3600.0, "m": 60.0, "s": 1.0}
    return sum(float(v) * scale[u] for v, u in parts)


def parse_size(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
    if not m or int(m[1]) < 1 or int(m[2]) < 1:
        raise argparse.ArgumentTypeError(f"bad size {text!r}; expected NxM with positive entries")
    return int(m[1]), int(m[2])


def parse_patch(text: str) -> PatchSpec:
    try:
        return PatchSpec.parse(text)
    except (TilingError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON: {exc}") from exc


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _sha(doc) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


# ------------------------------------------------------------------ problems


def options_from_args(args) -> RoutingOptions:
    return RoutingOptions(
        cyclic=args.cyclic,
        gate_dependencies=args.gate_dependencies,
        merge_swaps=args.merge_swaps,
        slice_depth=args.slice_depth,
        minimize_swaps=args.minimize_swaps,
        fixed_naked_swaps=args.fixed_naked_swaps,
        delta=args.delta,
        solver_timeout=args.timeout,
    )


def problem_from_args(args) -> RoutingProblem:
    try:
        hardware = load_graph(args.hardware)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc
    if args.reseed_hw:
        hardware = reseed_graph(hardware, *args.reseed_hw)
    if args.atl:
        try:
            lattice = builtin_basis_graph(args.atl) if not args.atl.endswith(".json") else load_graph(args.atl)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from exc
        if args.reseed:
            lattice = reseed_graph(lattice, *args.reseed)
        logical = atl_trotter_circuit(lattice)
    else:
        logical = rule54_circuit() if args.rule54 else circuit_from_json(_read_json(args.circuit))
        if args.reseed:
            logical = reseed_circuit(logical, *args.reseed)
    return RoutingProblem(logical, hardware, options_from_args(args))


# ------------------------------------------------------------------ commands


def cmd_route(args) -> int:
    problem = problem_from_args(args)
    session = SolverSession(args.solver, timeout=args.timeout, transcript_dir=args.transcripts)
    if not session.available():
        raise UsageError(f"solver command not found: {session.argv[0]}")
    log = (lambda msg: print(msg, file=sys.stderr, flush=True)) if args.verbose else None
    sol = route(problem, session, window=args.window, log=log)
    st = sol.stats
    print(f"depth {st.depth} (lower bound {st.lower_bound}, overhead {st.depth_overhead} = "
          f"{st.overhead_percent:.0f} %), naked SWAPs {st.naked_swaps}, total SWAPs {st.total_swaps}, "
          f"{st.seconds:.1f}s", file=sys.stderr)
    _write(dumps(sol.to_json()), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    c = circuit_from_json(_read_json(args.file))
    if not c.timed:
        print("circuit has gates without times; run `schedule` first", file=sys.stderr)
        return EXIT_INFEASIBLE
    report = validate_basis_circuit(c, allow_merged_swaps=args.merged_swaps)
    if report.valid:
        print(f"valid: depth {c.depth}, {len(c.gates)} gates, tiles without collisions")
        return EXIT_OK
    print(f"invalid: {len(report.violations)} same-seed collisions (time, seed, gate ids)", file=sys.stderr)
    for v in report.violations[:50]:
        print(f"  {v}", file=sys.stderr)
    return EXIT_INFEASIBLE


def cmd_schedule(args) -> int:
    c = circuit_from_json(_read_json(args.file))
    _write(dumps(circuit_to_json(schedule(c))), args.out)
    return EXIT_OK


def _load_solution(path: str) -> RoutedSolution:
    try:
        return RoutedSolution.from_json(_read_json(path))
    except (KeyError, TypeError) as exc:
        raise UsageError(f"{path}: not a routed solution ({exc})") from exc


def cmd_patch(args) -> int:
    sol = _load_solution(args.solution)
    patch = (get_patch_fast if args.fast else get_patch)(sol, args.size)
    _write(dumps(circuit_to_json(patch)), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    sol = _load_solution(args.solution)
    report = verify(sol.logical, sol, sol.hardware, sol.options, args.window)
    _write(json.dumps(report.to_json(), indent=1), args.out)
    print(report.summary(), file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_INTERNAL


def cmd_graphs(args) -> int:
    if args.action == "list":
        for name in available_graphs():
            b = builtin_basis_graph(name)
            print(f"{name:20s} seeds {b.n_seeds:2d}  edge classes {len(b.edges):2d}")
        return EXIT_OK
    if not args.name:
        raise UsageError("graphs show needs a lattice name")
    try:
        b = builtin_basis_graph(args.name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc
    _write(dumps(graph_to_json(b)), None)
    return EXIT_OK


# --------------------------------------------------------------------- bench


@dataclass
class RunRecord:
    suite: str
    instance: str
    kind: str                       # "route" or "emission"
    options: str
    status: str
    depth: int | None = None
    lower_bound: int | None = None
    depth_overhead: int | None = None
    overhead_percent: float | None = None
    naked_swaps: int | None = None
    total_swaps: int | None = None
    qudit_overhead: int | None = None
    patch: str = ""
    patch_gates: int | None = None
    seconds: float = 0.0
    transcript: str = ""
    input_sha: str = ""
    solution_sha: str = ""


def _atl(lattice: str, reseed: tuple[int, int] = (1, 1)) -> BasisCircuit:
    return atl_trotter_circuit(reseed_graph(builtin_basis_graph(lattice), *reseed))


def _hw(name: str, reseed: tuple[int, int] = (1, 1)):
    return reseed_graph(builtin_basis_graph(name), *reseed)


def acceptance_instances() -> dict[str, Callable[[], RoutingProblem]]:
    """Routing instances behind the reference results, keyed by a short name."""
    merge = RoutingOptions(merge_swaps=True)
    return {
        "atl-ladder-to-line": lambda: RoutingProblem(_atl("ladder", (2, 1)), _hw("line", (4, 1)), merge),
        "atl-j1j2line-to-line": lambda: RoutingProblem(_atl("J1J2-line", (4, 1)), _hw("line", (4, 1)), merge),
        "atl-j1j2line-to-ladder": lambda: RoutingProblem(_atl("J1J2-line", (4, 1)), _hw("ladder", (2, 1)), merge),
        "rule54-to-ladder": lambda: RoutingProblem(rule54_circuit(), _hw("ladder", (2, 1)),
                                                   RoutingOptions(cyclic=True, merge_swaps=True)),
        "atl-triangular-to-square": lambda: RoutingProblem(_atl("triangular", (2, 2)), _hw("square", (2, 2)), merge),
    }


SUITES = {
    "quick": ["atl-ladder-to-line", "atl-j1j2line-to-line", "atl-j1j2line-to-ladder"],
    "acceptance": list(acceptance_instances()),
    "emission": [],
}


def emission_sweep(sol: RoutedSolution, sizes, *, fast: bool = True, repeats: int = 3) -> list[tuple[PatchSpec, int, float]]:
    """Best-of-``repeats`` patch emission time for each size."""
    emit = get_patch_fast if fast else get_patch
    out = []
    for spec in sizes:
        best = float("inf")
        for _ in range(repeats):
            t = time.perf_counter()
            patch = emit(sol, spec)
            best = min(best, time.perf_counter() - t)
        out.append((spec, len(patch.gates), best))
    return out


def run_suite(name: str, session: SolverSession, *, log=None) -> list[RunRecord]:
    instances = acceptance_instances()
    records: list[RunRecord] = []
    names = SUITES[name] if name != "emission" else ["atl-ladder-to-line"]
    for inst in names:
        problem = instances[inst]()
        doc = {"logical": circuit_to_json(problem.logical), "hardware": graph_to_json(problem.hardware)}
        rec = RunRecord(name, inst, "route", json.dumps(problem.options.to_json(), sort_keys=True), "ok",
                        transcript=str(session.transcript_dir or ""), input_sha=_sha(doc))
        start = time.perf_counter()
        try:
            sol = route(problem, session, log=log)
        except (RoutingInfeasible, RoutingTimeout) as exc:
            rec.status = type(exc).__name__
            rec.seconds = round(time.perf_counter() - start, 3)
            records.append(rec)
            continue
        st = sol.stats
        rec.depth, rec.lower_bound, rec.depth_overhead = st.depth, st.lower_bound, st.depth_overhead
        rec.overhead_percent = round(st.overhead_percent, 1)
        rec.naked_swaps, rec.total_swaps, rec.qudit_overhead = st.naked_swaps, st.total_swaps, st.qudit_overhead
        rec.seconds = round(st.seconds, 3)
        rec.solution_sha = _sha(circuit_to_json(sol.physical))
        if name != "emission":
            records.append(rec)
            continue
        for spec, n_gates, seconds in emission_sweep(sol, [PatchSpec(n, 1, 1) for n in range(1, 11)]):
            records.append(RunRecord(name, inst, "emission", rec.options, "ok", patch=f"{spec.n}x{spec.m}x{spec.l}",
                                     patch_gates=n_gates, seconds=round(seconds, 6), input_sha=rec.input_sha,
                                     solution_sha=rec.solution_sha))
    return records


def cmd_bench(args) -> int:
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    session = SolverSession(args.solver, timeout=args.timeout, transcript_dir=args.transcripts)
    if not session.available():
        raise UsageError(f"solver command not found: {session.argv[0]}")
    log = (lambda msg: print(msg, file=sys.stderr, flush=True)) if args.verbose else None
    records = run_suite(args.suite, session, log=log)
    fields = list(RunRecord.__dataclass_fields__)
    stream = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(stream, fieldnames=fields)
        writer.writeheader()
        for r in records:
            writer.writerow({k: "" if v is None else v for k, v in asdict(r).items()})
    finally:
        if args.out:
            stream.close()
    print(f"kernel backend: {_kernels.backend()}", file=sys.stderr)
    return EXIT_OK if all(r.status == "ok" for r in records) else EXIT_INFEASIBLE


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tileroute", description="Tileable routing of periodic circuits.")
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--solver", help="solver command line (default: $TILEROUTE_SOLVER or 'z3 -in')")
        p.add_argument("--timeout", type=parse_duration, help="time budget per solver query, e.g. 90s or 5m")
        p.add_argument("--transcripts", help="directory receiving every solver query and answer")
        p.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
        p.add_argument("--out", help="output file (default: stdout)")

    r = sub.add_parser("route", help="route a logical basis circuit onto a hardware lattice")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--circuit", help="basis circuit JSON file")
    src.add_argument("--atl", metavar="LATTICE", help="one two-qudit gate per edge of this lattice")
    src.add_argument("--rule54", action="store_true", help="Rule 54 cellular automaton step")
    r.add_argument("--hardware", required=True, help="builtin lattice name or basis graph JSON file")
    r.add_argument("--reseed", type=parse_size, metavar="NxM", help="reseed the logical side to an NxM cell")
    r.add_argument("--reseed-hw", type=parse_size, metavar="NxM", help="reseed the hardware side to an NxM cell")
    r.add_argument("--cyclic", action="store_true", help="final qudit map must equal the initial one")
    r.add_argument("--merge-swaps", action="store_true", help="allow SWAPs merged into two-qudit gates")
    r.add_argument("--gate-dependencies", action=argparse.BooleanOptionalAction, default=True,
                   help="keep the logical gate order (default on)")
    r.add_argument("--slice-depth", type=int, metavar="N", help="route in slices of N logical layers")
    r.add_argument("--minimize-swaps", action=argparse.BooleanOptionalAction, default=True,
                   help="minimize naked, then total SWAPs at minimal depth (default on)")
    r.add_argument("--fixed-naked-swaps", type=int, metavar="N", help="demand exactly N naked SWAPs")
    r.add_argument("--delta", type=int, default=1, help="mobility-zone radius in cells (only 1 is supported)")
    r.add_argument("--window", type=parse_patch, default=PatchSpec(3, 3, 2),
                   help="verification window NxMxL (default 3x3x2)")
    solver_flags(r)
    r.set_defaults(func=cmd_route)

    v = sub.add_parser("validate", help="check that a timed basis circuit tiles without collisions")
    v.add_argument("file")
    v.add_argument("--merged-swaps", action="store_true", help="accept SWAPs merged into same-edge gates")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("schedule", help="assign tileable ASAP times to a basis circuit")
    s.add_argument("file")
    s.add_argument("--out")
    s.set_defaults(func=cmd_schedule)

    p = sub.add_parser("patch", help="emit a finite patch of a routed solution")
    p.add_argument("solution")
    p.add_argument("--size", type=parse_patch, required=True, metavar="NxMxL")
    p.add_argument("--fast", action="store_true", help="tile-then-deduplicate emission")
    p.add_argument("--out")
    p.set_defaults(func=cmd_patch)

    w = sub.add_parser("verify", help="replay a routed solution on a finite window")
    w.add_argument("solution")
    w.add_argument("--window", type=parse_patch, default=PatchSpec(3, 3, 2), metavar="NxMxL")
    w.add_argument("--out")
    w.set_defaults(func=cmd_verify)

    g = sub.add_parser("graphs", help="list or show builtin basis graphs")
    g.add_argument("action", choices=["list", "show"])
    g.add_argument("name", nargs="?")
    g.set_defaults(func=cmd_graphs)

    b = sub.add_parser("bench", help="run a benchmark suite and emit CSV")
    b.add_argument("suite", help=f"one of: {', '.join(SUITES)}")
    solver_flags(b)
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RoutingInfeasible, RoutingTimeout) as exc:
        print(f"routing failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InvalidCircuitError as exc:
        print(f"invalid circuit: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (TilingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (VerificationError, SolverError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
