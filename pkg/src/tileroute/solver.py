"""External SMT solver driver, depth search and model decoding."""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .core import QuditCoord
from .encoder import RoutingProblem, SmtFormula, build_formula

DEFAULT_COMMAND = "z3 -in"


class Status(str, Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"
    TIMEOUT = "timeout"


class SolverError(RuntimeError):
    """The solver process failed or answered something unparseable."""


class RoutingTimeout(RuntimeError):
    def __init__(self, message: str, best_bound: int):
        super().__init__(message)
        self.best_bound = best_bound


class RoutingInfeasible(RuntimeError):
    pass


@dataclass
class Model:
    status: Status
    assignment: dict[str, int | bool] = field(default_factory=dict)
    objectives: list[int] = field(default_factory=list)
    optimal: bool = True
    formula: SmtFormula | None = None
    seconds: float = 0.0

    @property
    def sat(self) -> bool:
        return self.status is Status.SAT


# --------------------------------------------------------------- s-expressions


def _tokens(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in "()":
            yield c
            i += 1
        elif c.isspace():
            i += 1
        elif c == ";":
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
        elif c == '"':
            # string literals keep their quotes; "" escapes a quote
            j = i + 1
            while True:
                j = text.index('"', j)
                if text.startswith('""', j):
                    j += 2
                    continue
                break
            yield text[i:j + 1]
            i = j + 1
        elif c == "|":
            j = text.index("|", i + 1)
            yield text[i + 1:j]
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield text[i:j]
            i = j


def parse_sexprs(text: str) -> list:
    stack: list[list] = [[]]
    for tok in _tokens(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SolverError("unbalanced solver output")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SolverError("unterminated solver output")
    return stack[0]


def _value(expr) -> int | bool:
    if isinstance(expr, str):
        if expr == "true":
            return True
        if expr == "false":
            return False
        return int(expr)
    if len(expr) == 2 and expr[0] == "-":
        return -int(_value(expr[1]))
    raise SolverError(f"unsupported value {expr!r}")


# ------------------------------------------------------------------ session

_ANSWERS = {"sat": Status.SAT, "unsat": Status.UNSAT, "unknown": Status.TIMEOUT, "timeout": Status.TIMEOUT}


class SolverSession:
    """Runs one SMT-LIB script per query in a fresh solver process."""

    def __init__(self, command: str | None = None, *, supports_optimization: bool | None = None,
                 timeout: float | None = None, transcript_dir: str | Path | None = None):
        self.command = command or os.environ.get("TILEROUTE_SOLVER", DEFAULT_COMMAND)
        self.argv = shlex.split(self.command)
        if supports_optimization is None:
            supports_optimization = Path(self.argv[0]).name.startswith("z3")
        self.supports_optimization = supports_optimization
        self.timeout = timeout
        self.transcript_dir = Path(transcript_dir) if transcript_dir else None
        self.queries = 0

    def available(self) -> bool:
        return shutil.which(self.argv[0]) is not None

    def _log(self, script: str, output: str, status: str) -> None:
        if self.transcript_dir is None:
            return
        self.transcript_dir.mkdir(parents=True, exist_ok=True)
        stem = self.transcript_dir / f"query_{self.queries:04d}"
        stem.with_suffix(".smt2").write_text(script)
        stem.with_suffix(".out").write_text(f"; status {status}\n{output}")

    def run(self, script: str, timeout: float | None = None) -> tuple[Status, list]:
        """Feed a script; returns the status and the remaining parsed responses."""
        if not self.available():
            raise SolverError(f"solver command not found: {self.argv[0]}")
        budget = timeout if timeout is not None else self.timeout
        self.queries += 1
        try:
            proc = subprocess.run(self.argv, input=script, capture_output=True, text=True, timeout=budget)
        except subprocess.TimeoutExpired:
            self._log(script, "", "timeout")
            return Status.TIMEOUT, []
        out = proc.stdout
        self._log(script, out + proc.stderr, "done")
        responses = parse_sexprs(out)
        if not responses:
            raise SolverError(f"solver produced no answer (exit {proc.returncode}): {proc.stderr.strip()[:500]}")
        for idx, head in enumerate(responses):
            if isinstance(head, str) and head in _ANSWERS:
                return _ANSWERS[head], responses[idx + 1:]
            if isinstance(head, list) and head[:1] == ["error"] and "canceled" in str(head):
                # the time budget ran out before the solver could answer
                return Status.TIMEOUT, []
        raise SolverError(f"unexpected solver answer: {str(responses[0])[:500]}")


def _decode_values(responses: list) -> dict[str, int | bool]:
    values: dict[str, int | bool] = {}
    for item in responses:
        if isinstance(item, list) and item and item[0] == "error":
            raise SolverError(f"solver error: {item}")
        if isinstance(item, list):
            for pair in item:
                if isinstance(pair, list) and len(pair) == 2 and isinstance(pair[0], str):
                    values[pair[0]] = _value(pair[1])
    return values


def _query(f: SmtFormula, s: SolverSession, *, objectives: bool, extra: tuple[str, ...] = (),
           timeout: float | None = None) -> Model:
    start = time.perf_counter()
    ms = None if timeout is None else int(timeout * 1000)
    status, responses = s.run(f.render(objectives=objectives, extra=extra, timeout_ms=ms),
                              None if timeout is None else timeout + 5)
    model = Model(status, formula=f, seconds=time.perf_counter() - start)
    if status is Status.SAT:
        model.assignment = _decode_values(responses)
        missing = [v for v in f.variables if v not in model.assignment]
        if missing:
            raise SolverError(f"model misses {len(missing)} variables, e.g. {missing[:3]}")
        model.objectives = [int(model.assignment[name]) for name, _ in f.objectives]
    return model


def solve(f: SmtFormula, s: SolverSession, timeout: float | None = None) -> Model:
    """Satisfy ``f`` and minimize its objectives lexicographically."""
    if not f.objectives:
        return _query(f, s, objectives=False, timeout=timeout)
    if s.supports_optimization:
        return _query(f, s, objectives=True, timeout=timeout)
    return _solve_by_bounding(f, s, timeout)


def _solve_by_bounding(f: SmtFormula, s: SolverSession, timeout: float | None) -> Model:
    best = _query(f, s, objectives=False, timeout=timeout)
    if not best.sat:
        return best
    fixed: list[str] = []
    for idx, (name, _) in enumerate(f.objectives):
        value = best.objectives[idx]
        while value > 0:
            trial = _query(f, s, objectives=False, extra=tuple(fixed) + (f"(<= {name} {value - 1})",),
                           timeout=timeout)
            if trial.status is Status.UNSAT:
                break
            if not trial.sat:
                best.optimal = False
                break
            best = trial
            value = trial.objectives[idx]
        fixed.append(f"(= {name} {value})")
    return best


def route_min_depth(p: RoutingProblem, s: SolverSession, *, max_depth: int | None = None,
                    log=None) -> tuple[Model, int]:
    """Smallest depth with a satisfying formula, starting from the lower bound."""
    p.check()
    depth = p.lower_bound
    limit = max_depth if max_depth is not None else 3 * depth + 6
    timeout = p.options.solver_timeout
    while depth <= limit:
        f = build_formula(p, depth)
        decision = _query(f, s, objectives=False, timeout=timeout)
        if log:
            log(f"depth {depth}: {decision.status.value} ({decision.seconds:.1f}s)")
        if decision.status is Status.UNSAT:
            depth += 1
            continue
        if not decision.sat:
            raise RoutingTimeout(f"solver gave up at depth {depth}", best_bound=depth)
        if not f.objectives:
            return decision, depth
        model = solve(f, s, timeout=timeout)
        if log:
            log(f"depth {depth}: optimized {model.objectives} ({model.seconds:.1f}s)")
        if model.sat:
            return model, depth
        decision.optimal = False
        return decision, depth
    raise RoutingInfeasible(f"no routing found up to depth {limit}")


# ------------------------------------------------------------------ decoding


@dataclass
class RawAssignment:
    depth: int
    horizon: int
    gate_times: dict[int, int]
    gate_coords: dict[int, tuple[QuditCoord, ...]]
    active_classes: set[tuple[int, int]]                    # (time, class index)
    swap_copies: list[tuple[int, QuditCoord, QuditCoord]]   # every in-zone site of active classes
    maps: list[dict[QuditCoord, QuditCoord]]
    objectives: list[int]


def extract(m: Model, f: SmtFormula) -> RawAssignment:
    if not m.sat:
        raise SolverError("cannot decode a model that is not SAT")
    val = m.assignment

    def get(name: str):
        if name not in val:
            raise SolverError(f"model misses {name}")
        return val[name]

    p = f.problem
    times, coords = {}, {}
    for g in p.logical.gates:
        times[g.id] = int(get(f.gt(g.id)))
        coords[g.id] = tuple(QuditCoord(*(int(get(n)) for n in f.gq(g.id, slot))) for slot in range(g.arity))
    active = {(t, k) for t in range(f.horizon) for k in range(len(f.geometry.classes)) if get(f.sw(t, k))}
    copies = [(t, a, b) for t in range(f.horizon) for k, a, b in f.geometry.swap_sites if (t, k) in active]
    maps = []
    for t in range(f.horizon + 1):
        maps.append({q: QuditCoord(*(int(get(n)) for n in f.q(t, i))) for i, q in enumerate(f.qudits)})
    return RawAssignment(f.depth, f.horizon, times, coords, active, copies, maps, list(m.objectives))
