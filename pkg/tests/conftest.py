import functools
import shutil
import time

import pytest

import tileroute
import tileroute.cli
import tileroute.router
import tileroute.verifier
from tileroute import SolverSession

SOLVER_PRESENT = shutil.which("z3") is not None
needs_solver = pytest.mark.skipif(not SOLVER_PRESENT, reason="z3 binary not on PATH")

# Every solution produced during the run as (problem or None, solution); the
# soundness criterion re-verifies all of them at the end.
PRODUCED: list[tuple[object, object]] = []
# Acceptance criterion outcomes, printed in the terminal summary.
CRITERIA: dict[int, tuple[bool, str]] = {}
_ROUTED: dict[str, tuple] = {}


def _recording_route(fn):
    @functools.wraps(fn)
    def wrapper(p, *args, **kwargs):
        sol = fn(p, *args, **kwargs)
        PRODUCED.append((p, sol))
        return sol
    return wrapper


def _recording_brute_force(fn):
    @functools.wraps(fn)
    def wrapper(p, *args, **kwargs):
        found = fn(p, *args, **kwargs)
        if found is not None:
            PRODUCED.append((p, found[1]))
        return found
    return wrapper


# Installed before test modules import these names.
tileroute.route = tileroute.router.route = tileroute.cli.route = _recording_route(tileroute.router.route)
tileroute.brute_force_route = tileroute.verifier.brute_force_route = _recording_brute_force(
    tileroute.verifier.brute_force_route)


def route_cached(name: str, problem_factory, **kwargs):
    """Route an instance once per session; returns (problem, solution, seconds)."""
    if name not in _ROUTED:
        problem = problem_factory()
        t = time.perf_counter()
        sol = tileroute.route(problem, SolverSession(), **kwargs)
        _ROUTED[name] = (problem, sol, time.perf_counter() - t)
    return _ROUTED[name]


def report(number: int, passed: bool, detail: str) -> None:
    CRITERIA[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")


@pytest.fixture
def session():
    if not SOLVER_PRESENT:
        pytest.skip("z3 binary not on PATH")
    return SolverSession()


_ACCEPTANCE_COLLECTED = []


def pytest_collection_modifyitems(session, config, items):
    # acceptance runs last so the soundness sweep sees every other solution
    items.sort(key=lambda item: item.path.name == "test_acceptance.py")
    _ACCEPTANCE_COLLECTED.extend(i for i in items if i.path.name == "test_acceptance.py")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA and not _ACCEPTANCE_COLLECTED:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 11):
        passed, detail = CRITERIA.get(number, (False, "no result: the test errored, was skipped or deselected"))
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
