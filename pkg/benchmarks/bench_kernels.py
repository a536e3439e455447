"""Compare the numba and numpy kernel backends on patch-sized inputs.

Run with ``python3 benchmarks/bench_kernels.py [--sizes 4 8 16 32] [--repeats 5]``.
Both backends are called directly, so the env flag does not matter here.
Numba compile time is measured separately and excluded from the timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from tileroute import _kernels, rule54_circuit
from tileroute.core import _patch_offsets, PatchSpec


def best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def workload(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Rule 54 basis rows and the offsets of an ``n x n x 2`` patch."""
    c = rule54_circuit()
    rows, _ = _kernels.gates_to_rows(list(c.gates))
    return rows, _kernels.as_offsets(_patch_offsets(PatchSpec(n, n, 2), c.depth))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    if not _kernels.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")

    rows, offsets = workload(1)
    t = time.perf_counter()
    tiled = _kernels.nb_tile_rows(rows, offsets)
    keys = _kernels.gate_identity_keys(tiled)
    _kernels.nb_first_occurrence(keys)
    _kernels.nb_duplicate_mask(_kernels.slot_keys_time_coord(tiled))
    print(f"numba warm-up (compile or cache load): {time.perf_counter() - t:.2f}s")

    print(f"{'patch':>10} {'rows':>9} {'kernel':>16} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for n in args.sizes:
        rows, offsets = workload(n)
        tiled = _kernels.np_tile_rows(rows, offsets)
        assert np.array_equal(tiled, _kernels.nb_tile_rows(rows, offsets))
        ident = np.ascontiguousarray(_kernels.gate_identity_keys(tiled))
        slots = np.ascontiguousarray(_kernels.slot_keys_time_coord(tiled))
        cases = {
            "tile_rows": (_kernels.np_tile_rows, _kernels.nb_tile_rows, (rows, offsets)),
            "first_occurrence": (_kernels.np_first_occurrence, _kernels.nb_first_occurrence, (ident,)),
            "duplicate_mask": (_kernels.np_duplicate_mask, _kernels.nb_duplicate_mask, (slots,)),
        }
        for name, (np_fn, nb_fn, fn_args) in cases.items():
            assert np.array_equal(np_fn(*fn_args), nb_fn(*fn_args)), name
            t_np = best_of(lambda: np_fn(*fn_args), args.repeats)
            t_nb = best_of(lambda: nb_fn(*fn_args), args.repeats)
            print(f"{f'{n}x{n}x2':>10} {len(tiled):>9} {name:>16} {t_np * 1e3:>10.3f} {t_nb * 1e3:>10.3f} "
                  f"{t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
