"""Array kernels for tiling and collision scans.

Gates are packed into int64 rows ``[x0, y0, s0, x1, y1, s1, t, arity, label]``
(``t = -1`` when absent, second slot zero for single-qudit gates).  Each
kernel has a numba implementation and a pure-numpy one; setting
``TILEROUTE_DISABLE_NUMBA=1`` selects numpy.
"""

from __future__ import annotations

import os
from typing import Sequence

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None

ROW_WIDTH = 9
NUMBA_AVAILABLE = njit is not None
USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("TILEROUTE_DISABLE_NUMBA", "").lower() not in ("1", "true", "yes")


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def gates_to_rows(gates: Sequence) -> tuple[np.ndarray, list[str]]:
    labels: dict[str, int] = {}
    rows = np.zeros((len(gates), ROW_WIDTH), dtype=np.int64)
    for i, g in enumerate(gates):
        a = g.qudits[0]
        b = g.qudits[1] if len(g.qudits) == 2 else a
        rows[i] = (a.x, a.y, a.s, b.x, b.y, b.s,
                   -1 if g.time is None else g.time, len(g.qudits),
                   labels.setdefault(g.label, len(labels)))
    return rows, list(labels)


def as_offsets(offsets: Sequence[tuple[int, int, int]]) -> np.ndarray:
    return np.asarray(offsets, dtype=np.int64).reshape(-1, 3)


# ---------------------------------------------------------------- numpy path


def np_tile_rows(rows: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    out = np.repeat(rows[None, :, :], len(offsets), axis=0).copy()
    out[:, :, 0] += offsets[:, None, 0]
    out[:, :, 1] += offsets[:, None, 1]
    out[:, :, 3] += offsets[:, None, 0]
    out[:, :, 4] += offsets[:, None, 1]
    timed = out[:, :, 6] >= 0
    out[:, :, 6] += np.where(timed, offsets[:, None, 2], 0)
    return out.reshape(-1, ROW_WIDTH)


def np_first_occurrence(keys: np.ndarray) -> np.ndarray:
    mask = np.zeros(len(keys), dtype=np.bool_)
    if len(keys):
        _, first = np.unique(keys, axis=0, return_index=True)
        mask[first] = True
    return mask


def np_duplicate_mask(keys: np.ndarray) -> np.ndarray:
    if not len(keys):
        return np.zeros(0, dtype=np.bool_)
    _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    return counts[inverse.reshape(-1)] > 1


# ---------------------------------------------------------------- numba path

if NUMBA_AVAILABLE:

    @njit(cache=True)
    def nb_tile_rows(rows, offsets):
        n_rows = rows.shape[0]
        out = np.empty((offsets.shape[0] * n_rows, rows.shape[1]), dtype=np.int64)
        for k in range(offsets.shape[0]):
            dx, dy, dt = offsets[k, 0], offsets[k, 1], offsets[k, 2]
            for i in range(n_rows):
                r = k * n_rows + i
                for c in range(rows.shape[1]):
                    out[r, c] = rows[i, c]
                out[r, 0] += dx
                out[r, 1] += dy
                out[r, 3] += dx
                out[r, 4] += dy
                if out[r, 6] >= 0:
                    out[r, 6] += dt
        return out

    @njit(cache=True)
    def _nb_lex_order(keys):
        order = np.arange(keys.shape[0])
        for c in range(keys.shape[1] - 1, -1, -1):
            col = keys[order, c]
            order = order[np.argsort(col, kind="mergesort")]
        return order

    @njit(cache=True)
    def _nb_same_row(keys, i, j):
        for c in range(keys.shape[1]):
            if keys[i, c] != keys[j, c]:
                return False
        return True

    @njit(cache=True)
    def nb_first_occurrence(keys):
        n = keys.shape[0]
        mask = np.zeros(n, dtype=np.bool_)
        if n == 0:
            return mask
        order = _nb_lex_order(keys)
        start = 0
        for k in range(1, n + 1):
            if k == n or not _nb_same_row(keys, order[k], order[start]):
                best = order[start]
                for r in range(start + 1, k):
                    if order[r] < best:
                        best = order[r]
                mask[best] = True
                start = k
        return mask

    @njit(cache=True)
    def nb_duplicate_mask(keys):
        n = keys.shape[0]
        mask = np.zeros(n, dtype=np.bool_)
        if n == 0:
            return mask
        order = _nb_lex_order(keys)
        start = 0
        for k in range(1, n + 1):
            if k == n or not _nb_same_row(keys, order[k], order[start]):
                if k - start > 1:
                    for r in range(start, k):
                        mask[order[r]] = True
                start = k
        return mask


# ----------------------------------------------------------- dispatch + keys


def tile_rows(rows: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    return nb_tile_rows(rows, offsets) if USE_NUMBA else np_tile_rows(rows, offsets)


def first_occurrence(keys: np.ndarray) -> np.ndarray:
    keys = np.ascontiguousarray(keys, dtype=np.int64)
    return nb_first_occurrence(keys) if USE_NUMBA else np_first_occurrence(keys)


def duplicate_mask(keys: np.ndarray) -> np.ndarray:
    keys = np.ascontiguousarray(keys, dtype=np.int64)
    return nb_duplicate_mask(keys) if USE_NUMBA else np_duplicate_mask(keys)


def _slots(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack the occupied slots; returns (slot rows [x,y,s], time, gate index)."""
    two = rows[:, 7] == 2
    first = rows[:, 0:3]
    second = rows[two, 3:6]
    idx = np.concatenate([np.arange(len(rows)), np.nonzero(two)[0]])
    times = rows[idx, 6]
    return np.concatenate([first, second]), times, idx


def slot_keys_time_seed(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    coords, times, idx = _slots(rows)
    return np.stack([times, coords[:, 2]], axis=1), idx


def slot_keys_time_coord(rows: np.ndarray) -> np.ndarray:
    coords, times, _ = _slots(rows)
    return np.concatenate([times[:, None], coords], axis=1)


def gate_identity_keys(rows: np.ndarray) -> np.ndarray:
    """Rows with the two qudits in canonical order, so duplicates compare equal."""
    a = rows[:, 0:3]
    b = rows[:, 3:6]
    swap = (a[:, 0] > b[:, 0]) | ((a[:, 0] == b[:, 0]) & (
        (a[:, 1] > b[:, 1]) | ((a[:, 1] == b[:, 1]) & (a[:, 2] > b[:, 2]))))
    lo = np.where(swap[:, None], b, a)
    hi = np.where(swap[:, None], a, b)
    return np.concatenate([lo, hi, rows[:, 6:9]], axis=1)
