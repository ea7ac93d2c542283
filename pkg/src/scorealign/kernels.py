"""Truth-table kernels over the 2^n worlds of an instance.

A truth table is a boolean array indexed by world bitmask.  Each kernel has
a numba implementation and a vectorised numpy one with identical results.
Set ``SCOREALIGN_PURE_NUMPY=1`` to force the numpy versions (also used when
numba is not importable).
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    njit = None

HAVE_NUMBA = njit is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("SCOREALIGN_PURE_NUMPY", "").lower() in ("", "0", "false")


def _pairs(arr: np.ndarray, bit: int) -> np.ndarray:
    """View with axis 1 selecting whether ``bit`` is clear (0) or set (1)."""
    return arr.reshape(-1, 2, 1 << bit)


# --- numpy ----------------------------------------------------------------


def popcounts_numpy(n: int) -> np.ndarray:
    pc = np.zeros(1 << n, dtype=np.uint8)
    for bit in range(n):
        _pairs(pc, bit)[:, 1, :] += 1
    return pc


def superset_closure_numpy(table: np.ndarray, n: int) -> np.ndarray:
    """In place: mark every superset of a marked world."""
    for bit in range(n):
        view = _pairs(table, bit)
        view[:, 1, :] |= view[:, 0, :]
    return table


def swing_counts_numpy(table: np.ndarray, n: int) -> np.ndarray:
    """``counts[i, k]`` = number of worlds W of size k without tuple i where
    adding i flips the query from false to true."""
    counts = np.zeros((n, max(n, 1)), dtype=np.int64)
    if n == 0:
        return counts[:, :0]
    pc = popcounts_numpy(n)
    for bit in range(n):
        view = _pairs(table, bit)
        swing = view[:, 1, :] & ~view[:, 0, :]
        sizes = _pairs(pc, bit)[:, 0, :][swing]
        counts[bit] = np.bincount(sizes, minlength=n)[:n]
    return counts


def minimal_worlds_numpy(table: np.ndarray, n: int) -> np.ndarray:
    """Satisfying worlds from which removing any member falsifies the query."""
    keep = table.copy()
    for bit in range(n):
        _pairs(keep, bit)[:, 1, :] &= ~_pairs(table, bit)[:, 0, :]
    return np.flatnonzero(keep).astype(np.int64)


# --- numba ----------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def superset_closure_numba(table, n):
        size = 1 << n
        for bit in range(n):
            step = 1 << bit
            for w in range(size):
                if w & step and not table[w] and table[w ^ step]:
                    table[w] = True
        return table

    @njit(cache=True)
    def swing_counts_numba(table, n):
        counts = np.zeros((n, n), dtype=np.int64)
        for w in range(1 << n):
            if not table[w]:
                continue
            size = 0
            rest = w
            while rest:
                rest &= rest - 1
                size += 1
            for bit in range(n):
                step = 1 << bit
                if w & step and not table[w ^ step]:
                    counts[bit, size - 1] += 1
        return counts

    @njit(cache=True)
    def minimal_worlds_numba(table, n):
        out = np.empty(1 << n, dtype=np.int64)
        found = 0
        for w in range(1 << n):
            if not table[w]:
                continue
            minimal = True
            for bit in range(n):
                step = 1 << bit
                if w & step and table[w ^ step]:
                    minimal = False
                    break
            if minimal:
                out[found] = w
                found += 1
        return out[:found].copy()

else:  # pragma: no cover
    superset_closure_numba = swing_counts_numba = minimal_worlds_numba = None


# --- dispatch -------------------------------------------------------------


def superset_closure(table: np.ndarray, n: int) -> np.ndarray:
    if USE_NUMBA:
        return superset_closure_numba(table, n)
    return superset_closure_numpy(table, n)


def swing_counts(table: np.ndarray, n: int) -> np.ndarray:
    if USE_NUMBA:
        return swing_counts_numba(table, n)
    return swing_counts_numpy(table, n)


def minimal_worlds(table: np.ndarray, n: int) -> np.ndarray:
    if USE_NUMBA:
        return minimal_worlds_numba(table, n)
    return minimal_worlds_numpy(table, n)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
