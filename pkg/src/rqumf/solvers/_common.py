"""Shared machinery for the solver backends.

Both the compiled and the pure-Python kernels consume the exact same inputs
built here: a row-wise sparse view of the coupling matrix, a per-sweep inverse
temperature schedule, and one PRNG seed per chain.  Keeping this preparation
in one place is what makes the two backends interchangeable.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(*parts) -> int:
    """Deterministically combine integers/strings into a 63-bit seed."""
    acc = 0x243F6A8885A308D3
    for part in parts:
        if isinstance(part, str):
            for byte in part.encode():
                acc = splitmix64(acc ^ byte)
        else:
            acc = splitmix64(acc ^ (int(part) & _MASK64))
    return acc & ((1 << 63) - 1)


def chain_seeds(seed: int, num_chains: int) -> np.ndarray:
    """Independent xorshift states, one per chain; never zero."""
    base = splitmix64(int(seed) & _MASK64)
    out = np.empty(num_chains, dtype=np.uint64)
    for c in range(num_chains):
        s = splitmix64(base ^ ((_GOLDEN * (c + 1)) & _MASK64))
        out[c] = s if s != 0 else _GOLDEN
    return out


def build_rows(problem):
    """Row-wise sparse view of the coupling terms.

    Returns ``(lin, indptr, indices, vals)`` where ``lin = s + diag(q)``
    (diagonal quadratic terms fold into the linear part since w^2 = w) and
    ``vals`` holds ``2 * q[i, j]`` for off-diagonal nonzeros, row by row with
    ascending column index.  The local field of variable i under assignment w
    is ``lin[i] + sum_j vals[i, j] * w[j]``, which is exactly the energy change
    of setting w_i from 0 to 1.
    """
    q = problem.q
    d = problem.d
    lin = problem.s + np.diag(q)
    off = q.copy()
    np.fill_diagonal(off, 0.0)
    rows_i, cols_j = np.nonzero(off)
    vals = 2.0 * off[rows_i, cols_j]
    indptr = np.zeros(d + 1, dtype=np.int64)
    np.add.at(indptr, rows_i + 1, 1)
    indptr = np.cumsum(indptr)
    return (
        np.ascontiguousarray(lin, dtype=np.float64),
        np.ascontiguousarray(indptr, dtype=np.int64),
        np.ascontiguousarray(cols_j, dtype=np.int64),
        np.ascontiguousarray(vals, dtype=np.float64),
    )


def beta_range_for(lin, indptr, vals) -> tuple[float, float]:
    """Schedule endpoints from coefficient magnitudes.

    Hot end flips the largest possible move with probability 1/2, cold end
    accepts the smallest nonzero move with probability 1/100.
    """
    abs_vals = np.abs(vals)
    row_sums = np.zeros(lin.shape[0])
    if abs_vals.size:
        rows = np.repeat(np.arange(lin.shape[0]), np.diff(indptr))
        np.add.at(row_sums, rows, abs_vals)
    de_max = float(np.max(np.abs(lin) + row_sums)) if lin.size else 1.0
    mags = np.concatenate([np.abs(lin), abs_vals])
    nonzero = mags[mags > 0.0]
    de_min = float(nonzero.min()) if nonzero.size else 1.0
    if de_max <= 0.0:
        de_max = 1.0
    beta_hot = math.log(2.0) / de_max
    beta_cold = math.log(100.0) / de_min
    if beta_cold <= beta_hot:
        beta_cold = beta_hot * 10.0
    return beta_hot, beta_cold


def make_schedule(beta_start: float, beta_end: float, sweeps: int, kind: str) -> np.ndarray:
    if sweeps < 1:
        raise ValueError("schedule needs at least one sweep")
    if kind not in ("geometric", "linear"):
        raise ValueError(f"unknown schedule kind {kind!r}")
    if sweeps == 1:
        return np.array([beta_end], dtype=np.float64)
    if kind == "geometric":
        return beta_start * (beta_end / beta_start) ** (np.arange(sweeps) / (sweeps - 1.0))
    return np.linspace(beta_start, beta_end, sweeps)


def masks_to_states(masks: np.ndarray, d: int) -> np.ndarray:
    """Unpack uint64 bitmasks (bit i = variable i) into a (n, d) uint8 array."""
    masks = np.asarray(masks, dtype=np.uint64)
    shifts = np.arange(d, dtype=np.uint64)
    return ((masks[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.uint8)
