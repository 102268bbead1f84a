"""Pure-numpy solver kernels, used when the compiled core is unavailable.

Runs all annealing chains in lockstep so the inner loop is vectorised across
chains.  Every chain consumes its own xorshift64* stream in exactly the same
order as the compiled kernel (one draw per initial bit, one draw per
proposal), so both backends produce the same sample sets.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_U64 = np.uint64
_SHIFT12 = _U64(12)
_SHIFT25 = _U64(25)
_SHIFT27 = _U64(27)
_SHIFT11 = _U64(11)
_SHIFT63 = _U64(63)
_MULT = _U64(2685821657736338717)
_INV53 = 1.0 / 9007199254740992.0


def _next_u64(states: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = states.copy()
        x ^= x >> _SHIFT12
        x ^= x << _SHIFT25
        x ^= x >> _SHIFT27
        states[:] = x
        return x * _MULT


def _uniform(states: np.ndarray) -> np.ndarray:
    return (_next_u64(states) >> _SHIFT11).astype(np.float64) * _INV53


def _dense_rows(lin, indptr, indices, vals) -> np.ndarray:
    d = lin.shape[0]
    twoq = np.zeros((d, d))
    rows = np.repeat(np.arange(d), np.diff(indptr))
    twoq[rows, indices] = vals
    return twoq


def sa_chains(lin, indptr, indices, vals, betas, seeds) -> np.ndarray:
    """Final states of independent single-flip Metropolis chains."""
    d = lin.shape[0]
    n_chains = seeds.shape[0]
    twoq = _dense_rows(lin, indptr, indices, vals)
    rng = seeds.astype(np.uint64).copy()

    w = np.zeros((n_chains, d), dtype=np.uint8)
    for i in range(d):
        w[:, i] = (_next_u64(rng) >> _SHIFT63).astype(np.uint8)

    # local field: energy delta of raising each bit, kept exact under flips
    h = np.tile(lin, (n_chains, 1))
    for j in range(d):
        on = w[:, j] == 1
        if on.any():
            h[on] += twoq[j]

    for beta in betas:
        for k in range(d):
            wk = w[:, k]
            de = np.where(wk == 0, h[:, k], -h[:, k])
            u = _uniform(rng)
            accept = (de <= 0.0) | (u < np.exp(np.minimum(-beta * de, 0.0)))
            idx = np.nonzero(accept)[0]
            if idx.size:
                flipped = wk[idx] ^ 1
                w[idx, k] = flipped
                sign = np.where(flipped == 1, 1.0, -1.0)
                h[idx] += sign[:, None] * twoq[k][None, :]

    # quench: strictly-downhill sweeps to a local minimum, no randomness
    active = np.arange(n_chains)
    for _ in range(1000):
        changed = np.zeros(n_chains, dtype=bool)
        for k in range(d):
            wk = w[active, k]
            de = np.where(wk == 0, h[active, k], -h[active, k])
            idx = active[de < 0.0]
            if idx.size:
                flipped = w[idx, k] ^ 1
                w[idx, k] = flipped
                sign = np.where(flipped == 1, 1.0, -1.0)
                h[idx] += sign[:, None] * twoq[k][None, :]
                changed[idx] = True
        active = np.nonzero(changed)[0]
        if not active.size:
            break
    return w


_CHUNK_BITS = 16


def exhaustive_scan(lin, indptr, indices, vals, d, threshold, out_masks) -> tuple[float, int]:
    """Scan all 2^d assignments; returns (min energy, count below threshold).

    Energies exclude the problem offset.  States with energy <= threshold are
    written into ``out_masks`` (bit i of a mask = variable i) until it fills;
    the returned count is the true number of qualifying states either way.
    """
    twoq = _dense_rows(lin, indptr, indices, vals)
    q_half = 0.5 * twoq
    best = np.inf
    count = 0
    cap = out_masks.shape[0]
    total = 1 << d
    chunk = 1 << min(_CHUNK_BITS, d)
    shifts = np.arange(d, dtype=np.uint64)
    for start in range(0, total, chunk):
        ints = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        bits = ((ints[:, None] >> shifts[None, :]) & _U64(1)).astype(np.float64)
        energies = ((bits @ q_half) * bits).sum(axis=1) + bits @ lin
        cmin = float(energies.min())
        if cmin < best:
            best = cmin
        hits = np.nonzero(energies <= threshold)[0]
        for idx in hits:
            if count < cap:
                out_masks[count] = ints[idx]
            count += 1
    return best, count
