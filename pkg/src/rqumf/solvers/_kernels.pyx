# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled solver kernels: annealing chains and exhaustive Gray-code scans.

Mirrors ``_fallback`` draw-for-draw: one PRNG draw per initial bit, one per
proposal, so the two backends return identical sample sets.
"""

from libc.math cimport exp
from libc.stdint cimport int64_t, uint8_t, uint64_t

import numpy as np

BACKEND_NAME = "cython"


cdef inline uint64_t _next_u64(uint64_t *state) noexcept nogil:
    cdef uint64_t x = state[0]
    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    state[0] = x
    return x * (<uint64_t>2685821657736338717UL)


cdef inline double _uniform(uint64_t *state) noexcept nogil:
    return <double>(_next_u64(state) >> 11) * (1.0 / 9007199254740992.0)


def sa_chains(double[::1] lin, int64_t[::1] indptr, int64_t[::1] indices,
              double[::1] vals, double[::1] betas, uint64_t[::1] seeds):
    """Final states of independent single-flip Metropolis chains."""
    cdef Py_ssize_t d = lin.shape[0]
    cdef Py_ssize_t n_chains = seeds.shape[0]
    cdef Py_ssize_t n_sweeps = betas.shape[0]

    out = np.empty((n_chains, d), dtype=np.uint8)
    w_buf = np.zeros(d, dtype=np.uint8)
    h_buf = np.zeros(d, dtype=np.float64)
    cdef uint8_t[:, ::1] out_mv = out
    cdef uint8_t[::1] w = w_buf
    cdef double[::1] h = h_buf

    cdef uint64_t rng
    cdef Py_ssize_t c, i, j, k, t, p
    cdef int changed
    cdef double beta, de, sign, u

    with nogil:
        for c in range(n_chains):
            rng = seeds[c]
            for i in range(d):
                w[i] = <uint8_t>(_next_u64(&rng) >> 63)
            for i in range(d):
                h[i] = lin[i]
            for j in range(d):
                if w[j]:
                    for p in range(indptr[j], indptr[j + 1]):
                        h[indices[p]] += vals[p]
            for t in range(n_sweeps):
                beta = betas[t]
                for k in range(d):
                    de = h[k] if w[k] == 0 else -h[k]
                    u = _uniform(&rng)
                    if de <= 0.0 or u < exp(-beta * de):
                        if w[k] == 0:
                            w[k] = 1
                            sign = 1.0
                        else:
                            w[k] = 0
                            sign = -1.0
                        for p in range(indptr[k], indptr[k + 1]):
                            h[indices[p]] += sign * vals[p]
            # quench: strictly-downhill sweeps drive the chain to a local
            # minimum; consumes no randomness, so backends stay in lockstep
            for t in range(1000):
                changed = 0
                for k in range(d):
                    de = h[k] if w[k] == 0 else -h[k]
                    if de < 0.0:
                        changed = 1
                        if w[k] == 0:
                            w[k] = 1
                            sign = 1.0
                        else:
                            w[k] = 0
                            sign = -1.0
                        for p in range(indptr[k], indptr[k + 1]):
                            h[indices[p]] += sign * vals[p]
                if changed == 0:
                    break
            for i in range(d):
                out_mv[c, i] = w[i]
    return out


def exhaustive_scan(double[::1] lin, int64_t[::1] indptr, int64_t[::1] indices,
                    double[::1] vals, int d, double threshold, uint64_t[::1] out_masks):
    """Scan all 2^d assignments in Gray-code order.

    Returns ``(min energy, count)`` where count is the number of states with
    energy <= threshold; the first ``len(out_masks)`` of them are stored.
    Energies exclude the problem offset.
    """
    cdef int64_t total = (<int64_t>1) << d
    cdef Py_ssize_t cap = out_masks.shape[0]
    cdef int64_t step, count = 0
    cdef uint64_t mask = 0
    cdef Py_ssize_t k, p, i
    cdef double energy = 0.0, best = 0.0, de, sign

    w_buf = np.zeros(d, dtype=np.uint8)
    h_buf = np.array(lin, dtype=np.float64, copy=True)
    cdef uint8_t[::1] w = w_buf
    cdef double[::1] h = h_buf

    with nogil:
        if energy <= threshold:
            if count < cap:
                out_masks[count] = 0
            count += 1
        for step in range(1, total):
            k = 0
            while not ((step >> k) & 1):
                k += 1
            de = h[k] if w[k] == 0 else -h[k]
            if w[k] == 0:
                w[k] = 1
                sign = 1.0
            else:
                w[k] = 0
                sign = -1.0
            mask ^= (<uint64_t>1) << k
            for p in range(indptr[k], indptr[k + 1]):
                h[indices[p]] += sign * vals[p]
            energy += de
            if energy < best:
                best = energy
            if energy <= threshold:
                if count < cap:
                    out_masks[count] = mask
                count += 1
    return best, count
