"""Numba kernels for the dense statevector engine.

All kernels operate in place on a 1-D complex128 array of length 2**n,
indexed so that qubit 0 is the least significant bit.
"""
from __future__ import annotations

import numpy as np
from numba import config, njit, prange

# the default layer probes TBB first, which warns on older TBB runtimes
config.THREADING_LAYER = "omp"


@njit(parallel=True, fastmath=True, cache=True)
def apply_1q(psi, q, u00, u01, u10, u11):
    half = psi.size >> 1
    step = 1 << q
    for t in prange(half):
        off = t & (step - 1)
        i0 = ((t >> q) << (q + 1)) | off
        i1 = i0 | step
        a = psi[i0]
        b = psi[i1]
        psi[i0] = u00 * a + u01 * b
        psi[i1] = u10 * a + u11 * b


@njit(parallel=True, fastmath=True, cache=True)
def apply_zz_phase(psi, q1, q2, phase):
    # multiply amplitudes of basis states with bit(q1) != bit(q2) by `phase`
    m1 = 1 << q1
    m2 = 1 << q2
    for i in prange(psi.size):
        b1 = (i & m1) != 0
        b2 = (i & m2) != 0
        if b1 != b2:
            psi[i] *= phase


@njit(parallel=True, fastmath=True, cache=True)
def apply_diag_phase(psi, values, gamma):
    # psi[i] *= exp(-1j * gamma * values[i]); the cost layer as one pass
    for i in prange(psi.size):
        psi[i] *= np.exp(-1j * gamma * values[i])


@njit(parallel=True, fastmath=True, cache=True)
def prob_of_one(psi, q):
    step = 1 << q
    half = psi.size >> 1
    acc = 0.0
    for t in prange(half):
        off = t & (step - 1)
        i1 = ((t >> q) << (q + 1)) | off | step
        a = psi[i1]
        acc += a.real * a.real + a.imag * a.imag
    return acc


@njit(parallel=True, fastmath=True, cache=True)
def collapse(psi, q, outcome, inv_norm):
    # zero the discarded branch, rescale the kept one
    step = 1 << q
    half = psi.size >> 1
    for t in prange(half):
        off = t & (step - 1)
        i0 = ((t >> q) << (q + 1)) | off
        i1 = i0 | step
        if outcome == 0:
            psi[i0] *= inv_norm
            psi[i1] = 0.0
        else:
            psi[i0] = 0.0
            psi[i1] *= inv_norm


@njit(parallel=True, fastmath=True, cache=True)
def probabilities(psi, out):
    for i in prange(psi.size):
        a = psi[i]
        out[i] = a.real * a.real + a.imag * a.imag


@njit(parallel=True, fastmath=True, cache=True)
def weighted_sum(psi, values):
    acc = 0.0
    for i in prange(psi.size):
        a = psi[i]
        acc += (a.real * a.real + a.imag * a.imag) * values[i]
    return acc
