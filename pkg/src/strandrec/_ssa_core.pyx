# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Gillespie inner loop; see _ssa_py for the reference
semantics.  The two implementations consume the uniform stream
identically and produce identical trajectories."""

import numpy as np

cimport numpy as cnp
from libc.math cimport log

STATUS_NEED_UNIFORMS = 0
STATUS_QUIESCENT = 1
STATUS_BUDGET = 2


def run_chunk(
    cnp.int64_t[::1] counts,
    cnp.int32_t[::1] r0,
    cnp.int32_t[::1] r1,
    cnp.uint8_t[::1] same,
    cnp.float64_t[::1] rate,
    cnp.uint8_t[::1] irrev,
    cnp.int32_t[::1] upd_off,
    cnp.int32_t[::1] upd_idx,
    cnp.int64_t[::1] upd_val,
    cnp.int32_t[::1] absorb,
    double t,
    long since,
    long budget,
    long window,
    cnp.float64_t[::1] uniforms,
    cnp.int32_t[::1] out_rxn,
    cnp.float64_t[::1] out_t,
):
    cdef Py_ssize_t nr = rate.shape[0]
    cdef Py_ssize_t m = uniforms.shape[0] // 2
    cdef Py_ssize_t steps = 0
    cdef int status = STATUS_NEED_UNIFORMS
    cdef Py_ssize_t i, k, j
    cdef double total, acc, u1, u2, target
    cdef double n0, n1
    prop_arr = np.empty(nr, dtype=np.float64)
    cdef cnp.float64_t[::1] prop = prop_arr
    while steps < m:
        if budget <= 0:
            status = STATUS_BUDGET
            break
        total = 0.0
        for i in range(nr):
            n0 = <double> counts[r0[i]]
            if same[i]:
                prop[i] = rate[i] * n0 * (n0 - 1.0) * 0.5
            else:
                n1 = <double> counts[r1[i]]
                prop[i] = rate[i] * n0 * n1
            total = total + prop[i]
        if total <= 0.0:
            status = STATUS_QUIESCENT
            break
        u1 = uniforms[2 * steps]
        u2 = uniforms[2 * steps + 1]
        if u1 <= 0.0:
            u1 = 1e-300
        t = t + (-log(u1)) / total
        target = u2 * total
        acc = 0.0
        j = nr - 1
        for i in range(nr):
            acc = acc + prop[i]
            if acc > target:
                j = i
                break
        for k in range(upd_off[j], upd_off[j + 1]):
            counts[upd_idx[k]] += upd_val[k]
        for k in range(absorb.shape[0]):
            counts[absorb[k]] = 0
        out_rxn[steps] = <cnp.int32_t> j
        out_t[steps] = t
        steps += 1
        budget -= 1
        if irrev[j]:
            since = 0
        else:
            since += 1
        if window > 0 and since >= window:
            status = STATUS_QUIESCENT
            break
    return steps, status, t, since, budget
