"""Pure-python (numpy) Gillespie inner loop; mirrors _ssa_core exactly.

Both kernels consume the same pre-drawn uniform stream two at a time
(holding time, then reaction pick) so their trajectories are identical.
"""

from __future__ import annotations

import math

import numpy as np

STATUS_NEED_UNIFORMS = 0
STATUS_QUIESCENT = 1
STATUS_BUDGET = 2


def run_chunk(
    counts,
    r0,
    r1,
    same,
    rate,
    irrev,
    upd_off,
    upd_idx,
    upd_val,
    absorb,
    t,
    since,
    budget,
    window,
    uniforms,
    out_rxn,
    out_t,
):
    m = len(uniforms) // 2
    steps = 0
    status = STATUS_NEED_UNIFORMS
    while steps < m:
        if budget <= 0:
            status = STATUS_BUDGET
            break
        n0 = counts[r0].astype(np.float64)
        n1 = counts[r1].astype(np.float64)
        prop = rate * np.where(same, n0 * (n0 - 1.0) * 0.5, n0 * n1)
        cum = np.cumsum(prop)
        total = cum[-1] if len(cum) else 0.0
        if total <= 0.0:
            status = STATUS_QUIESCENT
            break
        u1 = uniforms[2 * steps]
        u2 = uniforms[2 * steps + 1]
        t += -math.log(u1 if u1 > 0.0 else 1e-300) / total
        j = int(np.searchsorted(cum, u2 * total, side="right"))
        if j >= len(prop):
            j = len(prop) - 1
        lo, hi = upd_off[j], upd_off[j + 1]
        counts[upd_idx[lo:hi]] += upd_val[lo:hi]
        if len(absorb):
            counts[absorb] = 0
        out_rxn[steps] = j
        out_t[steps] = t
        steps += 1
        budget -= 1
        since = 0 if irrev[j] else since + 1
        if window > 0 and since >= window:
            status = STATUS_QUIESCENT
            break
    return steps, status, t, since, budget
