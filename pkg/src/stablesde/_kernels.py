"""Compiled per-path time-stepping loops.

Drift and transform formulas are duplicated here from ``drift`` in scalar
form; ``tests/test_kernels.py`` pins the two implementations together.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

PURE, SMOOTH, ZERO = 0, 1, 2


@njit(cache=True)
def f_val(code, a, b, x0, x):
    if code == ZERO:
        return 0.0
    if code == SMOOTH:
        return a * (1.0 + x * x) ** (b / 2)
    if x >= x0:
        return a * x**b
    lvl = a * x0**b
    if x <= x0 / 2:
        return lvl / 2
    y = (x - x0 / 2) / (x0 / 2)
    return lvl / 2 + (lvl / 2) * (3 * y**2 - 2 * y**3) + (lvl * b / 2) * (y**3 - y**2)


@njit(cache=True)
def g_val(code, a, b, x0, slope, m, depth, nodes, vals, dvals, x, fx):
    """(g(x), g'(x)) given fx = f(x); NaN beyond the tabulated range of the smooth family."""
    if x <= 0.0:
        return -depth, 0.0
    if x < x0:
        y = x / x0
        phi = y * y * ((3 - m) + (m - 2) * y)
        big = (3 - m) * y**3 / 3 + (m - 2) * y**4 / 4
        return -depth + slope * x0 * big, slope * phi
    if code == PURE:
        e = 1.0 - b
        return (x**e - x0**e) / (a * e), 1.0 / fx
    n = nodes.size
    if x > nodes[n - 1]:
        return np.nan, 1.0 / fx
    k = np.searchsorted(nodes, x, side="right") - 1
    if k > n - 2:
        k = n - 2
    lo = nodes[k]
    h = nodes[k + 1] - lo
    s = (x - lo) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * vals[k] + h10 * h * dvals[k] + h01 * vals[k + 1] + h11 * h * dvals[k + 1], 1.0 / fx


@njit(cache=True)
def g2_val(code, a, b, x0, slope, m, x, fx):
    """g''(x) given fx = f(x): bridge below x0, -f'/f^2 above."""
    if x <= 0.0:
        return 0.0
    if x < x0:
        y = x / x0
        return slope * (2 * (3 - m) * y + 3 * (m - 2) * y * y) / x0
    if code == ZERO:
        return 0.0
    # f'/f is b/x for the pure family and b x/(1+x^2) for the smooth one
    if code == PURE:
        return -b / (x * fx)
    return -b * x / ((1.0 + x * x) * fx)


@njit(cache=True)
def euler_path(code, a, b, x0, x_init, dts, incs, rec_idx):
    """Explicit Euler with given noise increments; values at step indices ``rec_idx``.

    Returns ``(recorded, diverged)``. After divergence the remaining records
    are NaN.
    """
    out = np.full(rec_idx.size, np.nan)
    x = x_init
    r = 0
    while r < rec_idx.size and rec_idx[r] == 0:
        out[r] = x
        r += 1
    for k in range(dts.size):
        x = x + f_val(code, a, b, x0, x) * dts[k] + incs[k]
        if not math.isfinite(x):
            return out, True
        while r < rec_idx.size and rec_idx[r] == k + 1:
            out[r] = x
            r += 1
    return out, False


# state layout for the jump-adapted kernel
S_X, S_DRIFT, S_STOCH, S_REM, S_SUP, S_DIV, S_NJ, S_QV = 0, 1, 2, 3, 4, 5, 6, 7
N_STATE = 8


@njit(cache=True)
def jump_adapted_chunk(
    code, a, b, x0, slope, m, depth, nodes, vals, dvals, ito,
    comp, sd, times, rec_slot, jt, js, normals, state,
    rec_x, rec_drift, rec_stoch, rec_rem, rec_sup, rec_qv,
    full, ev_t, ev_pre, ev_x, ev_count,
):
    """Advance one chunk of steps ``times[0] -> times[-1]``.

    Between consecutive events (step boundaries and jump times) the state
    moves by ``f(x) h + comp h + sd sqrt(h) Z``; at a jump time the jump is
    added. When ``ito`` is set the three Ito terms are accumulated: the
    drift integral by the trapezoid rule, the stochastic integral with
    left-point g', and the jump remainder. The remainder has two parts:
    the exact second-order differences over the sampled jumps, and ``qv``,
    which sums ``g''/2`` times each squared Gaussian increment and stands in
    for the small jumps the surrogate replaces. ``rec_rem`` and the running
    sup use the total; ``rec_qv`` keeps the surrogate part alone. ``rec_slot[k] >= 0`` marks step
    boundary ``k`` for recording. Returns the number of full-output events
    written; each event stores its time, the value just before any jump
    at that time, and the value after it.
    """
    x = state[S_X]
    drift = state[S_DRIFT]
    stoch = state[S_STOCH]
    rem = state[S_REM]
    sup = state[S_SUP]
    qv = state[S_QV]
    if state[S_DIV] != 0.0:
        return ev_count
    fx = f_val(code, a, b, x0, x)
    gx = 0.0
    gpx = 0.0
    if ito:
        gx, gpx = g_val(code, a, b, x0, slope, m, depth, nodes, vals, dvals, x, fx)
    j = 0
    iz = 0
    nj = jt.size
    for k in range(times.size - 1):
        t = times[k]
        t_end = times[k + 1]
        while True:
            is_jump = j < nj and jt[j] <= t_end
            t_next = jt[j] if is_jump else t_end
            h = t_next - t
            if h > 0.0:
                dbc = comp * h + sd * math.sqrt(h) * normals[iz]
                iz += 1
                xm = x + fx * h + dbc
                if not math.isfinite(xm):
                    state[S_DIV] = 1.0
                    return ev_count
                fm = f_val(code, a, b, x0, xm)
                if ito:
                    gm, gpm = g_val(code, a, b, x0, slope, m, depth, nodes, vals, dvals, xm, fm)
                    drift += 0.5 * (gpx * fx + gpm * fm) * h
                    stoch += gpx * dbc
                    qv += 0.5 * g2_val(code, a, b, x0, slope, m, x, fx) * dbc * dbc
                    if abs(rem + qv) > sup:
                        sup = abs(rem + qv)
                    gx, gpx = gm, gpm
                x, fx = xm, fm
            t = t_next
            x_pre = x
            if is_jump:
                u = js[j]
                xn = x + u
                if not math.isfinite(xn):
                    state[S_DIV] = 1.0
                    return ev_count
                fn = f_val(code, a, b, x0, xn)
                if ito:
                    gn, gpn = g_val(code, a, b, x0, slope, m, depth, nodes, vals, dvals, xn, fn)
                    stoch += gpx * u
                    rem += gn - gx - gpx * u
                    if abs(rem + qv) > sup:
                        sup = abs(rem + qv)
                    gx, gpx = gn, gpn
                x, fx = xn, fn
                j += 1
                state[S_NJ] += 1.0
            if full and (h > 0.0 or is_jump):
                ev_t[ev_count] = t
                ev_pre[ev_count] = x_pre
                ev_x[ev_count] = x
                ev_count += 1
            if not is_jump:
                break
        if ito and not math.isfinite(gx):
            state[S_DIV] = 1.0
            return ev_count
        r = rec_slot[k + 1]
        if r >= 0:
            rec_x[r] = x
            rec_drift[r] = drift
            rec_stoch[r] = stoch
            rec_rem[r] = rem + qv
            rec_sup[r] = sup
            rec_qv[r] = qv
    state[S_X] = x
    state[S_DRIFT] = drift
    state[S_STOCH] = stoch
    state[S_REM] = rem
    state[S_SUP] = sup
    state[S_QV] = qv
    return ev_count
