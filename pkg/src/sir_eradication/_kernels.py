"""Compiled RK4 kernels shared by the public modules.

Controls reach the kernels as piecewise-constant data: ``bps`` holds the
increasing breakpoint times and ``lv`` the levels, with ``len(lv) ==
len(bps) + 1``.  Segment ``k`` covers ``(bps[k-1], bps[k]]``.  Every
segment is integrated with equal steps no longer than ``h`` so that the
control never changes inside a step.
"""

import math

import numpy as np
from numba import njit

FOUND = 0
NOT_REACHED = 1
NONFINITE = 2


@njit(cache=True)
def n_steps(length, h):
    if length <= 0.0:
        return 0
    n = int(math.ceil(length / h - 1e-9))
    return max(n, 1)


@njit(cache=True)
def rk4(beta, gamma, r, s, i, h):
    a1 = -beta * s * i - r * s
    b1 = beta * s * i - gamma * i
    s2 = s + 0.5 * h * a1
    i2 = i + 0.5 * h * b1
    a2 = -beta * s2 * i2 - r * s2
    b2 = beta * s2 * i2 - gamma * i2
    s3 = s + 0.5 * h * a2
    i3 = i + 0.5 * h * b2
    a3 = -beta * s3 * i3 - r * s3
    b3 = beta * s3 * i3 - gamma * i3
    s4 = s + h * a3
    i4 = i + h * b3
    a4 = -beta * s4 * i4 - r * s4
    b4 = beta * s4 * i4 - gamma * i4
    return (s + h * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0,
            i + h * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0)


@njit(cache=True)
def _aug_rhs(beta, gamma, r, v, out):
    s = v[0]
    i = v[1]
    out[0] = -beta * s * i - r * s
    out[1] = beta * s * i - gamma * i
    a11 = -beta * i - r
    a12 = -beta * s
    a21 = beta * i
    a22 = beta * s - gamma
    # Z is stored row-major in v[2:6]
    out[2] = a11 * v[2] + a12 * v[4]
    out[3] = a11 * v[3] + a12 * v[5]
    out[4] = a21 * v[2] + a22 * v[4]
    out[5] = a21 * v[3] + a22 * v[5]


@njit(cache=True)
def rk4_aug(beta, gamma, r, v, h, out):
    k1 = np.empty(6)
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    w = np.empty(6)
    _aug_rhs(beta, gamma, r, v, k1)
    for m in range(6):
        w[m] = v[m] + 0.5 * h * k1[m]
    _aug_rhs(beta, gamma, r, w, k2)
    for m in range(6):
        w[m] = v[m] + 0.5 * h * k2[m]
    _aug_rhs(beta, gamma, r, w, k3)
    for m in range(6):
        w[m] = v[m] + h * k3[m]
    _aug_rhs(beta, gamma, r, w, k4)
    for m in range(6):
        out[m] = v[m] + h * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]) / 6.0


@njit(cache=True)
def _segment_end(bps, seg, t_cap):
    if seg < bps.shape[0] and bps[seg] < t_cap:
        return bps[seg]
    return t_cap


@njit(cache=True)
def crossing(beta, gamma, mu, bps, lv, x, y, h, t_max):
    """First time I falls to ``mu``; returns (t, s, i, status)."""
    if y <= mu and beta * x <= gamma:
        return 0.0, x, y, FOUND
    s = x
    i = y
    t0 = 0.0
    seg = 0
    while True:
        t1 = _segment_end(bps, seg, t_max)
        r = lv[seg]
        n = n_steps(t1 - t0, h)
        if n > 0:
            hh = (t1 - t0) / n
            for k in range(n):
                tk = t0 + k * hh
                s1, i1 = rk4(beta, gamma, r, s, i, hh)
                if not (math.isfinite(s1) and math.isfinite(i1)):
                    return tk, s, i, NONFINITE
                if i > mu and i1 <= mu:
                    lo = 0.0
                    hi = hh
                    sh = s1
                    ih = i1
                    for _ in range(200):
                        mid = 0.5 * (lo + hi)
                        if mid <= lo or mid >= hi:
                            break
                        sm, im = rk4(beta, gamma, r, s, i, mid)
                        if im > mu:
                            lo = mid
                        else:
                            hi = mid
                            sh = sm
                            ih = im
                    return tk + hi, sh, ih, FOUND
                s = s1
                i = i1
        if t1 >= t_max:
            return t1, s, i, NOT_REACHED
        t0 = t1
        seg += 1


@njit(cache=True)
def crossing_sens(beta, gamma, mu, bps, lv, x, y, h, t_max):
    """Crossing with the flow Jacobian Z carried along.

    Returns (t, v, status) with v = (S, I, Z11, Z12, Z21, Z22) at the crossing.
    """
    v = np.zeros(6)
    v[0] = x
    v[1] = y
    v[2] = 1.0
    v[5] = 1.0
    if y <= mu and beta * x <= gamma:
        return 0.0, v, FOUND
    w = np.empty(6)
    wm = np.empty(6)
    t0 = 0.0
    seg = 0
    while True:
        t1 = _segment_end(bps, seg, t_max)
        r = lv[seg]
        n = n_steps(t1 - t0, h)
        if n > 0:
            hh = (t1 - t0) / n
            for k in range(n):
                tk = t0 + k * hh
                rk4_aug(beta, gamma, r, v, hh, w)
                if not (math.isfinite(w[0]) and math.isfinite(w[1])):
                    return tk, v, NONFINITE
                if v[1] > mu and w[1] <= mu:
                    lo = 0.0
                    hi = hh
                    best = w.copy()
                    for _ in range(200):
                        mid = 0.5 * (lo + hi)
                        if mid <= lo or mid >= hi:
                            break
                        rk4_aug(beta, gamma, r, v, mid, wm)
                        if wm[1] > mu:
                            lo = mid
                        else:
                            hi = mid
                            best[:] = wm
                    return tk + hi, best, FOUND
                v[:] = w
        if t1 >= t_max:
            return t1, v, NOT_REACHED
        t0 = t1
        seg += 1


@njit(cache=True)
def _count_samples(bps, h, t_end):
    total = 0
    t0 = 0.0
    seg = 0
    while t0 < t_end:
        t1 = _segment_end(bps, seg, t_end)
        total += n_steps(t1 - t0, h)
        t0 = t1
        seg += 1
    return total + 1


@njit(cache=True)
def path(beta, gamma, bps, lv, x, y, h, t_end):
    """Sampled trajectory on [0, t_end]; returns (t, S, I, r, ok)."""
    m = _count_samples(bps, h, t_end)
    ts = np.empty(m)
    ss = np.empty(m)
    ii = np.empty(m)
    rr = np.empty(m)
    ts[0] = 0.0
    ss[0] = x
    ii[0] = y
    rr[0] = lv[0]
    s = x
    i = y
    idx = 1
    t0 = 0.0
    seg = 0
    while t0 < t_end:
        t1 = _segment_end(bps, seg, t_end)
        r = lv[seg]
        n = n_steps(t1 - t0, h)
        if n > 0:
            hh = (t1 - t0) / n
            for k in range(n):
                s, i = rk4(beta, gamma, r, s, i, hh)
                if not (math.isfinite(s) and math.isfinite(i)):
                    return ts[:idx], ss[:idx], ii[:idx], rr[:idx], False
                ts[idx] = t1 if k == n - 1 else t0 + (k + 1) * hh
                ss[idx] = s
                ii[idx] = i
                # level in force on the step just taken
                rr[idx] = r
                idx += 1
        t0 = t1
        seg += 1
    return ts, ss, ii, rr, True


@njit(cache=True)
def path_sens(beta, gamma, bps, lv, x, y, h, t_end):
    """Trajectory with flow Jacobian; returns (t, V[m, 6], r, ok)."""
    m = _count_samples(bps, h, t_end)
    ts = np.empty(m)
    vs = np.empty((m, 6))
    rr = np.empty(m)
    v = np.zeros(6)
    v[0] = x
    v[1] = y
    v[2] = 1.0
    v[5] = 1.0
    w = np.empty(6)
    ts[0] = 0.0
    vs[0, :] = v
    rr[0] = lv[0]
    idx = 1
    t0 = 0.0
    seg = 0
    while t0 < t_end:
        t1 = _segment_end(bps, seg, t_end)
        r = lv[seg]
        n = n_steps(t1 - t0, h)
        if n > 0:
            hh = (t1 - t0) / n
            for k in range(n):
                rk4_aug(beta, gamma, r, v, hh, w)
                if not (math.isfinite(w[0]) and math.isfinite(w[1])):
                    return ts[:idx], vs[:idx], rr[:idx], False
                v[:] = w
                ts[idx] = t1 if k == n - 1 else t0 + (k + 1) * hh
                vs[idx, :] = v
                rr[idx] = r
                idx += 1
        t0 = t1
        seg += 1
    return ts, vs, rr, True


@njit(cache=True)
def state_at(beta, gamma, bps, lv, x, y, h, t_end):
    s = x
    i = y
    t0 = 0.0
    seg = 0
    while t0 < t_end:
        t1 = _segment_end(bps, seg, t_end)
        r = lv[seg]
        n = n_steps(t1 - t0, h)
        if n > 0:
            hh = (t1 - t0) / n
            for _ in range(n):
                s, i = rk4(beta, gamma, r, s, i, hh)
        t0 = t1
        seg += 1
    return s, i


@njit(cache=True)
def uncontrolled_at(beta, gamma, x, y, h, times):
    """Uncontrolled flow sampled at increasing ``times``, integrated in sequence."""
    m = times.shape[0]
    ss = np.empty(m)
    ii = np.empty(m)
    s = x
    i = y
    t0 = 0.0
    for k in range(m):
        n = n_steps(times[k] - t0, h)
        if n > 0:
            hh = (times[k] - t0) / n
            for _ in range(n):
                s, i = rk4(beta, gamma, 0.0, s, i, hh)
        t0 = times[k]
        ss[k] = s
        ii[k] = i
    return ss, ii


@njit(cache=True)
def full_vaccination_batch(beta, gamma, mu, xs, ys, h, horizon_mult):
    """Eradication time under r = 1 for every (xs[k], ys[k])."""
    bps = np.empty(0)
    lv = np.ones(1)
    m = xs.shape[0]
    out = np.empty(m)
    status = np.empty(m, dtype=np.int64)
    for k in range(m):
        t_max = horizon_mult * (xs[k] + ys[k]) / (mu * gamma)
        t, _, _, st = crossing(beta, gamma, mu, bps, lv, xs[k], ys[k], h, t_max)
        out[k] = t
        status[k] = st
    return out, status


@njit(cache=True)
def switching_objective(beta, gamma, mu, x, y, h, taus, horizon_mult):
    """g(tau) = tau + u_full(S(tau), I(tau)) along the uncontrolled flow."""
    ss, ii = uncontrolled_at(beta, gamma, x, y, h, taus)
    bps = np.empty(0)
    lv = np.ones(1)
    m = taus.shape[0]
    g = np.empty(m)
    for k in range(m):
        if ii[k] <= mu:
            g[k] = taus[k]
            continue
        t_max = horizon_mult * (ss[k] + ii[k]) / (mu * gamma)
        t, _, _, st = crossing(beta, gamma, mu, bps, lv, ss[k], ii[k], h, t_max)
        g[k] = taus[k] + t if st == FOUND else np.inf
    return g
