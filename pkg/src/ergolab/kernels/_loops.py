"""Loop-style kernels, numba-jitted when the numba lane is active.

These functions are deliberately written against scalar math so numba can
compile them; they also run (slowly) as plain Python, which the tests use as
a reference on tiny inputs.  The public selection happens in
kernels/__init__.py.
"""

import math

import numpy as np

from ..backend import USE_NUMBA
from .codes import (
    EPS_BOUNDARY,
    KIND_BOOLE,
    KIND_THALER_EDGES,
    KIND_THALER_MOD,
    NUDGE_FRACTION,
)

if USE_NUMBA:
    from numba import njit, prange
else:  # pragma: no cover - exercised only on the numpy lane
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap

    prange = range


@njit(inline="always")
def _thaler_f(x, inv_g):
    # F(x) = x (1 + x^{1/g}) / (1 - x^{1/g}); rational fast path for g = 1/2
    if inv_g == 2.0:
        p = x * x
        return x * (1.0 + p) / ((1.0 - x) * (1.0 + x))
    lg = math.log(x)
    p = math.exp(lg * inv_g)
    den = -math.expm1(lg * inv_g)
    return x * (1.0 + p) / den


@njit(inline="always")
def _thaler_fprime(x, inv_g):
    if inv_g == 2.0:
        p = x * x
        om = (1.0 - x) * (1.0 + x)
        return ((1.0 + 3.0 * p) * om + 2.0 * p * (1.0 + p)) / (om * om)
    lg = math.log(x)
    p = math.exp(lg * inv_g)
    om = -math.expm1(lg * inv_g)
    return ((1.0 + p + inv_g * p) * om + inv_g * p * (1.0 + p)) / (om * om)


@njit(inline="always")
def _locate(edges, x):
    # rightmost i with edges[i] <= x (edges increasing)
    lo = 0
    hi = edges.shape[0] - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if edges[mid] <= x:
            lo = mid
        else:
            hi = mid
    return lo


@njit(inline="always")
def _step(kind, par, edges, shifts, x):
    """One application of the map; returns (y, boundary_hits)."""
    hits = 0
    if kind == KIND_BOOLE:
        d = x - 0.5
        if -EPS_BOUNDARY <= d <= EPS_BOUNDARY:
            x = x + NUDGE_FRACTION * 0.5
            hits += 1
        if x < 0.5:
            y = x / (1.0 - x)
        else:
            y = 2.0 * x - 1.0
        if y <= EPS_BOUNDARY:
            y = EPS_BOUNDARY + NUDGE_FRACTION
            hits += 1
        return y, hits
    elif kind == KIND_THALER_MOD:
        inv_g = par[1]
        h = par[2]
        u = _thaler_f(x, inv_g)
        k = math.floor(u / h)
        y = u - k * h
        if y <= EPS_BOUNDARY:
            y = EPS_BOUNDARY + NUDGE_FRACTION * h
            hits += 1
        elif y >= h:
            y = h - EPS_BOUNDARY
            hits += 1
        return y, hits
    else:  # KIND_THALER_EDGES
        inv_g = par[1]
        i = _locate(edges, x)
        lo = edges[i]
        hi = edges[i + 1]
        if x - lo <= EPS_BOUNDARY or hi - x <= EPS_BOUNDARY:
            x = min(x + NUDGE_FRACTION * (hi - lo), hi - EPS_BOUNDARY)
            hits += 1
        y = _thaler_f(x, inv_g) - shifts[i]
        if y <= EPS_BOUNDARY:
            y = EPS_BOUNDARY + NUDGE_FRACTION
            hits += 1
        top = edges[edges.shape[0] - 1]
        if y >= top:
            y = top - EPS_BOUNDARY
            hits += 1
        return y, hits


@njit(parallel=True, cache=True)
def occupation_counts(kind, par, edges, shifts, x0, grid, a_lo, a_hi):
    """S_n(1_A) at the grid times for each trajectory.

    grid is strictly increasing, grid[-1] = horizon.  Returns
    (S[traj, grid], boundary_hits[traj], final_x[traj]).
    """
    n_traj = x0.shape[0]
    n_grid = grid.shape[0]
    n_max = grid[n_grid - 1]
    S = np.zeros((n_traj, n_grid), dtype=np.int64)
    bhits = np.zeros(n_traj, dtype=np.int64)
    xf = np.empty(n_traj, dtype=np.float64)
    for t in prange(n_traj):
        x = x0[t]
        s = 0
        gi = 0
        hits = 0
        for n in range(n_max):
            if a_lo < x < a_hi:
                s += 1
            x, h = _step(kind, par, edges, shifts, x)
            hits += h
            if n + 1 == grid[gi]:
                S[t, gi] = s
                gi += 1
        bhits[t] = hits
        xf[t] = x
    return S, bhits, xf


@njit(parallel=True, cache=True)
def laplace_occupation(kind, par, edges, shifts, x0, n_max, a_lo, a_hi, lams):
    """Per-trajectory Laplace-weighted occupation sums.

    Returns (R, G1, G2) with, for each rate lam:
      R  = sum_n exp(-lam n) 1_A(x_n)
      Gp = sum_n exp(-lam n) S_n^p,  S_n = #{k < n : x_k in A}
    summed over n = 0..n_max.
    """
    n_traj = x0.shape[0]
    n_lam = lams.shape[0]
    R = np.zeros((n_traj, n_lam), dtype=np.float64)
    G1 = np.zeros((n_traj, n_lam), dtype=np.float64)
    G2 = np.zeros((n_traj, n_lam), dtype=np.float64)
    decay = np.exp(-lams)
    for t in prange(n_traj):
        x = x0[t]
        s = 0.0
        w = np.ones(n_lam, dtype=np.float64)
        for n in range(n_max + 1):
            ind = 1.0 if a_lo < x < a_hi else 0.0
            for l in range(n_lam):
                wl = w[l]
                R[t, l] += wl * ind
                G1[t, l] += wl * s
                G2[t, l] += wl * s * s
                w[l] = wl * decay[l]
            s += ind
            x, _ = _step(kind, par, edges, shifts, x)
    return R, G1, G2


@njit(parallel=True, cache=True)
def collect_returns(kind, par, edges, shifts, x0, om_lo, om_hi, cap,
                    nmax_time, jstore):
    """First-return times to (om_lo, om_hi) by direct iteration.

    Per trajectory, collects return times until the partial sum exceeds
    nmax_time or jstore returns are stored.  capped[t] = 1 flags a wait that
    exceeded cap (collection stops there; reported, never dropped).
    """
    n_traj = x0.shape[0]
    rt = np.zeros((n_traj, jstore), dtype=np.int64)
    nret = np.zeros(n_traj, dtype=np.int64)
    capped = np.zeros(n_traj, dtype=np.uint8)
    bhits = np.zeros(n_traj, dtype=np.int64)
    for t in prange(n_traj):
        x = x0[t]
        time = 0
        j = 0
        hits = 0
        while time < nmax_time and j < jstore:
            w = 0
            returned = False
            while w < cap:
                x, h = _step(kind, par, edges, shifts, x)
                hits += h
                w += 1
                if om_lo < x < om_hi:
                    returned = True
                    break
            if not returned:
                capped[t] = 1
                break
            rt[t, j] = w
            j += 1
            time += w
        nret[t] = j
        bhits[t] = hits
    return rt, nret, capped, bhits


@njit(parallel=True, cache=True)
def return_partial_sums(kind, par, edges, shifts, x0, om_lo, om_hi, cap,
                        cgrid):
    """Partial sums of return times at the given return-count grid."""
    n_traj = x0.shape[0]
    n_grid = cgrid.shape[0]
    phi = np.zeros((n_traj, n_grid), dtype=np.int64)
    capped = np.zeros(n_traj, dtype=np.uint8)
    for t in prange(n_traj):
        x = x0[t]
        time = 0
        j = 0
        gi = 0
        while gi < n_grid:
            w = 0
            returned = False
            while w < cap:
                x, _ = _step(kind, par, edges, shifts, x)
                w += 1
                if om_lo < x < om_hi:
                    returned = True
                    break
            if not returned:
                capped[t] = 1
                break
            j += 1
            time += w
            if j == cgrid[gi]:
                phi[t, gi] = time
                gi += 1
    return phi, capped


@njit(cache=True)
def thaler_ladder(inv_g, tau1, n_rungs):
    """Backward orbit of the leftmost-branch inverse: tau[0] = F(tau1),
    tau[1] = tau1, tau[n+1] = F^{-1}(tau[n]) by warm-started Newton."""
    tau = np.empty(n_rungs + 1, dtype=np.float64)
    tau[0] = _thaler_f(tau1, inv_g)
    tau[1] = tau1
    t = tau1
    for n in range(1, n_rungs):
        target = t
        # Newton from the previous rung (F is convex increasing here)
        for _ in range(80):
            fv = _thaler_f(t, inv_g) - target
            dt = fv / _thaler_fprime(t, inv_g)
            t -= dt
            if abs(dt) <= 1e-17 * t:
                break
        tau[n + 1] = t
    return tau


@njit(inline="always")
def _rung_index(tau, y):
    # tau[1..D] strictly decreasing; returns n with tau[n+1] < y <= tau[n]
    lo = 1
    hi = tau.shape[0] - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tau[mid] >= y:
            lo = mid
        else:
            hi = mid
    return lo


@njit(inline="always")
def _jump_one_return(par, tau, tail_slope, h_d, x):
    """One first-return to (xi1, 1) of the full-image family, with the
    left-branch crawl resolved through the rung ladder.  Returns (wait, exit).
    """
    g = par[0]
    inv_g = par[1]
    h = par[2]
    xi1 = par[3]
    d_last = tau.shape[0] - 1
    u = _thaler_f(x, inv_g)
    k = math.floor(u / h)
    y = u - k * h
    if y <= EPS_BOUNDARY:
        y = EPS_BOUNDARY + NUDGE_FRACTION * h
    if y > xi1:
        return 1, y
    if y > tau[d_last]:
        n = _rung_index(tau, y)
    else:
        hy = y ** (-inv_g)
        n = d_last + int(math.floor((hy - h_d) / tail_slope))
    if n <= 64:
        e = y
        for _ in range(n):
            e = _thaler_f(e, inv_g)
        return n + 1, e
    hy = y ** (-inv_g)
    if n < d_last:
        h_lo = tau[n] ** (-inv_g)
        h_hi = tau[n + 1] ** (-inv_g)
    else:
        h_lo = h_d + (n - d_last) * tail_slope
        h_hi = h_lo + tail_slope
    frac = (hy - h_lo) / (h_hi - h_lo)
    h1 = tau[1] ** (-inv_g)
    h0 = tau[0] ** (-inv_g)
    he = h0 + frac * (h1 - h0)
    return n + 1, he ** (-g)


@njit(parallel=True, cache=True)
def thaler_jump_partial_sums(par, tau, tail_slope, x0, cgrid):
    """Return-time partial sums via ladder jumps (no per-step iteration)."""
    n_traj = x0.shape[0]
    n_grid = cgrid.shape[0]
    d_last = tau.shape[0] - 1
    inv_g = par[1]
    h_d = tau[d_last] ** (-inv_g)
    phi = np.zeros((n_traj, n_grid), dtype=np.int64)
    for t in prange(n_traj):
        x = x0[t]
        time = 0
        j = 0
        gi = 0
        while gi < n_grid:
            w, x = _jump_one_return(par, tau, tail_slope, h_d, x)
            j += 1
            time += w
            if j == cgrid[gi]:
                phi[t, gi] = time
                gi += 1
    return phi, np.zeros(n_traj, dtype=np.uint8)


@njit(parallel=True, cache=True)
def thaler_jump_returns(par, tau, tail_slope, x0, nmax_time, jstore):
    """Individual return times via ladder jumps, horizon-limited."""
    n_traj = x0.shape[0]
    d_last = tau.shape[0] - 1
    inv_g = par[1]
    h_d = tau[d_last] ** (-inv_g)
    rt = np.zeros((n_traj, jstore), dtype=np.int64)
    nret = np.zeros(n_traj, dtype=np.int64)
    for t in prange(n_traj):
        x = x0[t]
        time = 0
        j = 0
        while time < nmax_time and j < jstore:
            w, x = _jump_one_return(par, tau, tail_slope, h_d, x)
            rt[t, j] = w
            j += 1
            time += w
        nret[t] = j
    return rt, nret


@njit(inline="always")
def _pool_bits_at(pool, t, n):
    # 53-bit window starting at bit offset n of trajectory t's bit pool
    q = n >> 6
    r = n & 63
    w = pool[t, q]
    if r > 0:
        w = (w << r) | (pool[t, q + 1] >> (64 - r))
    return w >> np.uint64(11)


@njit(parallel=True, cache=True)
def doubling_occupation(pool, grid, a_lo, a_hi):
    """Occupation counts for the doubling map driven by a random bit pool.

    x_n is the 53-bit window at offset n, so the orbit is an exact doubling
    trajectory of a uniform point with unlimited mantissa.
    """
    n_traj = pool.shape[0]
    n_grid = grid.shape[0]
    n_max = grid[n_grid - 1]
    scale = 1.0 / 9007199254740992.0  # 2^-53
    S = np.zeros((n_traj, n_grid), dtype=np.int64)
    for t in prange(n_traj):
        s = 0
        gi = 0
        for n in range(n_max):
            x = _pool_bits_at(pool, t, n) * scale
            if a_lo < x < a_hi:
                s += 1
            if n + 1 == grid[gi]:
                S[t, gi] = s
                gi += 1
    return S


@njit(parallel=True, cache=True)
def doubling_positions(pool, times):
    """Orbit positions of the bit-pool doubling trajectories at given times."""
    n_traj = pool.shape[0]
    n_times = times.shape[0]
    scale = 1.0 / 9007199254740992.0
    out = np.empty((n_traj, n_times), dtype=np.float64)
    for t in prange(n_traj):
        for i in range(n_times):
            out[t, i] = _pool_bits_at(pool, t, times[i]) * scale
    return out
