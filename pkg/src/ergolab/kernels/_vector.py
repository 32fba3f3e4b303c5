"""Vectorised numpy implementations of the hot kernels (fallback lane).

Trajectories advance in lockstep; per-trajectory sequences match the loop
lane step for step.  Families whose step is rational arithmetic (boole,
thaler with gamma = 1/2) reproduce the numba lane bit for bit because the
expression order is identical.
"""

import numpy as np

from .codes import (
    EPS_BOUNDARY,
    KIND_BOOLE,
    KIND_THALER_EDGES,
    KIND_THALER_MOD,
    NUDGE_FRACTION,
)

_POW53 = 9007199254740992.0  # 2^53


def _thaler_f_vec(x, inv_g):
    if inv_g == 2.0:
        p = x * x
        return x * (1.0 + p) / ((1.0 - x) * (1.0 + x))
    lg = np.log(x)
    p = np.exp(lg * inv_g)
    return x * (1.0 + p) / (-np.expm1(lg * inv_g))


def _vec_step(kind, par, edges, shifts, x, bh):
    if kind == KIND_BOOLE:
        d = x - 0.5
        near = (d >= -EPS_BOUNDARY) & (d <= EPS_BOUNDARY)
        if near.any():
            bh[near] += 1
            x = np.where(near, x + NUDGE_FRACTION * 0.5, x)
        y = np.where(x < 0.5, x / (1.0 - x), 2.0 * x - 1.0)
        low = y <= EPS_BOUNDARY
        if low.any():
            bh[low] += 1
            y = np.where(low, EPS_BOUNDARY + NUDGE_FRACTION, y)
        return y
    elif kind == KIND_THALER_MOD:
        inv_g = par[1]
        h = par[2]
        u = _thaler_f_vec(x, inv_g)
        k = np.floor(u / h)
        y = u - k * h
        low = y <= EPS_BOUNDARY
        if low.any():
            bh[low] += 1
            y = np.where(low, EPS_BOUNDARY + NUDGE_FRACTION * h, y)
        top = y >= h
        if top.any():
            bh[top] += 1
            y = np.where(top, h - EPS_BOUNDARY, y)
        return y
    else:
        inv_g = par[1]
        i = np.searchsorted(edges, x, side="right") - 1
        np.clip(i, 0, edges.shape[0] - 2, out=i)
        lo = edges[i]
        hi = edges[i + 1]
        near = ((x - lo) <= EPS_BOUNDARY) | ((hi - x) <= EPS_BOUNDARY)
        if near.any():
            bh[near] += 1
            x = np.where(
                near,
                np.minimum(x + NUDGE_FRACTION * (hi - lo), hi - EPS_BOUNDARY),
                x,
            )
        y = _thaler_f_vec(x, inv_g) - shifts[i]
        low = y <= EPS_BOUNDARY
        if low.any():
            bh[low] += 1
            y = np.where(low, EPS_BOUNDARY + NUDGE_FRACTION, y)
        top_edge = edges[-1]
        top = y >= top_edge
        if top.any():
            bh[top] += 1
            y = np.where(top, top_edge - EPS_BOUNDARY, y)
        return y


def occupation_counts(kind, par, edges, shifts, x0, grid, a_lo, a_hi):
    x = np.array(x0, dtype=np.float64)
    n_traj = x.shape[0]
    n_grid = grid.shape[0]
    n_max = int(grid[-1])
    S = np.zeros((n_traj, n_grid), dtype=np.int64)
    s = np.zeros(n_traj, dtype=np.int64)
    bh = np.zeros(n_traj, dtype=np.int64)
    gi = 0
    for n in range(n_max):
        s += (x > a_lo) & (x < a_hi)
        x = _vec_step(kind, par, edges, shifts, x, bh)
        if n + 1 == grid[gi]:
            S[:, gi] = s
            gi += 1
    return S, bh, x


def laplace_occupation(kind, par, edges, shifts, x0, n_max, a_lo, a_hi, lams):
    x = np.array(x0, dtype=np.float64)
    n_traj = x.shape[0]
    n_lam = lams.shape[0]
    R = np.zeros((n_traj, n_lam))
    G1 = np.zeros((n_traj, n_lam))
    G2 = np.zeros((n_traj, n_lam))
    decay = np.exp(-lams)
    w = np.ones(n_lam)
    s = np.zeros(n_traj)
    bh = np.zeros(n_traj, dtype=np.int64)
    for n in range(n_max + 1):
        ind = ((x > a_lo) & (x < a_hi)).astype(np.float64)
        R += w * ind[:, None]
        G1 += w * s[:, None]
        G2 += w * (s * s)[:, None]
        w = w * decay
        s += ind
        x = _vec_step(kind, par, edges, shifts, x, bh)
    return R, G1, G2


def collect_returns(kind, par, edges, shifts, x0, om_lo, om_hi, cap,
                    nmax_time, jstore):
    n_traj = x0.shape[0]
    x = np.array(x0, dtype=np.float64)
    rt = np.zeros((n_traj, jstore), dtype=np.int64)
    nret = np.zeros(n_traj, dtype=np.int64)
    capped = np.zeros(n_traj, dtype=np.uint8)
    bhits = np.zeros(n_traj, dtype=np.int64)
    time = np.zeros(n_traj, dtype=np.int64)
    w = np.zeros(n_traj, dtype=np.int64)
    idx = np.arange(n_traj)
    while idx.size:
        sub_bh = np.zeros(idx.size, dtype=np.int64)
        y = _vec_step(kind, par, edges, shifts, x[idx], sub_bh)
        x[idx] = y
        bhits[idx] += sub_bh
        w[idx] += 1
        back = (y > om_lo) & (y < om_hi)
        rid = idx[back]
        if rid.size:
            rt[rid, nret[rid]] = w[rid]
            time[rid] += w[rid]
            nret[rid] += 1
            w[rid] = 0
        over = idx[(~back) & (w[idx] >= cap)]
        if over.size:
            capped[over] = 1
        alive = (
            (capped[idx] == 0)
            & ((w[idx] > 0) | ((time[idx] < nmax_time) & (nret[idx] < jstore)))
        )
        idx = idx[alive]
    return rt, nret, capped, bhits


def return_partial_sums(kind, par, edges, shifts, x0, om_lo, om_hi, cap,
                        cgrid):
    n_traj = x0.shape[0]
    n_grid = cgrid.shape[0]
    x = np.array(x0, dtype=np.float64)
    phi = np.zeros((n_traj, n_grid), dtype=np.int64)
    capped = np.zeros(n_traj, dtype=np.uint8)
    time = np.zeros(n_traj, dtype=np.int64)
    j = np.zeros(n_traj, dtype=np.int64)
    gi = np.zeros(n_traj, dtype=np.int64)
    w = np.zeros(n_traj, dtype=np.int64)
    idx = np.arange(n_traj)
    bh = np.zeros(n_traj, dtype=np.int64)
    while idx.size:
        sub_bh = np.zeros(idx.size, dtype=np.int64)
        y = _vec_step(kind, par, edges, shifts, x[idx], sub_bh)
        x[idx] = y
        bh[idx] += sub_bh
        w[idx] += 1
        back = (y > om_lo) & (y < om_hi)
        rid = idx[back]
        if rid.size:
            time[rid] += w[rid]
            j[rid] += 1
            w[rid] = 0
            hit = rid[j[rid] == cgrid[np.minimum(gi[rid], n_grid - 1)]]
            if hit.size:
                phi[hit, gi[hit]] = time[hit]
                gi[hit] += 1
        over = idx[(~back) & (w[idx] >= cap)]
        if over.size:
            capped[over] = 1
        alive = (capped[idx] == 0) & (gi[idx] < n_grid)
        idx = idx[alive]
    return phi, capped


def thaler_ladder(inv_g, tau1, n_rungs):
    from . import _loops

    return _loops.thaler_ladder.__wrapped__(inv_g, tau1, n_rungs) \
        if hasattr(_loops.thaler_ladder, "__wrapped__") \
        else _loops.thaler_ladder(inv_g, tau1, n_rungs)


def _jump_return_vec(par, tau, tau_asc, tail_slope, h_d, x):
    """Vectorised single first-return jump; returns (wait, exit)."""
    g = par[0]
    inv_g = par[1]
    h = par[2]
    xi1 = par[3]
    d_last = tau.shape[0] - 1
    u = _thaler_f_vec(x, inv_g)
    k = np.floor(u / h)
    y = u - k * h
    y = np.where(y <= EPS_BOUNDARY, EPS_BOUNDARY + NUDGE_FRACTION * h, y)
    w = np.ones(x.shape[0], dtype=np.int64)
    out = y.copy()
    crawl = y <= xi1
    if crawl.any():
        yc = y[crawl]
        n = np.empty(yc.shape[0], dtype=np.int64)
        shallow = yc > tau[d_last]
        if shallow.any():
            pos = np.searchsorted(tau_asc, yc[shallow], side="left")
            n[shallow] = d_last - pos
        deep = ~shallow
        if deep.any():
            hy = yc[deep] ** (-inv_g)
            n[deep] = d_last + np.floor((hy - h_d) / tail_slope).astype(
                np.int64
            )
        e = np.empty_like(yc)
        small = n <= 64
        if small.any():
            ys = yc[small]
            ns = n[small]
            es = ys.copy()
            for steps in range(1, int(ns.max()) + 1):
                act = ns >= steps
                es[act] = _thaler_f_vec(es[act], inv_g)
            e[small] = es
        big = ~small
        if big.any():
            yb = yc[big]
            nb = n[big]
            hy = yb ** (-inv_g)
            h_lo = np.empty_like(hy)
            h_hi = np.empty_like(hy)
            inl = nb < d_last
            if inl.any():
                h_lo[inl] = tau[nb[inl]] ** (-inv_g)
                h_hi[inl] = tau[nb[inl] + 1] ** (-inv_g)
            if (~inl).any():
                h_lo[~inl] = h_d + (nb[~inl] - d_last) * tail_slope
                h_hi[~inl] = h_lo[~inl] + tail_slope
            frac = (hy - h_lo) / (h_hi - h_lo)
            h1 = tau[1] ** (-inv_g)
            h0 = tau[0] ** (-inv_g)
            e[big] = (h0 + frac * (h1 - h0)) ** (-g)
        out[crawl] = e
        w[crawl] = n + 1
    return w, out


def thaler_jump_partial_sums(par, tau, tail_slope, x0, cgrid):
    n_traj = x0.shape[0]
    n_grid = cgrid.shape[0]
    d_last = tau.shape[0] - 1
    inv_g = par[1]
    h_d = tau[d_last] ** (-inv_g)
    tau_asc = np.ascontiguousarray(tau[::-1])
    x = np.array(x0, dtype=np.float64)
    phi = np.zeros((n_traj, n_grid), dtype=np.int64)
    time = np.zeros(n_traj, dtype=np.int64)
    j = np.zeros(n_traj, dtype=np.int64)
    gi = np.zeros(n_traj, dtype=np.int64)
    idx = np.arange(n_traj)
    while idx.size:
        w, e = _jump_return_vec(par, tau, tau_asc, tail_slope, h_d, x[idx])
        x[idx] = e
        time[idx] += w
        j[idx] += 1
        hit = idx[j[idx] == cgrid[np.minimum(gi[idx], n_grid - 1)]]
        if hit.size:
            phi[hit, gi[hit]] = time[hit]
            gi[hit] += 1
        idx = idx[gi[idx] < n_grid]
    return phi, np.zeros(n_traj, dtype=np.uint8)


def thaler_jump_returns(par, tau, tail_slope, x0, nmax_time, jstore):
    n_traj = x0.shape[0]
    d_last = tau.shape[0] - 1
    inv_g = par[1]
    h_d = tau[d_last] ** (-inv_g)
    tau_asc = np.ascontiguousarray(tau[::-1])
    x = np.array(x0, dtype=np.float64)
    rt = np.zeros((n_traj, jstore), dtype=np.int64)
    nret = np.zeros(n_traj, dtype=np.int64)
    time = np.zeros(n_traj, dtype=np.int64)
    idx = np.arange(n_traj)
    while idx.size:
        w, e = _jump_return_vec(par, tau, tau_asc, tail_slope, h_d, x[idx])
        x[idx] = e
        rt[idx, nret[idx]] = w
        nret[idx] += 1
        time[idx] += w
        idx = idx[(time[idx] < nmax_time) & (nret[idx] < jstore)]
    return rt, nret


def _pool_positions(pool, n):
    q = n >> 6
    r = n & 63
    if r == 0:
        w = pool[:, q]
    else:
        w = (pool[:, q] << np.uint64(r)) | (
            pool[:, q + 1] >> np.uint64(64 - r)
        )
    return (w >> np.uint64(11)) * (1.0 / _POW53)


def doubling_occupation(pool, grid, a_lo, a_hi):
    n_traj = pool.shape[0]
    n_grid = grid.shape[0]
    n_max = int(grid[-1])
    S = np.zeros((n_traj, n_grid), dtype=np.int64)
    s = np.zeros(n_traj, dtype=np.int64)
    gi = 0
    for n in range(n_max):
        x = _pool_positions(pool, n)
        s += (x > a_lo) & (x < a_hi)
        if n + 1 == grid[gi]:
            S[:, gi] = s
            gi += 1
    return S


def doubling_positions(pool, times):
    cols = [_pool_positions(pool, int(n)) for n in times]
    return np.stack(cols, axis=1)
