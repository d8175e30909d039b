"""Hot inner loops of the power-allocation fixed points.

Two interchangeable backends: numba @njit kernels (default) and a pure-numpy
fallback. Set VCELLS_NUMBA=0 to force the numpy path; it is also used
automatically when numba is not importable. Both compute the same map; tiny
float differences come only from summation order.

The update map for the matrix problem is, per (user, BS) pair,

    P[u, b] <- W * slope[u, b] / (lam_u * ln2 + W * price[u, b])

where price[u, b] sums every other pair's sensitivity to this pair's power
and lam_u is the user's budget multiplier: zero when the unconstrained row
already fits the budget, otherwise chosen by bisection so that the row sum
equals the budget.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency normally
    numba = None

LN2 = math.log(2.0)
REL_FLOOR_W = 1e-15  # absolute floor for relative power-change metrics


def numba_active() -> bool:
    """True when calls will dispatch to the compiled kernels."""
    return numba is not None and os.environ.get("VCELLS_NUMBA", "1").lower() not in ("0", "false", "no")


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _pair_price_np(g2, noise, slope, P):
    rowsum = P.sum(axis=1)
    total = g2.T @ rowsum
    inj = noise[None, :] + total[None, :] - g2 * P
    w = slope / inj
    colw = w.sum(axis=0)
    return (g2 @ colw)[:, None] - w * g2


def _rows_with_budget_np(slope, price, pmax, w_hz, btol):
    """Apply the update map row-wise, activating budget multipliers as needed."""
    with np.errstate(divide="ignore", invalid="ignore"):
        unconstrained = np.where(slope > 0.0, slope / price, 0.0)
    rowsum = unconstrained.sum(axis=1)
    lam = np.zeros(rowsum.shape[0])
    newP = unconstrained
    over = ~np.isfinite(rowsum) | (rowsum > pmax)
    idx = np.where(over)[0]
    if idx.size:
        A = slope[idx]
        PR = price[idx]
        PM = pmax[idx]

        def row_sums(lams):
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = np.where(A > 0.0, w_hz * A / (lams[:, None] * LN2 + w_hz * PR), 0.0)
            return vals.sum(axis=1)

        lo = np.zeros(idx.size)
        hi = np.ones(idx.size)
        for _ in range(400):
            still = row_sums(hi) > PM
            if not still.any():
                break
            lo[still] = hi[still]
            hi[still] *= 2.0
        for _ in range(300):
            width = hi - lo
            if np.all(width <= 0.1 * btol * hi):
                break
            mid = 0.5 * (lo + hi)
            above = row_sums(mid) > PM
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        newP[idx] = np.where(A > 0.0, w_hz * A / (hi[:, None] * LN2 + w_hz * PR), 0.0)
        lam[idx] = hi
    return newP, lam


def joint_inner_np(g2, noise, pmax, slope, P, w_hz, tol, max_iters, btol):
    """numpy backend of the matrix fixed point. Returns (P, sweeps, change, lam, converged)."""
    change = np.inf
    lam = np.zeros(P.shape[0])
    sweeps = 0
    for sweeps in range(1, max_iters + 1):
        price = _pair_price_np(g2, noise, slope, P)
        newP, lam = _rows_with_budget_np(slope, price, pmax, w_hz, btol)
        change = float(np.max(np.abs(newP - P) / np.maximum(P, REL_FLOOR_W))) if P.size else 0.0
        P = newP
        if change < tol:
            return P, sweeps, change, lam, True
    return P, sweeps, change, lam, False


def assigned_inner_np(gathered, gsel, nsel, pmax, slope, p, tol, max_iters):
    """numpy backend of the per-user fixed point under a fixed decode map.

    gathered[u, t] is the gain from user u to the BS that decodes user t;
    gsel/nsel are each user's own-link gain and receiver noise.
    Returns (p, sweeps, change, converged).
    """
    change = np.inf
    sweeps = 0
    for sweeps in range(1, max_iters + 1):
        received = gathered.T @ p
        inj = nsel + received - gsel * p
        c = slope / inj
        price = gathered @ c - c * gsel
        with np.errstate(divide="ignore", invalid="ignore"):
            newp = np.where(slope > 0.0, np.minimum(pmax, slope / price), 0.0)
        change = float(np.max(np.abs(newp - p) / np.maximum(p, REL_FLOOR_W))) if p.size else 0.0
        p = newp
        if change < tol:
            return p, sweeps, change, True
    return p, sweeps, change, False


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

if numba is not None:

    @numba.njit(cache=True)
    def _joint_inner_nb(g2, noise, pmax, slope, P, w_hz, tol, max_iters, btol):
        U, B = g2.shape
        lam = np.zeros(U)
        newP = np.empty((U, B))
        rowsum = np.empty(U)
        total = np.empty(B)
        colw = np.empty(B)
        w = np.empty((U, B))
        price = np.empty((U, B))
        change = np.inf
        sweeps = 0
        for s in range(max_iters):
            sweeps = s + 1
            for u in range(U):
                acc = 0.0
                for b in range(B):
                    acc += P[u, b]
                rowsum[u] = acc
            for b in range(B):
                acc = 0.0
                for u in range(U):
                    acc += g2[u, b] * rowsum[u]
                total[b] = acc
            for b in range(B):
                colw[b] = 0.0
            for u in range(U):
                for b in range(B):
                    wv = slope[u, b] / (noise[b] + total[b] - g2[u, b] * P[u, b])
                    w[u, b] = wv
                    colw[b] += wv
            for u in range(U):
                acc = 0.0
                for b in range(B):
                    acc += g2[u, b] * colw[b]
                for b in range(B):
                    price[u, b] = acc - w[u, b] * g2[u, b]

            for u in range(U):
                srow = 0.0
                finite = True
                for b in range(B):
                    a = slope[u, b]
                    if a > 0.0:
                        pr = price[u, b]
                        if pr <= 0.0:
                            finite = False
                        else:
                            srow += a / pr
                if finite and srow <= pmax[u]:
                    lam[u] = 0.0
                    for b in range(B):
                        if slope[u, b] > 0.0:
                            newP[u, b] = slope[u, b] / price[u, b]
                        else:
                            newP[u, b] = 0.0
                else:
                    lo = 0.0
                    hi = 1.0
                    for _ in range(400):
                        acc = 0.0
                        for b in range(B):
                            if slope[u, b] > 0.0:
                                acc += w_hz * slope[u, b] / (hi * LN2 + w_hz * price[u, b])
                        if acc <= pmax[u]:
                            break
                        lo = hi
                        hi *= 2.0
                    for _ in range(300):
                        if hi - lo <= 0.1 * btol * hi:
                            break
                        mid = 0.5 * (lo + hi)
                        acc = 0.0
                        for b in range(B):
                            if slope[u, b] > 0.0:
                                acc += w_hz * slope[u, b] / (mid * LN2 + w_hz * price[u, b])
                        if acc > pmax[u]:
                            lo = mid
                        else:
                            hi = mid
                    lam[u] = hi
                    for b in range(B):
                        if slope[u, b] > 0.0:
                            newP[u, b] = w_hz * slope[u, b] / (hi * LN2 + w_hz * price[u, b])
                        else:
                            newP[u, b] = 0.0

            change = 0.0
            for u in range(U):
                for b in range(B):
                    denom = P[u, b]
                    if denom < REL_FLOOR_W:
                        denom = REL_FLOOR_W
                    rel = abs(newP[u, b] - P[u, b]) / denom
                    if rel > change:
                        change = rel
                    P[u, b] = newP[u, b]
            if change < tol:
                return P, sweeps, change, lam, True
        return P, sweeps, change, lam, False

    @numba.njit(cache=True)
    def _assigned_inner_nb(gathered, gsel, nsel, pmax, slope, p, tol, max_iters):
        U = p.shape[0]
        newp = np.empty(U)
        c = np.empty(U)
        change = np.inf
        sweeps = 0
        for s in range(max_iters):
            sweeps = s + 1
            for t in range(U):
                acc = 0.0
                for u in range(U):
                    acc += gathered[u, t] * p[u]
                c[t] = slope[t] / (nsel[t] + acc - gsel[t] * p[t])
            for u in range(U):
                acc = 0.0
                for t in range(U):
                    acc += gathered[u, t] * c[t]
                pr = acc - c[u] * gsel[u]
                if slope[u] > 0.0:
                    if pr > 0.0:
                        val = slope[u] / pr
                        newp[u] = val if val < pmax[u] else pmax[u]
                    else:
                        newp[u] = pmax[u]
                else:
                    newp[u] = 0.0
            change = 0.0
            for u in range(U):
                denom = p[u]
                if denom < REL_FLOOR_W:
                    denom = REL_FLOOR_W
                rel = abs(newp[u] - p[u]) / denom
                if rel > change:
                    change = rel
                p[u] = newp[u]
            if change < tol:
                return p, sweeps, change, True
        return p, sweeps, change, False


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def joint_inner(g2, noise, pmax, slope, P, w_hz, tol, max_iters, btol):
    """Iterate the matrix fixed point until the largest relative power change
    drops below tol or max_iters sweeps elapse. P is consumed (pass a copy to
    keep the input). Returns (P, sweeps, change, lam, converged)."""
    if numba_active():
        return _joint_inner_nb(
            np.ascontiguousarray(g2), np.ascontiguousarray(noise),
            np.ascontiguousarray(pmax), np.ascontiguousarray(slope),
            np.ascontiguousarray(P), float(w_hz), float(tol), int(max_iters), float(btol),
        )
    return joint_inner_np(g2, noise, pmax, slope, P, w_hz, tol, max_iters, btol)


def assigned_inner(gathered, gsel, nsel, pmax, slope, p, tol, max_iters):
    """Per-user fixed point under a fixed decode map; see assigned_inner_np."""
    if numba_active():
        return _assigned_inner_nb(
            np.ascontiguousarray(gathered), np.ascontiguousarray(gsel),
            np.ascontiguousarray(nsel), np.ascontiguousarray(pmax),
            np.ascontiguousarray(slope), np.ascontiguousarray(p),
            float(tol), int(max_iters),
        )
    return assigned_inner_np(gathered, gsel, nsel, pmax, slope, p, tol, max_iters)
