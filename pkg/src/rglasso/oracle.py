"""Reference solvers for verification.

Nothing here shares code with the homotopy modules: the objective, the
optimality test and the reduced linear solves are re-derived locally so a
bug on the path side cannot be mirrored here.

* ``proximal-gradient``: accelerated proximal gradient (FISTA with
  restarts) using the exact prox of the group max-norm, followed by a
  support-pattern polish that solves the reduced KKT system exactly and
  keeps it only if it certifies optimality.
* ``active-pattern-enumeration``: brute force over every (active group,
  maximal subset, sign) pattern for tiny problems.
* ``lasso_oracle``: coordinate descent for the plain l1 penalty.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence


@dataclass
class OracleConfig:
    max_iters: int = 200_000
    tol: float = 1e-10
    method: str = "proximal-gradient"

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.method not in ("proximal-gradient", "active-pattern-enumeration"):
            raise ValueError(f"unknown oracle method {self.method!r}")


def project_l1_ball(u, radius: float) -> np.ndarray:
    """Euclidean projection onto ``{x : ||x||_1 <= radius}`` (sort-based)."""
    u = np.asarray(u, dtype=float)
    if radius <= 0:
        return np.zeros_like(u)
    au = np.abs(u)
    if au.sum() <= radius:
        return u.copy()
    mu = np.sort(au)[::-1]
    cs = np.cumsum(mu)
    ks = np.arange(1, u.size + 1)
    # index 0 always qualifies in exact arithmetic; rounding can hide it
    rho = np.flatnonzero(mu - (cs - radius) / ks > 0)
    rho = int(rho[-1]) if rho.size else 0
    theta = (cs[rho] - radius) / (rho + 1)
    return np.sign(u) * np.maximum(au - theta, 0.0)


def prox_linf(u, t: float) -> np.ndarray:
    """``argmin_x t ||x||_inf + 0.5 ||x - u||^2`` via the Moreau identity."""
    return u - project_l1_ball(u, t)


def _groups_of(part):
    return [np.asarray(g, dtype=int) for g in part.groups]


def _penalty(w, groups):
    return sum(np.abs(w[g]).max() for g in groups)


def _objective(w, R, r, lam, groups):
    return 0.5 * w @ R @ w - w @ r + lam * _penalty(w, groups)


def _kkt_gap(w, R, r, lam, groups, rtol=1e-9):
    """Largest violation of the group max-norm optimality conditions."""
    g = r - R @ w
    worst = 0.0
    for idx in groups:
        mag = np.abs(w[idx])
        top = mag.max()
        gi = g[idx]
        if top == 0.0:
            worst = max(worst, np.abs(gi).sum() - lam)
            continue
        on = mag >= top * (1 - rtol)
        s = np.sign(w[idx][on])
        worst = max(worst,
                    np.abs(gi[~on]).max(initial=0.0),
                    -(s * gi[on]).min(),
                    abs(np.abs(gi[on]).sum() - lam))
    return worst


def _pattern_solution(R, r, lam, groups, pattern):
    """Solve the stationarity system for one support pattern.

    ``pattern`` maps group position -> (indices at the max, their signs).
    Returns the full w or None if the reduced system is singular.
    """
    p = r.size
    cols = []
    is_max = []
    for gpos, (top, signs) in pattern.items():
        c = np.zeros(p)
        c[top] = signs
        cols.append(c)
        is_max.append(True)
        for i in groups[gpos]:
            if i not in top:
                c = np.zeros(p)
                c[i] = 1.0
                cols.append(c)
                is_max.append(False)
    if not cols:
        return np.zeros(p)
    L = np.stack(cols, axis=1)
    M = L.T @ R @ L
    rhs = L.T @ r - lam * np.asarray(is_max, dtype=float)
    try:
        if np.linalg.cond(M) > 1e13:
            return None
        coef = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        return None
    return L @ coef


def _polish(w, R, r, lam, groups, tol):
    """Re-solve exactly on the support pattern suggested by ``w``."""
    pattern = {}
    for gpos, idx in enumerate(groups):
        mag = np.abs(w[idx])
        top = mag.max()
        if top <= 1e-9 * max(1.0, np.abs(w).max()):
            continue
        on = mag >= top - 1e-6 * top
        pattern[gpos] = (idx[on], np.sign(w[idx][on]))
    cand = _pattern_solution(R, r, lam, groups, pattern)
    if cand is None:
        return None
    if _kkt_gap(cand, R, r, lam, groups) <= tol:
        return cand
    return None


def _fista(R, r, lam, groups, cfg: OracleConfig, w0=None):
    p = r.size
    L = float(np.linalg.eigvalsh(R).max()) if p else 1.0
    L = max(L, 1e-12)
    step = 1.0 / L
    w = np.zeros(p) if w0 is None else np.array(w0, dtype=float)
    z = w.copy()
    t = 1.0
    gap = np.inf
    for it in range(cfg.max_iters):
        u = z - step * (R @ z - r)
        w_new = u.copy()
        for idx in groups:
            w_new[idx] = prox_linf(u[idx], step * lam)
        # gradient-based adaptive restart
        if (z - w_new) @ (w_new - w) > 0:
            t = 1.0
            z = w_new
        else:
            t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
            z = w_new + ((t - 1) / t_new) * (w_new - w)
            t = t_new
        w = w_new
        if it % 25 == 24:
            polished = _polish(w, R, r, lam, groups, cfg.tol)
            if polished is not None:
                return polished
            gap = _kkt_gap(w, R, r, lam, groups)
            if gap <= cfg.tol:
                return w
    raise NoConvergence(f"proximal gradient stopped after {cfg.max_iters} iterations (KKT gap {gap:.2e})")


def _enumerate(R, r, lam, groups, max_p=12, max_groups=4):
    p = r.size
    if p > max_p or len(groups) > max_groups:
        raise ValueError(f"enumeration limited to p <= {max_p} and <= {max_groups} groups")
    per_group = []
    for idx in groups:
        opts = [None]
        for k in range(1, idx.size + 1):
            for top in itertools.combinations(range(idx.size), k):
                for signs in itertools.product((1.0, -1.0), repeat=k):
                    opts.append((idx[list(top)], np.array(signs)))
        per_group.append(opts)
    best_w, best_f = np.zeros(p), 0.0
    for combo in itertools.product(*per_group):
        pattern = {g: o for g, o in enumerate(combo) if o is not None}
        if not pattern:
            continue
        w = _pattern_solution(R, r, lam, groups, pattern)
        if w is None:
            continue
        f = _objective(w, R, r, lam, groups)
        if f < best_f:
            best_w, best_f = w, f
    return best_w


def oracle_solve(data, part, cfg: OracleConfig | None = None, w0=None) -> np.ndarray:
    """Minimise ``0.5 w'Rw - w'r + lam sum_m ||w_Gm||_inf`` independently.

    ``data`` needs ``R``, ``r`` and ``lam`` attributes. ``w0`` warm-starts the
    proximal-gradient method.
    """
    cfg = cfg or OracleConfig()
    R = np.asarray(data.R, dtype=float)
    r = np.asarray(data.r, dtype=float)
    lam = float(data.lam)
    groups = _groups_of(part)
    if not np.any(r):
        return np.zeros(r.size)
    if cfg.method == "active-pattern-enumeration":
        return _enumerate(R, r, lam, groups)
    return _fista(R, r, lam, groups, cfg, w0)


def oracle_objective(w, data, part) -> float:
    return float(_objective(np.asarray(w, dtype=float), data.R, data.r, data.lam, _groups_of(part)))


def lasso_oracle(R, r, lam: float, tol: float = 1e-13, max_sweeps: int = 100_000, w0=None) -> np.ndarray:
    """``argmin 0.5 w'Rw - w'r + lam ||w||_1`` by cyclic coordinate descent.

    Converged iterates are polished on their sign pattern and accepted once
    the subgradient conditions hold to ``1e-11``.
    """
    R = np.asarray(R, dtype=float)
    r = np.asarray(r, dtype=float)
    p = r.size
    w = np.zeros(p) if w0 is None else np.array(w0, dtype=float)
    diag = np.diag(R).copy()
    grad_part = R @ w
    for sweep in range(max_sweeps):
        delta = 0.0
        for j in range(p):
            if diag[j] <= 0:
                continue
            rho_j = r[j] - grad_part[j] + diag[j] * w[j]
            new = np.sign(rho_j) * max(abs(rho_j) - lam, 0.0) / diag[j]
            if new != w[j]:
                grad_part += R[:, j] * (new - w[j])
                delta = max(delta, abs(new - w[j]))
                w[j] = new
        if sweep % 10 == 9 or delta <= tol:
            support = np.flatnonzero(w)
            cand = np.zeros(p)
            if support.size:
                s = np.sign(w[support])
                try:
                    cand[support] = np.linalg.solve(R[np.ix_(support, support)], r[support] - lam * s)
                except np.linalg.LinAlgError:
                    cand = None
            if cand is not None and np.all(np.sign(cand[support]) == np.sign(w[support])):
                g = r - R @ cand
                ok_on = np.abs(g[support] - lam * np.sign(cand[support])).max(initial=0.0) <= 1e-11
                off = np.setdiff1d(np.arange(p), support)
                ok_off = np.abs(g[off]).max(initial=0.0) <= lam + 1e-11
                if ok_on and ok_off:
                    return cand
        if delta <= tol:
            break
    raise NoConvergence(f"coordinate descent did not certify a solution after {sweep + 1} sweeps")


def wabs_bisection(a, xs, y: float, slope_offset: float = 0.0, iters: int = 200):
    """Sublevel interval of ``h(x) = sum a_i |x - x_i| + slope_offset x`` at ``y``.

    Reference for the sorted-breakpoint solver: evaluates ``h`` directly,
    locates its minimum over the breakpoints, then bisects outwards. An end
    is reported infinite when ``h`` stays at or below ``y`` for 2**60 units.
    Returns ``(x_min, x_max)`` or None.
    """
    a = np.asarray(a, dtype=float)
    xs = np.asarray(xs, dtype=float)

    def h(x):
        return float(a @ np.abs(x - xs) + slope_offset * x)

    hb = [h(x) for x in xs]
    start = float(xs[int(np.argmin(hb))])
    if h(start) > y:
        # the minimum may sit at infinity when the linear term dominates
        for direction in (1.0, -1.0):
            far = start + direction * 2.0 ** 60
            if h(far) <= y:
                start = _bisect_inside(h, start, far, y)
                break
        else:
            return None

    ends = []
    for direction in (-1.0, 1.0):
        step = 1.0
        while step < 2.0 ** 60 and h(start + direction * step) <= y:
            step *= 2.0
        if step >= 2.0 ** 60:
            ends.append(direction * math.inf)
            continue
        lo, hi = start, start + direction * step   # h(lo) <= y < h(hi)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if h(mid) <= y:
                lo = mid
            else:
                hi = mid
        ends.append(lo)
    return ends[0], ends[1]


def _bisect_inside(h, outside, inside, y, iters=400):
    """A point with ``h <= y`` between a point above and one below ``y``."""
    for _ in range(iters):
        mid = 0.5 * (outside + inside)
        if mid in (outside, inside):
            break
        if h(mid) <= y:
            inside = mid
        else:
            outside = mid
    return inside
