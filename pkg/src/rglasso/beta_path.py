"""Sample-injection homotopy: from the solution for ``(R0, r0)`` to the
solution for ``(R0 + x x^T, r0 + x y)`` at fixed lambda.

Between critical points the compact solution moves in closed form along
``g = H0^{-1} d`` with ``d = T^T x``; the progress variable ``rho`` is a
monotone reparametrisation of the injection weight ``beta`` in which all
set conditions become (piecewise) linear.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._path import Candidate, Homotopy, PathEvent, PathTrace, critical_steps, pick_event
from .errors import OutOfRange, PathStall
from .kkt import CompactSolution, QuadraticData, lift_matrix
from .linalg import InverseCache


@dataclass
class SegmentEnv:
    """Quantities fixed along one segment.

    ``t`` is the full-length rate of ``lam z`` per unit rho (zero on B) and
    ``dv = (y - y_hat) g`` the rate of ``v``.
    """

    d: np.ndarray
    g: np.ndarray
    y_hat: float
    sigma_H2: float
    t_A: np.ndarray
    t_C: np.ndarray
    t: np.ndarray
    innovation: float
    dv: np.ndarray


def compute_env(sol: CompactSolution, data0: QuadraticData, H0inv: InverseCache, x, y) -> SegmentEnv:
    """Segment quantities for the current sets.

    ``data0.R`` must be the pre-injection matrix ``R(0)``; ``H0inv`` the
    inverse of ``H`` built from it with the current sets.
    """
    x = np.asarray(x, dtype=float)
    T = lift_matrix(sol.sets, sol.S)
    d = T.T @ x
    g = H0inv.inv @ d
    y_hat = float(d @ sol.v)
    sigma2 = float(d @ g)
    innov = float(y) - y_hat
    t = innov * (x - data0.R @ (T @ g))
    t[sol.sets.B_idx] = 0.0
    return SegmentEnv(d, g, y_hat, sigma2, t[sol.sets.A_idx], t[sol.sets.C_idx], t, innov, innov * g)


def beta_to_rho(beta1: float, beta0: float, sigma_H2: float) -> float:
    if beta1 < beta0:
        raise OutOfRange(f"beta1={beta1} < beta0={beta0}")
    return (beta1 - beta0) / (1.0 + sigma_H2 * beta1)


def rho_to_beta(rho: float, beta0: float, sigma_H2: float) -> float:
    if rho < 0 or sigma_H2 * rho >= 1.0:
        raise OutOfRange(f"rho={rho} outside [0, 1/sigma_H2)")
    return (rho + beta0) / (1.0 - sigma_H2 * rho)


def rho_beta_maps(value: float, beta0: float, sigma_H2: float, to: str = "beta") -> float:
    """Convert between rho and beta1 (``to`` names the output)."""
    if to == "beta":
        return rho_to_beta(value, beta0, sigma_H2)
    if to == "rho":
        return beta_to_rho(value, beta0, sigma_H2)
    raise ValueError(f"to must be 'beta' or 'rho', got {to!r}")


def segment_step(sol: CompactSolution, env: SegmentEnv, beta0: float, beta1: float) -> CompactSolution:
    """Closed-form move from beta0 to beta1 with the sets held fixed."""
    out = sol.copy()
    if beta1 == beta0:
        return out
    rho = beta_to_rho(beta1, beta0, env.sigma_H2)
    out.v = sol.v + rho * env.dv
    out.lz = sol.lz + rho * env.t
    return out


def critical_rho(sol: CompactSolution, env: SegmentEnv, lam: float, prune: bool = False) -> dict[int, Candidate | None]:
    """Per-condition smallest rho in ``(0, 1/sigma_H2)`` with its target."""
    limit = 1.0 / env.sigma_H2 if env.sigma_H2 > 0 else math.inf
    cands = critical_steps(sol, env.dv, env.t, lam, 0.0, limit, prune=prune)
    return {k: (c if c is not None and c.step < limit else None) for k, c in cands.items()}


def _refresh_lz(tracker: Homotopy, data0: QuadraticData, x, y, beta: float) -> None:
    sol = tracker.sol
    w = sol.w
    g = data0.r - data0.R @ w + beta * x * (y - float(x @ w))
    g[sol.sets.B_idx] = 0.0
    sol.lz = g


def run_beta_homotopy(sol: CompactSolution, data0: QuadraticData, x, y, lam: float | None = None,
                      H0inv: InverseCache | None = None, max_events: int | None = None,
                      on_event=None, refresh: bool = True) -> PathTrace:
    """Propagate the solution for ``data0`` to the one with ``(x, y)`` added.

    ``sol`` must be optimal for ``data0`` at ``lam`` (defaults to
    ``data0.lam``). ``on_event(event, sol, beta)`` is called after each
    critical point with the post-action solution. The returned trace
    carries the maintained inverse of ``H0`` for the final sets.
    """
    lam = data0.lam if lam is None else lam
    x = np.asarray(x, dtype=float)
    y = float(y)
    p = x.shape[0]
    max_events = 50 * p if max_events is None else max_events
    tracker = Homotopy(data0.R, sol.copy(), H0inv)
    data0 = QuadraticData(data0.R, data0.r, lam, data0.gamma)
    beta = 0.0
    events: list[PathEvent] = []
    while True:
        env = compute_env(tracker.sol, data0, tracker.Hinv, x, y)
        rho_end = (1.0 - beta) / (1.0 + env.sigma_H2)
        if env.innovation == 0.0 or not np.any(x):
            cand = None
        else:
            cand = pick_event(critical_steps(tracker.sol, env.dv, env.t, lam, 0.0, rho_end))
        if cand is None:
            tracker.advance(rho_end, env.dv, env.t)
            beta = 1.0
            break
        tracker.advance(cand.step, env.dv, env.t)
        beta = min(1.0, rho_to_beta(cand.step, beta, env.sigma_H2))
        tracker.apply(cand)
        if refresh:
            _refresh_lz(tracker, data0, x, y, beta)
        sets = tracker.sol.sets
        ev = PathEvent(beta, cand.condition, cand.target, cand.step, len(sets.P),
                       len(sets.A_idx) + len(sets.B_idx), cand.sign)
        events.append(ev)
        if on_event is not None:
            on_event(ev, tracker.sol, beta)
        if len(events) > max_events:
            raise PathStall(f"beta path exceeded {max_events} events",
                            {"beta": beta, "events": events[-10:], "P": sets.P})
        if beta >= 1.0:
            break
    if refresh:
        _refresh_lz(tracker, data0, x, y, 1.0)
    return PathTrace(events, tracker.sol, tracker.Hinv, tracker.rebuilds)
