"""Regularization-path homotopy at fixed data.

With the sets frozen, ``H v = b - lam e`` makes ``v`` affine in lambda with
slope ``-H^{-1} e``, and ``lam z = r - R T v`` follows. The same four set
conditions delimit the linear pieces; condition 4 now compares against a
moving lambda, which shifts every slope of the piecewise-linear search by
-1 (lambda increasing) or +1 (decreasing).

``icap_full_path`` is the non-recursive baseline: it starts from the zero
solution at the smallest lambda for which zero is optimal and follows the
path down to the target.
"""

from __future__ import annotations

import numpy as np

from ._path import Homotopy, LambdaTrace, PathEvent, critical_steps, pick_event
from .errors import PathStall
from .groups import GroupPartition
from .kkt import CompactSolution, QuadraticData
from .linalg import InverseCache


def _refresh_lz(tracker: Homotopy, data: QuadraticData) -> None:
    sol = tracker.sol
    g = data.r - data.R @ sol.w
    g[sol.sets.B_idx] = 0.0
    sol.lz = g


def lambda_max(r, part: GroupPartition) -> float:
    """Largest lambda at which the zero vector is not optimal: max_m ||r_Gm||_1."""
    r = np.abs(np.asarray(r, dtype=float))
    return float(max(r[g].sum() for g in part.index_arrays))


def run_lambda_homotopy(sol: CompactSolution, data: QuadraticData, lambda_from: float, lambda_to: float,
                        Hinv: InverseCache | None = None, max_events: int | None = None,
                        on_event=None, refresh: bool = True) -> LambdaTrace:
    """Follow the solution for ``(data.R, data.r)`` from lambda_from to lambda_to.

    ``data.lam`` is ignored. ``on_event(event, sol, lam)`` fires after each
    critical point.
    """
    if lambda_from <= 0 or lambda_to <= 0:
        raise ValueError("lambda endpoints must be positive")
    p = data.p
    max_events = 50 * p if max_events is None else max_events
    tracker = Homotopy(data.R, sol.copy(), Hinv)
    direction = 1.0 if lambda_to > lambda_from else -1.0
    lam = float(lambda_from)
    events: list[PathEvent] = []
    while lam != lambda_to:
        sets = tracker.sol.sets
        nP = len(sets.P)
        e = np.zeros(sets.order)
        e[:nP] = 1.0
        q = tracker.Hinv.inv @ e
        dv = -direction * q
        if nP:
            dlz = direction * (data.R @ (tracker.lift() @ q))
            dlz[sets.B_idx] = 0.0
        else:
            dlz = np.zeros(p)
        span = abs(lambda_to - lam)
        cand = pick_event(critical_steps(tracker.sol, dv, dlz, lam, direction, span))
        if cand is None or cand.step >= span:
            tracker.advance(span, dv, dlz)
            lam = float(lambda_to)
            break
        tracker.advance(cand.step, dv, dlz)
        lam = lam + direction * cand.step
        tracker.apply(cand)
        if refresh:
            _refresh_lz(tracker, data)
        sets = tracker.sol.sets
        ev = PathEvent(lam, cand.condition, cand.target, cand.step, len(sets.P),
                       len(sets.A_idx) + len(sets.B_idx), cand.sign)
        events.append(ev)
        if on_event is not None:
            on_event(ev, tracker.sol, lam)
        if len(events) > max_events:
            raise PathStall(f"lambda path exceeded {max_events} events",
                            {"lambda": lam, "events": events[-10:], "P": sets.P})
    if refresh:
        _refresh_lz(tracker, data)
    return LambdaTrace(events, tracker.sol, tracker.Hinv, tracker.rebuilds)


def icap_full_path(data: QuadraticData, part: GroupPartition, lambda_target: float | None = None,
                   max_events: int | None = None, on_event=None):
    """Solve from scratch by tracing lambda down from the zero solution.

    Returns ``(w, k_prime, trace)``; ``trace`` is None when the zero vector
    is already optimal.
    """
    lam_t = data.lam if lambda_target is None else lambda_target
    if lam_t <= 0:
        raise ValueError("lambda_target must be positive")
    start = CompactSolution.zero(part, data.r)
    lmax = lambda_max(data.r, part)
    if lam_t >= lmax:
        return np.zeros(part.p), 0, None
    trace = run_lambda_homotopy(start, data, lmax, lam_t, InverseCache.empty(),
                                max_events=max_events, on_event=on_event)
    return trace.final.w, trace.k1, trace
