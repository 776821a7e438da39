"""Machinery shared by the beta and lambda homotopies.

Both paths move the compact solution along a straight line in some scalar
step variable: ``v += step * dv`` and ``lam z += step * dlz`` while the
target ``lam`` itself moves as ``lam0 + lam_rate * step``. A critical point
is the first step at which one of the four set conditions fires:

1. ``z_i`` reaches 0 for some ``i`` in a tied A_m (|A_m| >= 2),
2. ``|w_i|`` reaches the group maximum for some ``i`` in B,
3. a group maximum reaches 0,
4. ``||z_Cm||_1`` reaches 1 for an inactive group.

Each is phrased as a nonnegative slack with a linear (conditions 1-3) or
piecewise-linear (condition 4) dependence on the step.
"""

from __future__ import annotations

import bisect
import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularSystem, SingularUpdate
from .groups import ActiveSets, SignMatrix, apply_action, with_group
from .kkt import CompactSolution, lift_matrix, reconstruct_w
from .linalg import AddRowCol, InverseCache, RemoveRowCol, grow_shrink_inverse
from .wabs import solve_wabs_arrays

logger = logging.getLogger(__name__)

TIE_STEP = 1e-10


@dataclass
class PathEvent:
    """One critical point.

    ``param`` is beta (Step 2) or lambda (Step 1) at the event, ``rho`` the
    step taken from the previous event in the path's own step variable.
    ``target`` is a coefficient index (conditions 1, 2) or a group id
    (conditions 3, 4), 0-based.
    """

    param: float
    condition: int
    target: int
    rho: float
    active_groups: int
    nnz: int
    sign: int = 0

    @property
    def beta(self) -> float:
        return self.param


@dataclass
class PathTrace:
    events: list[PathEvent]
    final: CompactSolution
    Hinv: InverseCache
    rebuilds: int = 0

    @property
    def k(self) -> int:
        return len(self.events)

    @property
    def k2(self) -> int:
        return len(self.events)


@dataclass
class LambdaTrace(PathTrace):
    @property
    def k1(self) -> int:
        return len(self.events)


@dataclass(order=True)
class Candidate:
    step: float
    condition: int
    target: int = field(compare=False)
    sign: int = field(default=0, compare=False)


def _linear_hits(slack, rate):
    """Steps at which ``slack + step * rate`` reaches 0 from above."""
    with np.errstate(divide="ignore", invalid="ignore"):
        steps = np.where(rate < 0, np.maximum(slack, 0.0) / -rate, np.inf)
    return steps


def cond4_group_step(c, k, lam0: float, lam_rate: float, tol: float) -> float:
    """First step at which ``sum |c_i + step k_i|`` reaches ``lam0 + lam_rate * step``.

    Returns 0 for a group already over the bound and still rising, inf when
    no crossing exists.
    """
    f0 = float(np.abs(c).sum()) - lam0
    if f0 > tol:
        # numerically over the bound: activate now only if still rising,
        # otherwise the group is leaving and the next crossing is the exit
        nz = c != 0.0
        slope = float(np.sign(c[nz]) @ k[nz] + np.abs(k[~nz]).sum()) - lam_rate
        if slope > 0:
            return 0.0
    moving = k != 0.0
    const = float(np.abs(c[~moving]).sum())
    y = lam0 - const
    if not moving.any():
        if lam_rate < 0:
            return max(0.0, (lam0 - const) / -lam_rate)
        return math.inf
    km = k[moving]
    roots = solve_wabs_arrays(np.abs(km), -c[moving] / km, y, -lam_rate)
    if roots is None or roots[1] < 0:
        return 0.0 if f0 > tol else math.inf
    return max(0.0, roots[1])


def _singleton_steps(c, k, lam0, lam_rate, tol):
    """Vectorised condition 4 for one-element groups."""
    f0 = np.abs(c) - lam0
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(k - lam_rate > 0, (lam0 - c) / (k - lam_rate), np.inf)
        down = np.where(k + lam_rate < 0, (lam0 + c) / -(k + lam_rate), np.inf)
    steps = np.maximum(np.minimum(up, down), 0.0)
    rising = np.sign(c) * k - lam_rate > 0
    steps[(f0 > tol) & rising] = 0.0
    return steps


def critical_steps(sol: CompactSolution, dv, dlz, lam0: float, lam_rate: float = 0.0,
                   step_max: float = math.inf, prune: bool = True) -> dict[int, Candidate | None]:
    """Smallest admissible step per condition.

    With ``prune`` the condition-4 search skips groups that cannot cross
    before the best candidate found among conditions 1-3.
    """
    sets = sol.sets
    v, lz = sol.v, sol.lz
    nP = len(sets.P)
    out: dict[int, Candidate | None] = {1: None, 2: None, 3: None, 4: None}

    def keep(cond, steps, targets, signs=None):
        if steps.size == 0:
            return
        j = int(np.argmin(steps))
        if steps[j] <= step_max:
            out[cond] = Candidate(float(steps[j]), cond, int(targets[j]),
                                  0 if signs is None else int(signs[j]))

    idx = sets.A_tied
    if idx.size:
        s = sol.S.s[idx]
        keep(1, _linear_hits(s * lz[idx], s * dlz[idx]), idx)

    if nP:
        a, da = v[:nP], dv[:nP]
        B_idx = sets.B_idx
        if B_idx.size:
            own = sets.B_owner
            wB, dwB = v[nP:], dv[nP:]
            plus = _linear_hits(a[own] - wB, da[own] - dwB)
            minus = _linear_hits(a[own] + wB, da[own] + dwB)
            use_minus = minus < plus
            keep(2, np.where(use_minus, minus, plus), B_idx, np.where(use_minus, -1, 1))
        keep(3, _linear_hits(a, da), np.array(sets.P))

    bound = step_max
    if prune:
        bound = min([step_max] + [c.step for c in out.values() if c is not None])
    tol = 1e-10 * max(1.0, lam0)
    part = sets.part
    best = math.inf
    best_m = -1
    singles = [m for m in sets.Q if part.sizes[m] == 1]
    if singles:
        ii = np.array([part.groups[m][0] for m in singles])
        steps = _singleton_steps(lz[ii], dlz[ii], lam0, lam_rate, tol)
        j = int(np.argmin(steps))
        best, best_m = float(steps[j]), singles[j]
    for m in sets.Q:
        if part.sizes[m] == 1:
            continue
        g = part.index_arrays[m]
        c, k = lz[g], dlz[g]
        if prune:
            reach = min(bound, best)
            # upper bound on ||lam z||_1 - lam over [0, reach]
            if math.isfinite(reach):
                lo = float(np.abs(c).sum()) - lam0
                hi = lo + reach * (float(np.abs(k).sum()) - lam_rate)
                if lo <= tol and hi < 0:
                    continue
        step = cond4_group_step(c, k, lam0, lam_rate, tol)
        if step < best:
            best, best_m = step, m
    if best_m >= 0 and best <= step_max:
        out[4] = Candidate(best, 4, best_m)
    return out


def pick_event(cands: dict[int, Candidate | None]) -> Candidate | None:
    """Smallest step; near-ties go to the lower condition number."""
    live = [c for c in cands.values() if c is not None]
    if not live:
        return None
    smallest = min(c.step for c in live)
    tied = [c for c in live if c.step <= smallest + TIE_STEP * max(1.0, smallest)]
    return min(tied, key=lambda c: c.condition)


def _layout_keys(sets: ActiveSets, changed: int, version: int) -> list[tuple]:
    """Column identities of v. Only group ``changed`` can have a different
    A-column before and after an event, so it alone carries ``version``."""
    keys = [("a", m, version if m == changed else 0) for m in sets.P]
    keys += [("b", i) for i in sets.B_idx.tolist()]
    return keys


class Homotopy:
    """Mutable path state: solution, inverse of H and event application.

    ``R`` is the matrix that defines H (``R(0)`` in Step 2, the fixed data
    in Step 1). The inverse is updated by deflation/bordering on every set
    change and rebuilt from scratch if a pivot collapses.
    """

    def __init__(self, R, sol: CompactSolution, Hinv: InverseCache | None = None):
        self.R = R
        self.sol = sol
        self.p = sol.part.p
        self.rebuilds = 0
        if Hinv is None or Hinv.order != sol.sets.order:
            Hinv = self.direct_inverse()
        self.Hinv = Hinv

    def lift(self) -> np.ndarray:
        return lift_matrix(self.sol.sets, self.sol.S)

    def direct_inverse(self) -> InverseCache:
        T = self.lift()
        H = T.T @ self.R @ T
        H = 0.5 * (H + H.T)
        try:
            return InverseCache.from_matrix(H)
        except SingularSystem:
            n = H.shape[0]
            jitter = 1e-10 * np.trace(H) / max(n, 1)
            logger.warning("jittering singular H (order %d) by %.3e", n, jitter)
            return InverseCache.from_matrix(H + jitter * np.eye(n))

    def rebuild(self) -> None:
        self.rebuilds += 1
        self.Hinv = self.direct_inverse()

    def advance(self, step: float, dv, dlz) -> None:
        sol = self.sol
        sol.v = sol.v + step * dv
        sol.lz = sol.lz + step * dlz

    def apply(self, cand: Candidate) -> None:
        """Apply the Action for ``cand`` at the current point."""
        sol = self.sol
        sets, part = sol.sets, sol.part
        nP = len(sets.P)
        alpha = dict(zip(sets.P, sol.v[:nP]))
        w = reconstruct_w(sets, sol.S, sol.v, self.p)
        s = sol.S.s.copy()
        lz = sol.lz.copy()
        cond, tgt = cand.condition, cand.target
        if cond == 1:
            m = int(part.group_of[tgt])
            new = apply_action(sets, 1, tgt)
            w[tgt] = s[tgt] * alpha[m]
            s[tgt] = 0.0
            lz[tgt] = 0.0
        elif cond == 2:
            m = int(part.group_of[tgt])
            new = apply_action(sets, 2, tgt)
            s[tgt] = cand.sign
            w[tgt] = cand.sign * alpha[m]
            lz[tgt] = 0.0
        elif cond == 3:
            new = apply_action(sets, 3, tgt)
            g = part.index_arrays[tgt]
            w[g] = 0.0
            s[g] = 0.0
            del alpha[tgt]
        elif cond == 4:
            g = part.index_arrays[tgt]
            c = lz[g]
            live = np.abs(c) > 1e-12 * max(1.0, float(np.abs(c).max()))
            new = apply_action(sets, 4, tgt)
            if not live.all():
                new = with_group(new, tgt, g[live], g[~live])
            s[g] = np.where(live, np.sign(c), 0.0)
            alpha[tgt] = 0.0
        else:
            raise ValueError(f"bad condition {cond}")
        changed = tgt if cond in (3, 4) else m
        old_keys = _layout_keys(sets, changed, 1)
        new_sets = new
        lz[new_sets.B_idx] = 0.0
        v = np.concatenate([np.array([alpha[m] for m in new_sets.P], dtype=float), w[new_sets.B_idx]])
        new_keys = _layout_keys(new_sets, changed, 2)
        sol.sets, sol.S, sol.v, sol.lz = new_sets, SignMatrix(s), v, lz
        self._update_inverse(old_keys, new_keys)

    def _update_inverse(self, old_keys, new_keys) -> None:
        new_set = set(new_keys)
        old_set = set(old_keys)
        Hinv = self.Hinv
        try:
            for pos in range(len(old_keys) - 1, -1, -1):
                if old_keys[pos] not in new_set:
                    Hinv = grow_shrink_inverse(Hinv, RemoveRowCol(pos))
            # surviving columns keep their relative order, so the current
            # layout is always the subsequence of new_keys held in ``cur``
            cur = [j for j, key in enumerate(new_keys) if key in old_set]
            if len(cur) < len(new_keys):
                T = self.lift()
            for pos, key in enumerate(new_keys):
                if key in old_set:
                    continue
                Rt = self.R @ T[:, pos]
                col = T[:, cur].T @ Rt
                Hinv = grow_shrink_inverse(Hinv, AddRowCol(pos, col, float(T[:, pos] @ Rt)))
                bisect.insort(cur, pos)
        except SingularUpdate:
            logger.info("incremental inverse update failed; rebuilding")
            self.rebuild()
            return
        self.Hinv = Hinv


def write_trace_csv(events, path, param_name: str = "beta") -> None:
    """One row per event; targets are written 1-based."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([param_name, "condition", "target", "rho", "active_groups", "nnz"])
        for ev in events:
            writer.writerow([repr(float(ev.param)), ev.condition, ev.target + 1, repr(float(ev.rho)),
                             ev.active_groups, ev.nnz])
