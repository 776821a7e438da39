"""Online solvers: plain RLS and the recursive l1,inf group lasso.

Each group-lasso update runs two homotopies. The previous solution is
optimal for the discounted data ``(gamma R, gamma r)`` at ``gamma * lam``;
Step 1 moves lambda back up to ``lam`` and Step 2 injects the new sample.
The l1-penalised RLS baseline is the same solver with one group per
coefficient.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .beta_path import run_beta_homotopy
from .errors import BadConfig, SingularSystem, SingularUpdate
from .groups import GroupPartition, singleton_partition
from .kkt import CompactSolution, QuadraticData, check_optimality, full_lz, lift_matrix
from .lambda_path import run_lambda_homotopy
from .linalg import InverseCache, smw_rank1_update

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 1e-2
INVERSE_AUDIT_TOL = 1e-6


class RLSFilter:
    """Exponentially weighted RLS with ``R_0 = delta I``.

    ``update`` returns the prior error ``y - w_{n-1}^T x``.
    """

    def __init__(self, p: int, gamma: float = 1.0, delta: float = DEFAULT_DELTA, track_data: bool = False):
        if delta <= 0:
            raise BadConfig(f"delta must be positive, got {delta}")
        if not 0 < gamma <= 1:
            raise BadConfig(f"gamma must lie in (0, 1], got {gamma}")
        self.p = p
        self.gamma = gamma
        self.delta = delta
        self.w = np.zeros(p)
        self.Rinv = InverseCache(np.eye(p) / delta)
        self.track_data = track_data
        self.R = delta * np.eye(p) if track_data else None
        self.r = np.zeros(p) if track_data else None
        self.samples = 0

    def predict(self, x) -> float:
        return float(self.w @ x)

    def update(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        g = self.Rinv.inv @ x
        alpha = 1.0 / (self.gamma + float(x @ g))
        err = float(y) - float(self.w @ x)
        self.w = self.w + alpha * err * g
        inv = (self.Rinv.inv - alpha * np.outer(g, g)) / self.gamma
        self.Rinv = InverseCache(0.5 * (inv + inv.T))
        if self.track_data:
            self.R = self.gamma * self.R + np.outer(x, x)
            self.r = self.gamma * self.r + x * y
        self.samples += 1
        return err

    def inverse_deviation(self) -> float:
        if self.R is None:
            raise ValueError("construct with track_data=True to audit the inverse")
        return self.Rinv.deviation_from(self.R)


@dataclass
class Counters:
    k1_total: int = 0
    k2_total: int = 0
    samples: int = 0
    rebuilds: int = 0
    audits: int = 0
    audit_failures: int = 0
    max_inverse_dev: float = 0.0
    max_kkt_violation: float = 0.0

    @property
    def k_total(self) -> int:
        return self.k1_total + self.k2_total


@dataclass
class StepInfo:
    """What one update did: event counts and (optionally) the traces."""

    k1: int
    k2: int
    prior_error: float
    lambda_trace: object = None
    beta_trace: object = None


class RecursiveGroupLasso:
    """Online l1,inf-penalised RLS.

    After every ``update`` the coefficients minimise

        0.5 w^T R_n w - w^T r_n + lam * sum_m ||w_Gm||_inf

    with ``R_n = gamma R_{n-1} + x x^T`` and ``r_n = gamma r_{n-1} + x y``,
    ``R_0 = delta I``, ``r_0 = 0``.

    ``audit_every`` > 0 runs a full optimality check and revalidates the
    maintained inverse against direct inversion every that many samples.

    ``event_hook(stage, event, sol, data)`` is called at every critical
    point with ``stage`` in {"lambda", "beta"} and ``data`` the problem the
    post-event ``sol`` solves (discounted data at the event's lambda, or
    ``R(beta), r(beta)`` at lam). Meant for verification; it costs O(p^2)
    per event.
    """

    def __init__(self, part: GroupPartition, gamma: float, lam: float, delta: float = DEFAULT_DELTA,
                 audit_every: int = 0, max_events: int | None = None, keep_traces: bool = False,
                 event_hook=None):
        if lam <= 0:
            raise BadConfig(f"lambda must be positive (lambda=0 is plain RLS), got {lam}")
        if delta <= 0:
            raise BadConfig(f"delta must be positive, got {delta}")
        if not 0 < gamma <= 1:
            raise BadConfig(f"gamma must lie in (0, 1], got {gamma}")
        self.part = part
        self.p = part.p
        self.gamma = float(gamma)
        self.lam = float(lam)
        self.delta = float(delta)
        self.audit_every = int(audit_every)
        self.max_events = max_events
        self.keep_traces = keep_traces
        self.event_hook = event_hook
        self.R = self.delta * np.eye(self.p)
        self.r = np.zeros(self.p)
        self.sol = CompactSolution.zero(part)
        self.Hinv = InverseCache.empty()
        self.counters = Counters()
        self.last: StepInfo | None = None

    @property
    def data(self) -> QuadraticData:
        return QuadraticData(self.R, self.r, self.lam, self.gamma)

    @property
    def w(self) -> np.ndarray:
        return self.sol.w

    def predict(self, x) -> float:
        return float(self.w @ np.asarray(x, dtype=float))

    def update(self, x, y) -> StepInfo:
        x = np.asarray(x, dtype=float)
        y = float(y)
        if x.shape != (self.p,):
            raise ValueError(f"x has shape {x.shape}, expected ({self.p},)")
        prior = y - self.predict(x)
        gamma, lam = self.gamma, self.lam
        data0 = QuadraticData(gamma * self.R, gamma * self.r, lam, gamma)
        sol = self.sol.copy()
        sol.lz = gamma * sol.lz
        H0inv = self.Hinv.scaled(gamma)

        lam_cb = beta_cb = None
        if self.event_hook is not None:
            hook = self.event_hook

            def lam_cb(ev, s, at):
                hook("lambda", ev, s, data0.with_lambda(at))

            def beta_cb(ev, s, beta):
                hook("beta", ev, s, QuadraticData(data0.R + beta * np.outer(x, x), data0.r + beta * x * y, lam, gamma))

        if gamma < 1.0:
            lt = run_lambda_homotopy(sol, data0, gamma * lam, lam, H0inv, max_events=self.max_events,
                                     on_event=lam_cb)
            sol, H0inv, k1 = lt.final, lt.Hinv, lt.k1
            self.counters.rebuilds += lt.rebuilds
        else:
            lt, k1 = None, 0
        bt = run_beta_homotopy(sol, data0, x, y, lam, H0inv, max_events=self.max_events, on_event=beta_cb)
        self.counters.rebuilds += bt.rebuilds

        self.R = data0.R + np.outer(x, x)
        self.r = data0.r + x * y
        self.sol = bt.final
        self.Hinv = self._post_injection_inverse(bt.Hinv, x)
        self._polish()

        c = self.counters
        c.k1_total += k1
        c.k2_total += bt.k2
        c.samples += 1
        if self.audit_every and c.samples % self.audit_every == 0:
            self.audit()
        self.last = StepInfo(k1, bt.k2, prior, lt if self.keep_traces else None,
                             bt if self.keep_traces else None)
        return self.last

    def _post_injection_inverse(self, H0inv: InverseCache, x) -> InverseCache:
        """Inverse of H for R_n = R(0) + x x^T from the one for R(0)."""
        if H0inv.order == 0:
            return H0inv
        d = lift_matrix(self.sol.sets, self.sol.S).T @ x
        try:
            return smw_rank1_update(H0inv, d, 1.0)
        except SingularUpdate:
            self.counters.rebuilds += 1
            return self._direct_inverse()

    def _direct_inverse(self) -> InverseCache:
        T = lift_matrix(self.sol.sets, self.sol.S)
        H = T.T @ self.R @ T
        try:
            return InverseCache.from_matrix(0.5 * (H + H.T))
        except SingularSystem:
            n = H.shape[0]
            return InverseCache.from_matrix(H + 1e-10 * np.trace(H) / n * np.eye(n))

    def _polish(self) -> None:
        """Re-anchor v and lam z on the exact closed form for the current sets."""
        sol = self.sol
        n = sol.sets.order
        if n == 0:
            sol.lz = self.r.copy()
            return
        T = lift_matrix(sol.sets, sol.S)
        e = np.zeros(n)
        e[:len(sol.sets.P)] = 1.0
        sol.v = self.Hinv.inv @ (T.T @ self.r - self.lam * e)
        sol.lz = full_lz(self.data, sol.sets, T @ sol.v)

    def audit(self, tol: float = 1e-6) -> float:
        """Check optimality and the maintained inverse; rebuild it if stale.

        Returns the inverse deviation measured before any rebuild.
        """
        c = self.counters
        c.audits += 1
        rep = check_optimality(self.w, self.data, self.part, tol)
        c.max_kkt_violation = max(c.max_kkt_violation, rep.max_violation)
        if not rep.passed:
            c.audit_failures += 1
            logger.warning("audit at sample %d: %s", c.samples, rep)
        dev = 0.0
        if self.Hinv.order:
            T = lift_matrix(self.sol.sets, self.sol.S)
            dev = self.Hinv.deviation_from(T.T @ self.R @ T)
            c.max_inverse_dev = max(c.max_inverse_dev, dev)
            if dev > INVERSE_AUDIT_TOL:
                logger.info("inverse drifted by %.2e; rebuilding", dev)
                c.rebuilds += 1
                self.Hinv = self._direct_inverse()
                self._polish()
        return dev


def l1_rls(p: int, gamma: float, lam: float, delta: float = DEFAULT_DELTA, **kw) -> RecursiveGroupLasso:
    """Sparse (l1) RLS: the group solver with singleton groups."""
    return RecursiveGroupLasso(singleton_partition(p), gamma, lam, delta, **kw)


# functional spellings of the same operations

def rls_init(p: int, gamma: float = 1.0, delta: float = DEFAULT_DELTA, **kw) -> RLSFilter:
    return RLSFilter(p, gamma, delta, **kw)


def rls_update(state: RLSFilter, x, y) -> RLSFilter:
    state.update(x, y)
    return state


def rgl_init(part: GroupPartition, gamma: float, lam: float, delta: float = DEFAULT_DELTA, **kw) -> RecursiveGroupLasso:
    return RecursiveGroupLasso(part, gamma, lam, delta, **kw)


def rgl_update(state: RecursiveGroupLasso, x, y) -> RecursiveGroupLasso:
    state.update(x, y)
    return state


def predict(state, x) -> float:
    """Prior prediction ``w^T x`` with the current (pre-update) coefficients."""
    return state.predict(x)
