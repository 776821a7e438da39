"""Objective, optimality system and closed-form active-set solution.

The penalized problem is

    minimize  0.5 w^T R w - w^T r + lam * sum_m max_{i in G_m} |w_i|

Given the active sets and signs, the nonzero part of ``w`` is described by
the compact vector ``v = (a; w_B)`` where ``a`` holds the group maxima.
Writing ``w = T v`` with the lifting matrix ``T`` (sign columns for the
group maxima, unit columns for B entries) gives

    H = T^T R T,   b = T^T r,   H v = b - lam e

with ``e`` the indicator of the ``a`` block. The scaled subgradient
``lam z`` equals the residual ``r - R w`` on A and C and vanishes on B.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import BadConfig, SingularSystem
from .groups import (ActiveSets, GroupPartition, SignMatrix, build_sign_matrix,
                     compute_sets)
from .linalg import COND_LIMIT, is_symmetric, sym_solve

logger = logging.getLogger(__name__)


@dataclass
class QuadraticData:
    R: np.ndarray
    r: np.ndarray
    lam: float
    gamma: float = 1.0

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        if self.lam < 0:
            raise BadConfig(f"lambda must be >= 0, got {self.lam}")
        if not 0 < self.gamma <= 1:
            raise BadConfig(f"gamma must lie in (0, 1], got {self.gamma}")

    @property
    def p(self) -> int:
        return self.r.shape[0]

    def validate(self, tol: float = 1e-10) -> None:
        if not is_symmetric(self.R, 1e-12 * max(1.0, float(np.max(np.abs(self.R), initial=0.0)))):
            raise BadConfig("R is not symmetric")
        if self.R.shape[0] and np.linalg.eigvalsh(self.R).min() < -tol:
            raise BadConfig("R is not positive semidefinite")

    def with_lambda(self, lam: float) -> "QuadraticData":
        return QuadraticData(self.R, self.r, lam, self.gamma)


@dataclass
class CompactSolution:
    """Solution in active-set coordinates.

    ``lz`` is a full-length vector holding ``lam * z`` on A and C and zeros
    on B. ``lz_A``/``lz_C`` slice it in set order.
    """

    sets: ActiveSets
    S: SignMatrix
    v: np.ndarray
    lz: np.ndarray

    @classmethod
    def zero(cls, part: GroupPartition, r=None) -> "CompactSolution":
        lz = np.zeros(part.p) if r is None else np.array(r, dtype=float)
        return cls(ActiveSets.empty(part), SignMatrix(np.zeros(part.p)), np.zeros(0), lz)

    @property
    def part(self) -> GroupPartition:
        return self.sets.part

    @property
    def lz_A(self) -> np.ndarray:
        return self.lz[self.sets.A_idx]

    @property
    def lz_C(self) -> np.ndarray:
        return self.lz[self.sets.C_idx]

    @property
    def a(self) -> np.ndarray:
        return self.v[:len(self.sets.P)]

    @property
    def w(self) -> np.ndarray:
        return reconstruct_w(self.sets, self.S, self.v, self.part.p)

    def copy(self) -> "CompactSolution":
        return CompactSolution(self.sets, SignMatrix(self.S.s.copy()), self.v.copy(), self.lz.copy())

    def subgradient(self, lam: float) -> np.ndarray:
        """Full-length z (zeros on B)."""
        if lam <= 0:
            raise BadConfig("subgradient needs lam > 0")
        return self.lz / lam


def mixed_norm(w, part: GroupPartition) -> float:
    w = np.abs(np.asarray(w, dtype=float))
    return float(sum(w[g].max() for g in part.index_arrays))


def objective(w, data: QuadraticData, part: GroupPartition) -> float:
    w = np.asarray(w, dtype=float)
    return float(0.5 * w @ data.R @ w - w @ data.r + data.lam * mixed_norm(w, part))


def layout(sets: ActiveSets) -> list[tuple]:
    """Column descriptors of v: ('a', m) for m in P, then ('b', i)."""
    return [("a", m) for m in sets.P] + [("b", int(i)) for i in sets.B_idx]


def lift_matrix(sets: ActiveSets, S: SignMatrix) -> np.ndarray:
    """The p x N matrix T with ``w = T v``."""
    nP = len(sets.P)
    B_idx = sets.B_idx
    T = np.zeros((sets.part.p, nP + len(B_idx)))
    A_idx = sets.A_idx
    if len(A_idx):
        T[A_idx, sets.A_owner] = S.s[A_idx]
    if len(B_idx):
        T[B_idx, nP + np.arange(len(B_idx))] = 1.0
    return T


def reconstruct_w(sets: ActiveSets, S: SignMatrix, v, p: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    w = np.zeros(p)
    A_idx = sets.A_idx
    if len(A_idx):
        w[A_idx] = S.s[A_idx] * v[sets.A_owner]
    B_idx = sets.B_idx
    if len(B_idx):
        w[B_idx] = v[len(sets.P):]
    return w


def compact(w, sets: ActiveSets) -> np.ndarray:
    """Inverse of reconstruct_w on a w consistent with ``sets``."""
    w = np.asarray(w, dtype=float)
    a = [np.abs(w[list(sets.A[m])]).max() for m in sets.P]
    return np.concatenate([np.array(a, dtype=float), w[sets.B_idx]])


def assemble_system(data: QuadraticData, sets: ActiveSets, S: SignMatrix):
    """Return (H, b, e) for the compact system ``H v = b - lam e``."""
    T = lift_matrix(sets, S)
    H = T.T @ data.R @ T
    H = 0.5 * (H + H.T)
    b = T.T @ data.r
    e = np.zeros(T.shape[1])
    e[:len(sets.P)] = 1.0
    return H, b, e


def solve_active(H, b, e, lam: float, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """``v = H^{-1} (b - lam e)``.

    A numerically singular ``H`` is retried once with diagonal jitter
    ``1e-10 * trace(H) / order`` before SingularSystem propagates.
    """
    H = np.asarray(H, dtype=float)
    rhs = np.asarray(b, dtype=float) - lam * np.asarray(e, dtype=float)
    if H.shape[0] == 0:
        return np.zeros(0)
    try:
        return sym_solve(H, rhs, cond_limit)
    except SingularSystem:
        jitter = 1e-10 * np.trace(H) / H.shape[0]
        logger.warning("jittering near-singular H (order %d) by %.3e", H.shape[0], jitter)
        return sym_solve(H + jitter * np.eye(H.shape[0]), rhs, cond_limit)


def compute_subgradients(data: QuadraticData, sets: ActiveSets, S: SignMatrix, v):
    """Return (lam z_A, lam z_C) as residuals of the full KKT system."""
    g = data.r - data.R @ reconstruct_w(sets, S, v, data.p)
    return g[sets.A_idx], g[sets.C_idx]


def full_lz(data: QuadraticData, sets: ActiveSets, w) -> np.ndarray:
    """Residual ``r - R w`` with the B entries zeroed."""
    g = data.r - data.R @ w
    g[sets.B_idx] = 0.0
    return g


def solution_from_w(w, data: QuadraticData, part: GroupPartition, tol: float = 0.0) -> CompactSolution:
    """Package an (exact) solution vector into compact coordinates."""
    w = np.asarray(w, dtype=float)
    sets = compute_sets(w, part, tol)
    S = build_sign_matrix(w, sets)
    v = compact(w, sets)
    return CompactSolution(sets, S, v, full_lz(data, sets, reconstruct_w(sets, S, v, part.p)))


def solve_for_sets(data: QuadraticData, sets: ActiveSets, S: SignMatrix) -> CompactSolution:
    """Closed-form solution for given sets and signs."""
    H, b, e = assemble_system(data, sets, S)
    v = solve_active(H, b, e, data.lam)
    w = reconstruct_w(sets, S, v, data.p)
    return CompactSolution(sets, S, v, full_lz(data, sets, w))


@dataclass
class GroupDiagnostic:
    group: int
    active: bool
    violation: float
    message: str = ""


@dataclass
class OptimalityReport:
    passed: bool
    max_violation: float
    groups: list[GroupDiagnostic] = field(default_factory=list)

    @property
    def failures(self) -> list[GroupDiagnostic]:
        return [g for g in self.groups if g.message]

    def __bool__(self) -> bool:
        return self.passed

    def __str__(self) -> str:
        if self.passed:
            return f"optimal (max violation {self.max_violation:.2e})"
        msgs = "; ".join(f"group {g.group + 1}: {g.message}" for g in self.failures)
        return f"NOT optimal (max violation {self.max_violation:.2e}): {msgs}"


def check_optimality(w, data: QuadraticData, part: GroupPartition, tol: float = 1e-6,
                     zero_tol: float = 0.0, tie_rtol: float = 1e-9) -> OptimalityReport:
    """Verify ``0 in R w - r + lam * d||w||_{1,inf}`` from ``w`` and raw data.

    With ``g = r - R w`` a valid subgradient exists iff, per group,

    * inactive: ``||g_G||_1 <= lam (1 + tol)``
    * active: ``g_B = 0``, ``sign(g_i) = sign(w_i)`` on A and
      ``||g_A||_1 = lam`` (all within ``tol``).

    ``A`` holds the entries within ``max(zero_tol, tie_rtol * max)`` of the
    group maximum. Violations are absolute residual magnitudes.
    """
    w = np.asarray(w, dtype=float)
    g = data.r - data.R @ w
    lam = data.lam
    diags = []
    worst = 0.0
    for m, idx in enumerate(part.index_arrays):
        mag = np.abs(w[idx])
        alpha = mag.max()
        if alpha <= zero_tol:
            excess = float(np.abs(g[idx]).sum() - lam)
            viol = max(0.0, excess)
            msg = f"||g_C||_1 exceeds lambda by {excess:.3e}" if excess > lam * tol else ""
            diags.append(GroupDiagnostic(m, False, viol, msg))
            worst = max(worst, viol)
            continue
        inA = mag >= alpha - max(zero_tol, tie_rtol * alpha)
        gA, gB = g[idx][inA], g[idx][~inA]
        sA = np.sign(w[idx][inA])
        viol_B = float(np.abs(gB).max(initial=0.0))
        viol_sign = float(max(0.0, -(sA * gA).min()))
        viol_norm = float(abs(np.abs(gA).sum() - lam))
        viol = max(viol_B, viol_sign, viol_norm)
        msgs = []
        if viol_B > tol:
            msgs.append(f"|g_B| up to {viol_B:.3e}")
        if viol_sign > tol:
            msgs.append(f"sign mismatch on A by {viol_sign:.3e}")
        if viol_norm > tol:
            msgs.append(f"||g_A||_1 off lambda by {viol_norm:.3e}")
        diags.append(GroupDiagnostic(m, True, viol, ", ".join(msgs)))
        worst = max(worst, viol)
    passed = not any(d.message for d in diags)
    return OptimalityReport(passed, worst, diags)


def subgradient_violation(sol: CompactSolution, data: QuadraticData) -> dict[str, float]:
    """Worst deviation of ``z = (r - R w) / lam`` from the subdifferential.

    Uses the sets and signs carried by ``sol`` (not re-derived from ``w``)
    and the residual recomputed from ``data``. Keys: ``normA``
    (``| ||z_Am||_1 - 1 |``), ``sign`` (sign disagreement on A), ``zB``
    (``|z_B|``) and ``normC`` (excess of ``||z_Cm||_1`` over 1).
    """
    z = (data.r - data.R @ sol.w) / data.lam
    sets = sol.sets
    out = {"normA": 0.0, "sign": 0.0, "zB": 0.0, "normC": 0.0}
    for m in sets.P:
        idx = list(sets.A[m])
        out["normA"] = max(out["normA"], abs(float(np.abs(z[idx]).sum()) - 1.0))
        out["sign"] = max(out["sign"], float(max(0.0, -(sol.S.s[idx] * z[idx]).min())))
    if len(sets.B_idx):
        out["zB"] = float(np.abs(z[sets.B_idx]).max())
    for m in sets.Q:
        idx = list(sets.part.groups[m])
        out["normC"] = max(out["normC"], float(np.abs(z[idx]).sum()) - 1.0)
    return out
