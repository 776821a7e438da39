"""Dense symmetric linear algebra with incrementally maintained inverses.

Inverses are stored explicitly so that ``M^{-1} v`` costs O(n^2); rank-one
updates use Sherman-Morrison, and bordering/deflation handle rows and
columns entering or leaving the matrix.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularSystem, SingularUpdate

PIVOT_TOL = 1e-12
COND_LIMIT = 1e12


@dataclass
class InverseCache:
    """Explicit inverse of a symmetric matrix."""

    inv: np.ndarray

    @classmethod
    def empty(cls) -> "InverseCache":
        return cls(np.zeros((0, 0)))

    @classmethod
    def from_matrix(cls, M) -> "InverseCache":
        M = np.asarray(M, dtype=float)
        if M.shape[0] == 0:
            return cls.empty()
        try:
            inv = np.linalg.inv(M)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
        return cls(0.5 * (inv + inv.T))

    @property
    def order(self) -> int:
        return self.inv.shape[0]

    def solve(self, b) -> np.ndarray:
        return self.inv @ b

    def copy(self) -> "InverseCache":
        return InverseCache(self.inv.copy())

    def scaled(self, c: float) -> "InverseCache":
        """Inverse of ``c * M`` given this inverse of ``M``."""
        return InverseCache(self.inv / c)

    def identity_error(self, M) -> float:
        """Max-norm of ``M @ inv - I``."""
        n = self.order
        if n == 0:
            return 0.0
        return float(np.max(np.abs(np.asarray(M) @ self.inv - np.eye(n))))

    def deviation_from(self, M) -> float:
        """Max-norm gap to a direct inversion of ``M``, relative to its size."""
        if self.order == 0:
            return 0.0
        direct = np.linalg.inv(np.asarray(M, dtype=float))
        scale = max(1.0, float(np.max(np.abs(direct))))
        return float(np.max(np.abs(direct - self.inv))) / scale


def is_symmetric(M, atol: float = 1e-12) -> bool:
    M = np.asarray(M)
    return M.ndim == 2 and M.shape[0] == M.shape[1] and bool(np.all(np.abs(M - M.T) <= atol))


def smw_rank1_update(cache: InverseCache, u, c: float, pivot_tol: float = PIVOT_TOL) -> InverseCache:
    """Return the inverse of ``M + c u u^T`` from the inverse of ``M``."""
    if c == 0.0:
        return cache
    u = np.asarray(u, dtype=float)
    k = cache.inv @ u
    denom = 1.0 + c * float(u @ k)
    if abs(denom) <= pivot_tol:
        raise SingularUpdate(f"Sherman-Morrison denominator {denom:.3e}")
    inv = cache.inv - (c / denom) * np.outer(k, k)
    return InverseCache(inv)


def sym_solve(M, b, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Solve ``M x = b`` for symmetric ``M``.

    Raises SingularSystem when the factorization fails or the condition
    estimate exceeds ``cond_limit``.
    """
    M = np.asarray(M, dtype=float)
    b = np.asarray(b, dtype=float)
    if M.shape[0] == 0:
        return np.zeros(0)
    try:
        with warnings.catch_warnings():
            # an exactly zero pivot is reported below as SingularSystem
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
    except (ValueError, scipy.linalg.LinAlgError) as exc:
        raise SingularSystem(str(exc)) from exc
    if np.any(np.diag(lu) == 0.0):
        raise SingularSystem("zero pivot in factorization")
    anorm = np.linalg.norm(M, 1)
    rcond = scipy.linalg.lapack.dgecon(lu, anorm, norm="1")[0]
    if rcond * cond_limit < 1.0:
        raise SingularSystem(f"condition estimate {1.0 / max(rcond, 1e-300):.3e} exceeds {cond_limit:.1e}")
    return scipy.linalg.lu_solve((lu, piv), b)


@dataclass(frozen=True)
class AddRowCol:
    """Insert a row/column at ``position``.

    ``column`` holds the new off-diagonal entries in the *current* ordering
    (length = current order) and ``diag`` the new diagonal entry.
    """

    position: int
    column: np.ndarray
    diag: float


@dataclass(frozen=True)
class RemoveRowCol:
    position: int


def _insert(cache: InverseCache, change: AddRowCol, pivot_tol: float) -> InverseCache:
    n = cache.order
    pos = change.position
    if not 0 <= pos <= n:
        raise ValueError(f"insert position {pos} outside 0..{n}")
    col = np.asarray(change.column, dtype=float)
    if col.shape != (n,):
        raise ValueError(f"column has shape {col.shape}, expected ({n},)")
    k = cache.inv @ col
    schur = float(change.diag) - float(col @ k)
    if abs(schur) <= pivot_tol:
        raise SingularUpdate(f"bordering pivot {schur:.3e}")
    out = np.empty((n + 1, n + 1))
    # new row/col goes straight to ``pos``; the rest keeps its order
    idx = np.r_[0:pos, pos + 1:n + 1]
    out[np.ix_(idx, idx)] = cache.inv + np.outer(k, k) / schur
    out[idx, pos] = -k / schur
    out[pos, idx] = -k / schur
    out[pos, pos] = 1.0 / schur
    return InverseCache(out)


def _remove(cache: InverseCache, change: RemoveRowCol, pivot_tol: float) -> InverseCache:
    n = cache.order
    pos = change.position
    if not 0 <= pos < n:
        raise ValueError(f"remove position {pos} outside 0..{n - 1}")
    g = cache.inv[pos, pos]
    if abs(g) <= pivot_tol:
        raise SingularUpdate(f"deflation pivot {g:.3e}")
    keep = np.r_[0:pos, pos + 1:n]
    f = cache.inv[keep, pos]
    return InverseCache(cache.inv[np.ix_(keep, keep)] - np.outer(f, f) / g)


def grow_shrink_inverse(cache: InverseCache, change, pivot_tol: float = PIVOT_TOL) -> InverseCache:
    """Apply one bordering (AddRowCol) or deflation (RemoveRowCol) step."""
    if isinstance(change, AddRowCol):
        return _insert(cache, change, pivot_tol)
    if isinstance(change, RemoveRowCol):
        return _remove(cache, change, pivot_tol)
    raise TypeError(f"unknown change descriptor {change!r}")
