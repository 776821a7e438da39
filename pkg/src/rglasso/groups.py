"""Group partitions and the active-set bookkeeping of the l1,inf homotopy.

Indices are 0-based throughout the library; conversion to 1-based happens
only at I/O boundaries (config files, CSV dumps).

For a coefficient vector ``w`` the sets are

* ``P`` active groups (``max |w_G| > 0``) and ``Q`` the rest,
* ``A[m]`` the indices attaining the group maximum magnitude, ``B[m]`` the
  other indices of an active group,
* ``C`` the union of the inactive groups.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import BadPartition, InvalidTransition, ZeroSignEntry

TIE_RTOL = 1e-9


@dataclass(frozen=True)
class GroupPartition:
    p: int
    groups: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen = np.zeros(self.p, dtype=int)
        for m, g in enumerate(self.groups):
            if len(g) == 0:
                raise BadPartition(f"group {m + 1} is empty")
            for i in g:
                if not 0 <= i < self.p:
                    raise BadPartition(f"index {i + 1} outside 1..{self.p}")
                seen[i] += 1
        if np.any(seen > 1):
            raise BadPartition(f"overlapping groups at indices {list(np.flatnonzero(seen > 1) + 1)}")
        if np.any(seen == 0):
            raise BadPartition(f"indices {list(np.flatnonzero(seen == 0) + 1)} not covered")

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @cached_property
    def group_of(self) -> np.ndarray:
        out = np.empty(self.p, dtype=int)
        for m, g in enumerate(self.groups):
            out[list(g)] = m
        return out

    @cached_property
    def index_arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(np.array(g, dtype=int) for g in self.groups)

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.array([len(g) for g in self.groups])

    def boundaries(self) -> list[int]:
        """1-based first index of every group (for contiguous layouts)."""
        return [min(g) + 1 for g in self.groups]


def make_partition(p: int, sizes: Sequence[int] | None = None,
                   groups: Sequence[Sequence[int]] | None = None,
                   one_based: bool = False) -> GroupPartition:
    """Build a partition from contiguous group sizes or explicit index lists.

    >>> make_partition(4, sizes=[2, 2]).groups
    ((0, 1), (2, 3))
    """
    if (sizes is None) == (groups is None):
        raise BadPartition("give exactly one of sizes or groups")
    if sizes is not None:
        sizes = [int(s) for s in sizes]
        if any(s <= 0 for s in sizes):
            raise BadPartition(f"group sizes must be positive, got {sizes}")
        if sum(sizes) != p:
            raise BadPartition(f"group sizes sum to {sum(sizes)}, expected p={p}")
        edges = np.cumsum([0] + sizes)
        return GroupPartition(p, tuple(tuple(range(a, b)) for a, b in zip(edges[:-1], edges[1:])))
    shift = 1 if one_based else 0
    return GroupPartition(p, tuple(tuple(int(i) - shift for i in g) for g in groups))


def singleton_partition(p: int) -> GroupPartition:
    return make_partition(p, sizes=[1] * p)


@dataclass(frozen=True)
class ActiveSets:
    """The quintuple (A, B, C, P, Q).

    ``P`` is kept sorted by group id; ``A[m]`` and ``B[m]`` are sorted index
    tuples. Everything else is derived.
    """

    part: GroupPartition
    P: tuple[int, ...] = ()
    A: Mapping[int, tuple[int, ...]] = field(default_factory=dict)
    B: Mapping[int, tuple[int, ...]] = field(default_factory=dict)

    @classmethod
    def empty(cls, part: GroupPartition) -> "ActiveSets":
        return cls(part)

    @cached_property
    def Q(self) -> tuple[int, ...]:
        active = set(self.P)
        return tuple(m for m in range(self.part.n_groups) if m not in active)

    @cached_property
    def A_idx(self) -> np.ndarray:
        return np.array([i for m in self.P for i in self.A[m]], dtype=int)

    @cached_property
    def B_idx(self) -> np.ndarray:
        return np.array([i for m in self.P for i in self.B[m]], dtype=int)

    @cached_property
    def C_idx(self) -> np.ndarray:
        return np.array([i for m in self.Q for i in self.part.groups[m]], dtype=int)

    @cached_property
    def B_owner(self) -> np.ndarray:
        """For each B entry (in B_idx order), the position of its group in P."""
        return np.array([k for k, m in enumerate(self.P) for _ in self.B[m]], dtype=int)

    @cached_property
    def A_owner(self) -> np.ndarray:
        """For each A entry (in A_idx order), the position of its group in P."""
        return np.array([k for k, m in enumerate(self.P) for _ in self.A[m]], dtype=int)

    @cached_property
    def A_tied(self) -> np.ndarray:
        """A entries belonging to groups with |A_m| >= 2."""
        return np.array([i for m in self.P if len(self.A[m]) > 1 for i in self.A[m]], dtype=int)

    def C(self, m: int) -> tuple[int, ...]:
        if m in self.A:
            return ()
        return self.part.groups[m]

    @property
    def order(self) -> int:
        """Dimension of the compact system, |P| + |B|."""
        return len(self.P) + len(self.B_idx)

    def check(self) -> None:
        """Raise InvalidTransition if the set invariants are broken."""
        if list(self.P) != sorted(set(self.P)):
            raise InvalidTransition(f"P not sorted/unique: {self.P}")
        if set(self.A) != set(self.P) or set(self.B) != set(self.P):
            raise InvalidTransition("A/B keys differ from P")
        for m in self.P:
            a, b = set(self.A[m]), set(self.B[m])
            if not a:
                raise InvalidTransition(f"A_{m + 1} is empty")
            if a & b or (a | b) != set(self.part.groups[m]):
                raise InvalidTransition(f"A_{m + 1}, B_{m + 1} do not partition group {m + 1}")

    def key(self) -> tuple:
        return (self.P, tuple((m, self.A[m]) for m in self.P))


def compute_sets(w, part: GroupPartition, tol: float = 0.0, rtol: float = TIE_RTOL) -> ActiveSets:
    """Derive the active sets of ``w``.

    A group is active when its max magnitude exceeds ``tol``. Within an
    active group, indices within ``max(tol, rtol * max)`` of the maximum
    magnitude form ``A[m]``.
    """
    w = np.asarray(w, dtype=float)
    P, A, B = [], {}, {}
    for m, g in enumerate(part.index_arrays):
        mag = np.abs(w[g])
        alpha = mag.max()
        if alpha <= tol:
            continue
        near = mag >= alpha - max(tol, rtol * alpha)
        P.append(m)
        A[m] = tuple(int(i) for i in g[near])
        B[m] = tuple(int(i) for i in g[~near])
    return ActiveSets(part, tuple(P), A, B)


@dataclass(frozen=True)
class SignMatrix:
    """Block-diagonal sign matrix S with ``w_A = S a``.

    Stored as a length-p vector holding ``s_i`` for ``i`` in A and 0
    elsewhere; ``dense`` materialises the |A| x |P| matrix.
    """

    s: np.ndarray

    def dense(self, sets: ActiveSets) -> np.ndarray:
        out = np.zeros((len(sets.A_idx), len(sets.P)))
        row = 0
        for col, m in enumerate(sets.P):
            for i in sets.A[m]:
                out[row, col] = self.s[i]
                row += 1
        return out


def build_sign_matrix(w, sets: ActiveSets, hint=None) -> SignMatrix:
    """Signs of ``w`` on A; ``hint`` supplies signs where ``w_i == 0``."""
    w = np.asarray(w, dtype=float)
    s = np.zeros(sets.part.p)
    for i in sets.A_idx:
        if w[i] != 0.0:
            s[i] = np.sign(w[i])
        elif hint is not None and hint[i] != 0:
            s[i] = np.sign(hint[i])
        else:
            raise ZeroSignEntry(f"no sign available for index {i + 1}")
    return SignMatrix(s)


def apply_action(sets: ActiveSets, condition: int, target: int) -> ActiveSets:
    """Apply one set transition.

    * 1: index ``target`` moves from A to B (requires |A_m| >= 2)
    * 2: index ``target`` moves from B to A
    * 3: group ``target`` leaves P; its indices return to C
    * 4: group ``target`` joins P with every index in A

    Signs are not tracked here; callers keep the sign vector in step.
    """
    part = sets.part
    A, B, P = dict(sets.A), dict(sets.B), list(sets.P)
    if condition in (1, 2):
        i = int(target)
        if not 0 <= i < part.p:
            raise InvalidTransition(f"index {i + 1} outside 1..{part.p}")
        m = int(part.group_of[i])
        if m not in A:
            raise InvalidTransition(f"index {i + 1} belongs to inactive group {m + 1}")
        if condition == 1:
            if i not in A[m]:
                raise InvalidTransition(f"Action 1: index {i + 1} not in A")
            if len(A[m]) < 2:
                raise InvalidTransition(f"Action 1: A_{m + 1} would become empty")
            A[m] = tuple(j for j in A[m] if j != i)
            B[m] = tuple(sorted(B[m] + (i,)))
        else:
            if i not in B[m]:
                raise InvalidTransition(f"Action 2: index {i + 1} not in B")
            B[m] = tuple(j for j in B[m] if j != i)
            A[m] = tuple(sorted(A[m] + (i,)))
    elif condition == 3:
        m = int(target)
        if m not in A:
            raise InvalidTransition(f"Action 3: group {m + 1} not active")
        P.remove(m)
        del A[m], B[m]
    elif condition == 4:
        m = int(target)
        if not 0 <= m < part.n_groups or m in A:
            raise InvalidTransition(f"Action 4: group {m + 1} not inactive")
        P = sorted(P + [m])
        A[m] = tuple(part.groups[m])
        B[m] = ()
    else:
        raise InvalidTransition(f"unknown condition {condition}")
    return ActiveSets(part, tuple(P), A, B)


def with_group(sets: ActiveSets, m: int, A_m: Sequence[int], B_m: Sequence[int]) -> ActiveSets:
    """Replace the A/B split of active group ``m``."""
    A, B = dict(sets.A), dict(sets.B)
    A[m] = tuple(sorted(int(i) for i in A_m))
    B[m] = tuple(sorted(int(i) for i in B_m))
    out = ActiveSets(sets.part, sets.P, A, B)
    out.check()
    return out
