"""Roots of a weighted sum of absolute values.

Solves ``h(x) = sum_i a_i |x - x_i| + c x = y`` for ``a_i > 0`` by sorting
the breakpoints and walking the piecewise-linear convex ``h``. Cost is
dominated by the sort, O(N log N).

The returned pair is the interval ``{x : h(x) <= y}``; for the usual
coercive case (``|c| < sum a_i``) its endpoints are the two roots. When the
linear term makes ``h`` monotone one end can be infinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class WabsProblem:
    a: np.ndarray
    xs: np.ndarray
    y: float
    slope_offset: float = 0.0

    def __post_init__(self):
        self.a = np.atleast_1d(np.asarray(self.a, dtype=float))
        self.xs = np.atleast_1d(np.asarray(self.xs, dtype=float))
        if self.a.shape != self.xs.shape or self.a.size == 0:
            raise ValueError("a and xs must be nonempty and of equal length")
        if np.any(self.a <= 0):
            raise ValueError("weights must be positive")

    def h(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (self.a * np.abs(x[..., None] - self.xs)).sum(-1) + self.slope_offset * x


def _merged(prob: WabsProblem):
    order = np.argsort(prob.xs, kind="stable")
    xs, a = prob.xs[order], prob.a[order]
    if xs.size > 1:
        new = np.r_[True, np.diff(xs) != 0]
        if not new.all():
            starts = np.flatnonzero(new)
            a = np.add.reduceat(a, starts)
            xs = xs[starts]
    return xs, a


def breakpoint_slopes(prob: WabsProblem):
    """Sorted breakpoints, slopes ``k_0..k_N`` and values ``h`` at breakpoints."""
    xs, a = _merged(prob)
    k = np.empty(xs.size + 1)
    k[0] = -a.sum() + prob.slope_offset
    k[1:] = k[0] + 2.0 * np.cumsum(a)
    h = np.empty(xs.size)
    h[0] = (a[1:] * np.abs(xs[0] - xs[1:])).sum() + prob.slope_offset * xs[0]
    if xs.size > 1:
        h[1:] = h[0] + np.cumsum(k[1:-1] * np.diff(xs))
    return xs, k, h


def solve_wabs(prob: WabsProblem):
    """Return ``(x_min, x_max)`` with ``h = y`` at both ends, or None.

    A target equal to ``h`` at a breakpoint (to a few ulps) returns that
    breakpoint exactly.
    """
    xs, k, h = breakpoint_slopes(prob)
    y = float(prob.y)
    n = xs.size
    slack = 8 * np.finfo(float).eps * max(1.0, abs(y), float(np.abs(h).max()))
    hit = np.abs(h - y) <= slack
    below = np.flatnonzero((h <= y) | hit)
    if below.size == 0:
        # every breakpoint lies above y: only a ray can dip below it
        if k[0] > 0:
            return -math.inf, xs[0] + (y - h[0]) / k[0]
        if k[n] < 0:
            return xs[-1] + (y - h[-1]) / k[n], math.inf
        return None
    j, l = below[0], below[-1]
    if hit[j] and (j > 0 or k[0] < 0):
        x_min = xs[j]
    elif j == 0:
        x_min = xs[0] + (y - h[0]) / k[0] if k[0] < 0 else -math.inf
    else:
        x_min = xs[j] + (y - h[j]) / k[j]
    if hit[l] and (l < n - 1 or k[n] > 0):
        x_max = xs[l]
    elif l == n - 1:
        x_max = xs[-1] + (y - h[-1]) / k[n] if k[n] > 0 else math.inf
    else:
        x_max = xs[l] + (y - h[l]) / k[l + 1]
    return float(x_min), float(x_max)


def solve_wabs_arrays(a, xs, y, slope_offset=0.0):
    return solve_wabs(WabsProblem(a, xs, y, slope_offset))
