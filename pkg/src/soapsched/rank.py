"""Rank functions: age -> priority (lower rank is served first).

For a discrete distribution with n atoms, the expected-remaining-size rank
falls at slope -1 between atoms and jumps up at each atom; its increasing
envelope (the monotone variant) is therefore a step function. The optimal
stopping-age rank is the minimum over candidate stopping atoms of the
efficiency ratio eta(a, b) and is piecewise linear and decreasing between
atoms. Construction costs: O(n) for the expected-remaining ranks, O(n^2)
for the stopping-age ranks (all candidate pairs via prefix aggregates).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dist import DiscreteDist
from .errors import DomainError, NoRankFunctionError, ParameterError, UndefinedRatioError

_TOL = 1e-12


class Policy(str, Enum):
    GITTINS = "gittins"
    SERPT = "serpt"
    MSERPT = "mserpt"
    FB = "fb"
    FCFS = "fcfs"
    SRPT = "srpt"
    PS = "ps"

    @staticmethod
    def parse(name) -> "Policy":
        if isinstance(name, Policy):
            return name
        try:
            return Policy(str(name).lower().replace("-", ""))
        except ValueError:
            raise ParameterError(f"unknown policy {name!r}") from None


class PiecewiseLinearFn:
    """Piecewise linear function on [0, end).

    Stored as breakpoints: `ages` (strictly increasing, ages[0] == 0),
    `values[i]` = value at ages[i]+ and `slopes[i]` = slope on
    [ages[i], ages[i+1]). Jumps occur only at breakpoints; within a piece
    the value is exactly linear.
    """

    def __init__(self, ages, values, slopes, end: float):
        self.ages = np.asarray(ages, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.slopes = np.asarray(slopes, dtype=float)
        self.end = float(end)
        if self.ages.size == 0 or self.ages[0] != 0.0:
            raise ParameterError("breakpoints must start at age 0")
        if np.any(np.diff(self.ages) <= 0) or self.ages[-1] >= self.end:
            raise ParameterError("breakpoint ages must be strictly increasing and below end")

    def _piece(self, a: float) -> int:
        if not 0.0 <= a < self.end:
            raise DomainError(f"age {a!r} outside domain [0, {self.end!r})")
        return int(np.searchsorted(self.ages, a, side="right")) - 1

    def value(self, a: float) -> float:
        i = self._piece(a)
        return float(self.values[i] + self.slopes[i] * (a - self.ages[i]))

    __call__ = value

    def left_limit(self, a: float) -> float:
        """Value approaching a from below (a > 0)."""
        if not 0.0 < a <= self.end:
            raise DomainError(f"no left limit at {a!r}")
        i = int(np.searchsorted(self.ages, a, side="left")) - 1
        return float(self.values[i] + self.slopes[i] * (a - self.ages[i]))

    def pieces(self):
        """Yield (lo, hi, value_at_lo, slope) for each piece."""
        for i in range(self.ages.size):
            hi = self.ages[i + 1] if i + 1 < self.ages.size else self.end
            yield float(self.ages[i]), float(hi), float(self.values[i]), float(self.slopes[i])

    def is_nondecreasing(self, tol: float = _TOL) -> bool:
        if np.any(self.slopes < -tol):
            return False
        for i in range(1, self.ages.size):
            if self.values[i] < self.left_limit(self.ages[i]) - tol:
                return False
        return True

    def envelope(self) -> "PiecewiseLinearFn":
        return increasing_envelope(self)


def _compact(ages, values, slopes, end):
    """Drop zero-length pieces and merge colinear neighbours."""
    out_a, out_v, out_s = [], [], []
    for a, v, s in zip(ages, values, slopes):
        if out_a:
            prev_end_val = out_v[-1] + out_s[-1] * (a - out_a[-1])
            if a == out_a[-1]:
                # replace: later entry at the same age wins (jump)
                out_v[-1], out_s[-1] = v, s
                continue
            if abs(prev_end_val - v) <= 0.0 and out_s[-1] == s:
                continue  # colinear continuation
        out_a.append(a)
        out_v.append(v)
        out_s.append(s)
    return PiecewiseLinearFn(out_a, out_v, out_s, end)


def increasing_envelope(f: PiecewiseLinearFn) -> PiecewiseLinearFn:
    """Running max a -> max_{0 <= b <= a} f(b); nondecreasing, >= f, idempotent."""
    ages, values, slopes = [], [], []

    def emit(a, v, s):
        if ages and ages[-1] == a:
            values[-1], slopes[-1] = v, s  # same-age entry: later wins
        else:
            ages.append(a)
            values.append(v)
            slopes.append(s)

    m = -np.inf
    for lo, hi, val, slope in f.pieces():
        # envelope level at lo: either an up-jump to val or flat at m
        if val > m:
            m = val
        emit(lo, m, 0.0)
        if slope > 0.0:
            top = val + slope * (hi - lo)
            if top > m:
                start = lo if val >= m else lo + (m - val) / slope
                emit(start, m, slope)
                m = top
    return _compact(ages, values, slopes, f.end)


def serpt_rank(dist: DiscreteDist) -> PiecewiseLinearFn:
    """Expected remaining size rank: r(a) = int_a^inf tail / tail(a).

    Slope -1 between atoms, up-jump at every atom; built in O(n).
    """
    sizes, tails = dist.sizes, dist.tail_after
    imin = dist.cum_first + sizes * tails  # E[min(X, x_i)]
    mean = dist.mean
    ages = [0.0]
    values = [mean]
    for i in range(dist.n - 1):
        ages.append(float(sizes[i]))
        values.append(float((mean - imin[i]) / tails[i]))
    slopes = [-1.0] * len(ages)
    return PiecewiseLinearFn(ages, values, slopes, dist.x_max)


def mserpt_rank(dist: DiscreteDist) -> PiecewiseLinearFn:
    """Monotone variant: increasing envelope of the expected-remaining rank."""
    return increasing_envelope(serpt_rank(dist))


def efficiency(dist: DiscreteDist, a: float, b: float) -> float:
    """eta(a, b) = int_a^b tail / (tail(a) - tail(b)).

    Expected service in (a, b] per unit of completion probability there.
    """
    if not 0.0 <= a < b <= dist.x_max:
        raise ParameterError(f"need 0 <= a < b <= x_max, got a={a!r}, b={b!r}")
    ta, tb = dist.tail(a), dist.tail(b)
    if ta - tb <= 0.0:
        raise UndefinedRatioError(f"no completion mass in ({a!r}, {b!r}]")
    return dist.int_tail(a, b) / (ta - tb)


@dataclass(frozen=True)
class GittinsTable:
    """Rank and minimizing stopping age at 0 and at each interior atom."""

    ages: np.ndarray
    ranks: np.ndarray
    b_star: np.ndarray


class GittinsFn:
    """Optimal stopping-age rank: r(a) = min over atoms b > a of eta(a, b).

    Exact at any age. Between atoms the curve is the lower envelope of the
    per-candidate linear forms; it is evaluated lazily per segment from
    cached coefficient arrays rather than materialized, keeping
    construction at O(n^2) worst case. Decreasing within segments with an
    up-jump at every atom, so its increasing envelope is the step function
    through the atom ranks.
    """

    def __init__(self, dist: DiscreteDist):
        self.dist = dist
        self.end = dist.x_max
        sizes, tails = dist.sizes, dist.tail_after
        self._imin = dist.cum_first + sizes * tails
        n = dist.n
        # ranks and minimizing stopping atoms at age 0 and interior atoms
        ages = np.concatenate(([0.0], sizes[: n - 1]))
        ranks = np.empty(n)
        b_star = np.empty(n)
        for k in range(n):
            # age ages[k]; candidates are atoms with index >= k
            imin_a = 0.0 if k == 0 else self._imin[k - 1]
            t_seg = 1.0 if k == 0 else tails[k - 1]
            etas = (self._imin[k:] - imin_a) / (t_seg - tails[k:])
            j = int(np.argmin(etas[::-1]))  # prefer the largest minimizer
            j = etas.size - 1 - j
            ranks[k] = etas[j]
            b_star[k] = sizes[k + j]
        self.table = GittinsTable(ages=ages, ranks=ranks, b_star=b_star)
        self._denom_cache: dict[int, np.ndarray] = {}

    def _segment(self, a: float) -> int:
        """Index s such that a lies in [x_{s-1}, x_s); candidates are atoms s..n-1."""
        if not 0.0 <= a < self.end:
            raise DomainError(f"age {a!r} outside domain [0, {self.end!r})")
        return int(np.searchsorted(self.dist.sizes, a, side="right"))

    def value(self, a: float) -> float:
        s = self._segment(a)
        tails = self.dist.tail_after
        t_seg = 1.0 if s == 0 else tails[s - 1]
        denom = self._denom_cache.get(s)
        if denom is None:
            denom = t_seg - tails[s:]
            self._denom_cache[s] = denom
        imin_lo = 0.0 if s == 0 else self._imin[s - 1]
        x_lo = 0.0 if s == 0 else self.dist.sizes[s - 1]
        imin_a = imin_lo + t_seg * (a - x_lo)
        return float(np.min((self._imin[s:] - imin_a) / denom))

    __call__ = value

    def envelope(self) -> PiecewiseLinearFn:
        """Step envelope through the atom ranks (interior is decreasing)."""
        t = self.table
        ages, values = [0.0], [t.ranks[0]]
        level = t.ranks[0]
        for a, r in zip(t.ages[1:], t.ranks[1:]):
            if r > level:
                level = r
                ages.append(float(a))
                values.append(float(r))
        return PiecewiseLinearFn(ages, values, [0.0] * len(ages), self.end)


def gittins_rank(dist: DiscreteDist) -> tuple[GittinsFn, GittinsTable]:
    fn = GittinsFn(dist)
    return fn, fn.table


def fb_rank(dist: DiscreteDist) -> PiecewiseLinearFn:
    """Least-attained-service: rank equals age."""
    return PiecewiseLinearFn([0.0], [0.0], [1.0], dist.x_max)


def fcfs_rank(dist: DiscreteDist) -> PiecewiseLinearFn:
    """Constant rank: all ties, broken first-come first-served."""
    return PiecewiseLinearFn([0.0], [0.0], [0.0], dist.x_max)


def policy_rank(policy, dist: DiscreteDist):
    """Rank function for a policy (a Policy or a custom PiecewiseLinearFn)."""
    if isinstance(policy, PiecewiseLinearFn):
        return policy
    policy = Policy.parse(policy)
    if policy is Policy.GITTINS:
        return gittins_rank(dist)[0]
    if policy is Policy.SERPT:
        return serpt_rank(dist)
    if policy is Policy.MSERPT:
        return mserpt_rank(dist)
    if policy is Policy.FB:
        return fb_rank(dist)
    if policy is Policy.FCFS:
        return fcfs_rank(dist)
    raise NoRankFunctionError(
        f"{policy.value} has no rank function over unknown sizes"
    )


def dump_grid(dist: DiscreteDist, midpoints: int = 4) -> np.ndarray:
    """Ages for rank dumps: 0 and each atom < x_max, plus `midpoints`
    interior points per inter-atom segment."""
    knots = np.concatenate(([0.0], dist.sizes))
    ages = []
    for lo, hi in zip(knots[:-1], knots[1:]):
        ages.append(lo)
        for j in range(1, midpoints + 1):
            ages.append(lo + (hi - lo) * j / (midpoints + 1))
    return np.array(sorted(set(ages)))
