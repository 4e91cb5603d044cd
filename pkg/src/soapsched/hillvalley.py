"""Hill/valley decomposition of a rank function and the load functionals.

Ages where the increasing envelope of the rank function strictly increases
are hill ages (isolated jump points or whole intervals); maximal stretches
where the envelope is locally constant are valleys (u, v] bounded by hill
ages. 0 and x_max are always hill ages: jobs cannot age past x_max, and
that convention makes a constant rank reproduce the classical
nonpreemptive waiting-time formula exactly.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from functools import cached_property

from .dist import MG1
from .errors import ParameterError

_TOL = 1e-12  # strict-increase detection on envelope values


@dataclass(frozen=True)
class HVDecomp:
    """Ordered hill set as closed intervals [lo, hi] (points have lo == hi)."""

    hills: tuple[tuple[float, float], ...]
    end: float

    @cached_property
    def _los(self) -> list[float]:
        return [h[0] for h in self.hills]

    @cached_property
    def _his(self) -> list[float]:
        return [h[1] for h in self.hills]

    @cached_property
    def valleys(self) -> tuple[tuple[float, float], ...]:
        """Maximal valley intervals (u, v]."""
        out = []
        for (_, hi), (lo_next, _) in zip(self.hills[:-1], self.hills[1:]):
            if lo_next > hi:
                out.append((hi, lo_next))
        return tuple(out)

    def is_hill_age(self, a: float) -> bool:
        i = bisect.bisect_right(self._los, a) - 1
        return i >= 0 and self.hills[i][0] <= a <= self.hills[i][1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "hills": [[lo, hi] for lo, hi in self.hills],
                "valleys": [[u, v] for u, v in self.valleys],
            }
        )


def decompose(rank_fn, tol: float = _TOL) -> HVDecomp:
    """Hill/valley decomposition of (the increasing envelope of) a rank fn.

    Envelope pieces with positive slope become interval hills; envelope
    jumps above `tol` become point hills. Well defined for non-monotone
    inputs since only the envelope matters.
    """
    env = rank_fn.envelope()
    end = env.end
    hills: list[list[float]] = [[0.0, 0.0]]

    def add(lo: float, hi: float):
        if hills and lo <= hills[-1][1]:
            hills[-1][1] = max(hills[-1][1], hi)
        else:
            hills.append([lo, hi])

    level = None
    for lo, hi, val, slope in env.pieces():
        if level is not None and val > level + tol:
            add(lo, lo)  # jump point
        if slope > tol:
            add(lo, hi)
            level = val + slope * (hi - lo)
        else:
            level = max(val, level) if level is not None else val
    add(end, end)
    return HVDecomp(hills=tuple((lo, hi) for lo, hi in hills), end=end)


def prev_hill(d: HVDecomp, x: float) -> float:
    """y(x) = sup of hill ages < x, with y(0) = 0."""
    if not 0.0 <= x <= d.end:
        raise ParameterError(f"size {x!r} outside [0, {d.end!r}]")
    if x == 0.0:
        return 0.0
    i = bisect.bisect_left(d._los, x) - 1
    # hills[i] is the last interval starting strictly below x
    if i < 0:
        return 0.0
    lo, hi = d.hills[i]
    return x if hi >= x else hi


def next_hill(d: HVDecomp, x: float) -> float:
    """z(x) = inf of hill ages >= x; z(0) is the right limit z(0+)."""
    if not 0.0 <= x <= d.end:
        raise ParameterError(f"size {x!r} outside [0, {d.end!r}]")
    if x == 0.0:
        lo0, hi0 = d.hills[0]
        return 0.0 if hi0 > 0.0 else (d.hills[1][0] if len(d.hills) > 1 else d.end)
    i = bisect.bisect_left(d._his, x)
    lo, hi = d.hills[i]
    return x if lo <= x else lo


def coload(mg1: MG1, a: float) -> float:
    """Truncated load complement: 1 - lam * E[min(X, a)]; decreasing in a."""
    m1, _ = mg1.dist.trunc_moments(a)
    return 1.0 - mg1.lam * m1


def excess(mg1: MG1, a: float) -> float:
    """Truncated second-moment factor: (lam / 2) * E[min(X, a)^2]."""
    _, m2 = mg1.dist.trunc_moments(a)
    return 0.5 * mg1.lam * m2
