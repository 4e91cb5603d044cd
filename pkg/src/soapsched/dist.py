"""Job size distributions.

Every distribution is ultimately represented as a `DiscreteDist`: a sorted
list of positive atoms with probabilities summing to one. Continuous
families are admitted only through equal-probability quantization
(`quantize`), which replaces each of n equal-probability slices by its
conditional mean, preserving E[X] exactly up to the accuracy of the
per-family partial-mean formulas.

The tail convention is right-continuous: tail(a) = P(X > a), so an atom at
exactly `a` has already completed by age a and contributes min(X, a) = a in
full to truncated moments.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from .errors import ParameterError, StabilityError

_PROB_SUM_TOL = 1e-12


class DiscreteDist:
    """Discrete job size distribution with cached prefix aggregates.

    Parameters
    ----------
    sizes : array-like
        Strictly increasing, all > 0.
    probs : array-like
        Same length, all > 0, summing to 1 within 1e-12.
    """

    def __init__(self, sizes, probs):
        sizes = np.asarray(sizes, dtype=float)
        probs = np.asarray(probs, dtype=float)
        if sizes.ndim != 1 or sizes.shape != probs.shape or sizes.size == 0:
            raise ParameterError("sizes and probs must be equal-length 1-d arrays")
        if not np.all(sizes > 0):
            raise ParameterError("all sizes must be > 0")
        if not np.all(np.diff(sizes) > 0):
            raise ParameterError("sizes must be strictly increasing")
        if not np.all(probs > 0):
            raise ParameterError("all probabilities must be > 0")
        total = probs.sum()
        if abs(total - 1.0) > _PROB_SUM_TOL:
            raise ParameterError(f"probabilities sum to {total!r}, not 1")
        self.sizes = sizes
        self.probs = probs / total

        # prefix aggregates: cum_probs[i] = P(X <= x_i), cum_first/second are
        # partial first/second moments over atoms <= x_i
        self.cum_probs = np.cumsum(self.probs)
        self.cum_probs[-1] = 1.0
        self.cum_first = np.cumsum(self.probs * self.sizes)
        self.cum_second = np.cumsum(self.probs * self.sizes**2)
        # tail just after each atom: P(X > x_i)
        self.tail_after = 1.0 - self.cum_probs
        self.tail_after[-1] = 0.0

    @property
    def n(self) -> int:
        return self.sizes.size

    @property
    def x_max(self) -> float:
        return float(self.sizes[-1])

    @property
    def mean(self) -> float:
        return float(self.cum_first[-1])

    @property
    def second_moment(self) -> float:
        return float(self.cum_second[-1])

    def _idx(self, a: float) -> int:
        """Number of atoms <= a."""
        return int(np.searchsorted(self.sizes, a, side="right"))

    def tail(self, a: float) -> float:
        """P(X > a), right-continuous and decreasing in a."""
        if a < 0:
            raise ParameterError("age must be >= 0")
        k = self._idx(a)
        return 1.0 if k == 0 else float(self.tail_after[k - 1])

    def trunc_moments(self, a: float) -> tuple[float, float]:
        """(E[min(X,a)], E[min(X,a)^2]); atoms at exactly a count in full."""
        if a < 0:
            raise ParameterError("age must be >= 0")
        k = self._idx(a)
        if k == 0:
            t = 1.0
            return a * t, a * a * t
        t = float(self.tail_after[k - 1])
        m1 = float(self.cum_first[k - 1]) + a * t
        m2 = float(self.cum_second[k - 1]) + a * a * t
        return m1, m2

    def int_tail(self, a: float, b: float) -> float:
        """Integral of the tail over [a, b] (b may be x_max or beyond)."""
        m1a, _ = self.trunc_moments(a)
        m1b, _ = self.trunc_moments(b)
        return m1b - m1a

    def sample(self, rng: np.random.Generator, size=None):
        """Draw sizes using an external rng state (inverse-cdf lookup)."""
        u = rng.random(size)
        idx = np.searchsorted(self.cum_probs, u, side="right")
        idx = np.minimum(idx, self.n - 1)
        return self.sizes[idx]

    def to_spec(self) -> dict:
        return {"kind": "discrete", "atoms": [[float(x), float(p)] for x, p in zip(self.sizes, self.probs)]}

    def __repr__(self):
        return f"DiscreteDist(n={self.n}, mean={self.mean:.6g}, x_max={self.x_max:.6g})"


def pathological(delta: float) -> DiscreteDist:
    """Three-atom distribution whose M-SERPT/Gittins response ratio nears 2.

    Atoms: (1-delta, 1-delta), (1, delta-delta^2), (1/delta + 1, delta^2).
    """
    if not 0.0 < delta < 1.0:
        raise ParameterError("delta must lie in (0, 1)")
    sizes = [1.0 - delta, 1.0, 1.0 / delta + 1.0]
    probs = [1.0 - delta, delta - delta**2, delta**2]
    return DiscreteDist(sizes, probs)


@dataclass(frozen=True)
class MG1:
    """M/G/1 system: Poisson(lam) arrivals of jobs sized by `dist`."""

    dist: DiscreteDist
    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise ParameterError("arrival rate must be >= 0")
        if self.rho >= 1.0:
            raise StabilityError(f"rho = {self.rho:.6g} >= 1: system unstable")

    @property
    def rho(self) -> float:
        return self.lam * self.dist.mean

    @staticmethod
    def from_rho(dist: DiscreteDist, rho: float) -> "MG1":
        """Convenience: pick lam so the load equals `rho`."""
        if not 0.0 <= rho < 1.0:
            raise StabilityError("rho must lie in [0, 1)")
        return MG1(dist, rho / dist.mean)


# --- continuous families; admitted via equal-probability quantization -----

@dataclass(frozen=True)
class ContinuousSpec:
    """A continuous family plus how to quantize it.

    family is one of: exponential(rate), pareto(shape, scale),
    uniform(lo, hi), hyperexponential(branches=[(prob, rate), ...]),
    normal-mixture(components=[(weight, mean, sd), ...], truncated at 0),
    point-mass(x). Quantization is always equal-probability.
    """

    family: str
    params: dict = field(default_factory=dict)
    points: int = 1000
    method: str = "equal-probability"


class _Family:
    """cdf / ppf / partial mean of a continuous family on (lo, hi)."""

    lo = 0.0
    hi = math.inf

    def cdf(self, x: float) -> float:
        raise NotImplementedError

    def ppf(self, p: float) -> float:
        # numeric fallback; families with closed forms override
        if p <= 0.0:
            return self.lo
        hi = self.lo + 1.0
        while self.cdf(hi) < p:
            hi = self.lo + 2.0 * (hi - self.lo)
        return brentq(lambda x: self.cdf(x) - p, self.lo, hi, xtol=1e-13, rtol=1e-14)

    def partial_mean(self, a: float, b: float) -> float:
        """Integral of x f(x) over (a, b]; b = inf allowed."""
        raise NotImplementedError


class _Exponential(_Family):
    def __init__(self, rate):
        if rate <= 0:
            raise ParameterError("exponential rate must be > 0")
        self.rate = rate

    def cdf(self, x):
        return -math.expm1(-self.rate * x) if x > 0 else 0.0

    def ppf(self, p):
        return -math.log1p(-p) / self.rate

    def partial_mean(self, a, b):
        r = self.rate
        lo = (a + 1.0 / r) * math.exp(-r * a)
        hi = 0.0 if math.isinf(b) else (b + 1.0 / r) * math.exp(-r * b)
        return lo - hi


class _Pareto(_Family):
    def __init__(self, shape, scale):
        if shape <= 1:
            raise ParameterError("pareto shape must be > 1 so the mean is finite")
        if scale <= 0:
            raise ParameterError("pareto scale must be > 0")
        self.alpha = shape
        self.xm = scale
        self.lo = scale

    def cdf(self, x):
        return 1.0 - (self.xm / x) ** self.alpha if x > self.xm else 0.0

    def ppf(self, p):
        return self.xm * (1.0 - p) ** (-1.0 / self.alpha)

    def partial_mean(self, a, b):
        al, xm = self.alpha, self.xm
        a = max(a, xm)
        c = al / (al - 1.0) * xm**al
        hi = 0.0 if math.isinf(b) else b ** (1.0 - al)
        return c * (a ** (1.0 - al) - hi)


class _Uniform(_Family):
    def __init__(self, lo, hi):
        if not 0 <= lo < hi:
            raise ParameterError("uniform needs 0 <= lo < hi")
        self.lo = lo
        self.hi_ = hi

    def cdf(self, x):
        return min(max((x - self.lo) / (self.hi_ - self.lo), 0.0), 1.0)

    def ppf(self, p):
        return self.lo + p * (self.hi_ - self.lo)

    def partial_mean(self, a, b):
        b = min(b, self.hi_)
        a = max(a, self.lo)
        if b <= a:
            return 0.0
        return (b**2 - a**2) / (2.0 * (self.hi_ - self.lo))


class _HyperExponential(_Family):
    def __init__(self, branches):
        branches = [(float(p), float(r)) for p, r in branches]
        if not branches or any(p <= 0 or r <= 0 for p, r in branches):
            raise ParameterError("hyperexponential branches need prob > 0 and rate > 0")
        if abs(sum(p for p, _ in branches) - 1.0) > 1e-9:
            raise ParameterError("hyperexponential branch probabilities must sum to 1")
        self.branches = branches

    def cdf(self, x):
        if x <= 0:
            return 0.0
        return -sum(p * math.expm1(-r * x) for p, r in self.branches)

    def partial_mean(self, a, b):
        return sum(p * _Exponential(r).partial_mean(a, b) for p, r in self.branches)


class _NormalMixture(_Family):
    """Mixture of normals conditioned on X > 0."""

    def __init__(self, components):
        comps = [(float(w), float(m), float(s)) for w, m, s in components]
        if not comps or any(w <= 0 or s <= 0 for w, _, s in comps):
            raise ParameterError("normal-mixture components need weight > 0 and sd > 0")
        if abs(sum(w for w, _, _ in comps) - 1.0) > 1e-9:
            raise ParameterError("normal-mixture weights must sum to 1")
        self.comps = comps
        self.mass = 1.0 - self._raw_cdf(0.0)  # mass above the truncation point
        if self.mass <= 1e-12:
            raise ParameterError("normal-mixture has no mass above 0")

    def _raw_cdf(self, x):
        return sum(w * norm.cdf((x - m) / s) for w, m, s in self.comps)

    def cdf(self, x):
        if x <= 0:
            return 0.0
        return (self._raw_cdf(x) - self._raw_cdf(0.0)) / self.mass

    def partial_mean(self, a, b):
        a = max(a, 0.0)
        total = 0.0
        for w, m, s in self.comps:
            al = (a - m) / s
            be = math.inf if math.isinf(b) else (b - m) / s
            phi_b = 0.0 if math.isinf(be) else norm.pdf(be)
            cdf_b = 1.0 if math.isinf(be) else norm.cdf(be)
            total += w * (m * (cdf_b - norm.cdf(al)) + s * (norm.pdf(al) - phi_b))
        return total / self.mass


def _make_family(spec: ContinuousSpec) -> _Family:
    fam, p = spec.family, spec.params
    if fam == "exponential":
        return _Exponential(p["rate"])
    if fam == "pareto":
        return _Pareto(p["shape"], p["scale"])
    if fam == "uniform":
        return _Uniform(p["lo"], p["hi"])
    if fam == "hyperexponential":
        return _HyperExponential(p["branches"])
    if fam == "normal-mixture":
        return _NormalMixture(p["components"])
    raise ParameterError(f"unknown family {fam!r}")


def quantize(spec: ContinuousSpec) -> DiscreteDist:
    """Equal-probability quantization: n atoms at slice conditional means.

    Preserves E[X] up to the accuracy of the family's partial-mean formula
    (closed forms throughout, so ~1e-12 relative in practice).
    """
    if spec.family == "point-mass":
        x = spec.params["x"]
        if x <= 0:
            raise ParameterError("point mass must be > 0")
        return DiscreteDist([x], [1.0])
    n = spec.points
    if n < 2:
        raise ParameterError("quantization needs at least 2 points")
    if spec.method != "equal-probability":
        raise ParameterError(f"unknown quantization method {spec.method!r}")
    fam = _make_family(spec)
    edges = [fam.lo] + [fam.ppf(i / n) for i in range(1, n)] + [math.inf]
    sizes = [n * fam.partial_mean(edges[i], edges[i + 1]) for i in range(n)]
    probs = np.full(n, 1.0 / n)
    return DiscreteDist(sizes, probs)


def bell_mixture_spec(points: int = 1000) -> ContinuousSpec:
    """Representative 4-component bell-curve mixture (exact reference
    parameters for this shape are not published; see README)."""
    comps = [(0.25, 1.0, 0.15), (0.25, 3.0, 0.4), (0.25, 7.0, 0.9), (0.25, 15.0, 2.0)]
    return ContinuousSpec("normal-mixture", {"components": comps}, points=points)


# --- JSON spec files -------------------------------------------------------

def from_spec(spec) -> DiscreteDist:
    """Build a DiscreteDist from a JSON spec dict, JSON string, or path.

    Examples: {"kind":"discrete","atoms":[[1.0,0.5],[2.0,0.5]]},
    {"kind":"exponential","rate":1.0,"quantize":{"points":2000}},
    {"kind":"pareto","shape":1.5,"scale":1.0,"quantize":{"points":4000}},
    {"kind":"pathological","delta":0.01}.
    """
    if isinstance(spec, (str, Path)):
        text = Path(spec).read_text() if Path(str(spec)).exists() else str(spec)
        try:
            spec = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"distribution spec is neither a file nor JSON: {text[:80]!r}") from exc
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ParameterError("distribution spec must be a dict with a 'kind'")
    kind = spec["kind"]
    try:
        if kind == "discrete":
            atoms = spec["atoms"]
            return DiscreteDist([a[0] for a in atoms], [a[1] for a in atoms])
        if kind == "pathological":
            return pathological(spec["delta"])
        if kind == "point-mass":
            return quantize(ContinuousSpec("point-mass", {"x": spec["x"]}))
        q = spec.get("quantize", {})
        points = int(q.get("points", 1000))
        params = {k: v for k, v in spec.items() if k not in ("kind", "quantize")}
        if kind == "bell-mixture":
            return quantize(bell_mixture_spec(points))
        return quantize(ContinuousSpec(kind, params, points=points))
    except (KeyError, IndexError, TypeError) as exc:
        raise ParameterError(f"malformed {kind!r} spec: missing or bad field ({exc!r})") from exc
