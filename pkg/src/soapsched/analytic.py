"""Exact mean waiting/residence/response times and the ratio-bound curve.

For a policy with a monotone rank function the per-size formulas
    E[Q(x)] = excess(z(x)) / (coload(y(x)) * coload(z(x)))
    E[R(x)] = x / coload(y(x))
are exact; for non-monotone rank functions the waiting expression is a
lower bound and the residence expression an upper bound, so non-monotone
policies get explicit lower-bound aggregates instead of exact values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dist import MG1
from .errors import StabilityError, UnsupportedPolicyError
from .hillvalley import HVDecomp, coload, decompose, excess, next_hill, prev_hill
from .rank import PiecewiseLinearFn, Policy, policy_rank

EXACT = "exact"
LOWER_BOUND = "lower-bound"
ESTIMATE = "estimate"


@dataclass(frozen=True)
class SizeMetrics:
    size: float
    prob: float
    waiting: float
    residence: float

    @property
    def response(self) -> float:
        return self.waiting + self.residence


@dataclass(frozen=True)
class AnalyticResult:
    policy: str
    rho: float
    per_size: tuple[SizeMetrics, ...]
    mean_waiting: float
    mean_residence: float
    mean_response: float
    mode: str  # exact | lower-bound | estimate

    @property
    def exact(self) -> bool:
        return self.mode == EXACT


def waiting_x(mg1: MG1, d: HVDecomp, x: float) -> float:
    """Expected waiting time of a size-x job (exact for monotone ranks)."""
    y, z = prev_hill(d, x), next_hill(d, x)
    return excess(mg1, z) / (coload(mg1, y) * coload(mg1, z))

def residence_x(mg1: MG1, d: HVDecomp, x: float) -> float:
    """Expected residence time of a size-x job (exact for monotone ranks)."""
    return x / coload(mg1, prev_hill(d, x))


def _per_size(mg1: MG1, d: HVDecomp) -> tuple[SizeMetrics, ...]:
    return tuple(
        SizeMetrics(float(x), float(p), waiting_x(mg1, d, float(x)), residence_x(mg1, d, float(x)))
        for x, p in zip(mg1.dist.sizes, mg1.dist.probs)
    )


def _aggregate(per_size) -> tuple[float, float]:
    q = sum(m.prob * m.waiting for m in per_size)
    r = sum(m.prob * m.residence for m in per_size)
    return q, r


def srpt_lower_bound(mg1: MG1) -> float:
    """(1/rho) * log(1/(1-rho)) * E[X]: floor for every scheduling policy."""
    rho = mg1.rho
    if rho == 0.0:
        return mg1.dist.mean  # limit of the coefficient as rho -> 0
    return (1.0 / rho) * math.log(1.0 / (1.0 - rho)) * mg1.dist.mean


def mean_response(mg1: MG1, policy) -> AnalyticResult:
    """Mean response time of `policy` on `mg1`.

    Exact for monotone-rank policies (step/FB/FCFS/monotone custom) and for
    the insensitive sharing policy; a certified lower bound for the
    non-monotone rank policies. SRPT has no analytic route here beyond
    srpt_lower_bound.
    """
    if mg1.rho >= 1.0:
        raise StabilityError("unstable system")
    name = "custom"
    if not isinstance(policy, PiecewiseLinearFn):
        policy = Policy.parse(policy)
        name = policy.value
        if policy is Policy.PS:
            # insensitive: T(x) = x / (1 - rho); alone in the system R(x) = x
            per = tuple(
                SizeMetrics(float(x), float(p), float(x) * mg1.rho / (1.0 - mg1.rho), float(x))
                for x, p in zip(mg1.dist.sizes, mg1.dist.probs)
            )
            q, r = _aggregate(per)
            return AnalyticResult(name, mg1.rho, per, q, r, q + r, EXACT)
        if policy is Policy.SRPT:
            raise UnsupportedPolicyError(
                "SRPT mean response time is simulator-only; srpt_lower_bound() gives its floor"
            )

    fn = policy_rank(policy, mg1.dist)
    d = decompose(fn)
    per = _per_size(mg1, d)
    q, r = _aggregate(per)

    monotone = isinstance(fn, PiecewiseLinearFn) and fn.is_nondecreasing()
    if monotone:
        return AnalyticResult(name, mg1.rho, per, q, r, q + r, EXACT)

    # non-monotone rank: waiting formula is a valid lower bound with the
    # policy's own decomposition, residence is floored by E[X]; the SRPT
    # response floor is an independent second bound
    mean_size = mg1.dist.mean
    bound = max(q + mean_size, srpt_lower_bound(mg1))
    per_lb = tuple(SizeMetrics(m.size, m.prob, m.waiting, m.size) for m in per)
    return AnalyticResult(name, mg1.rho, per_lb, q, mean_size, bound, LOWER_BOUND)


def quasi_response(mg1: MG1, policy) -> AnalyticResult:
    """Per-size formulas applied with the policy's own decomposition as if
    they were equalities. For the stopping-age policy on the near-worst-case
    three-atom distribution this approximates the true value well in the
    small-delta, heavy-traffic regime; it is an estimate, not a bound."""
    fn = policy_rank(policy, mg1.dist)
    d = decompose(fn)
    per = _per_size(mg1, d)
    q, r = _aggregate(per)
    name = policy.value if isinstance(policy, Policy) else "custom"
    return AnalyticResult(name, mg1.rho, per, q, r, q + r, ESTIMATE)


# --- approximation-ratio bound curve ---------------------------------------

def _sqrt_branch(rho: float) -> float:
    return 4.0 / (1.0 + math.sqrt(1.0 - rho))


def _log_branch(rho: float) -> float:
    if rho == 0.0:
        return 1.0  # limit of log(1/(1-rho))/rho
    return math.log(1.0 / (1.0 - rho)) / rho


def ratio_bound(rho: float) -> float:
    """Upper bound on the monotone-variant/optimal mean response time ratio.

    min{ max{4/(1+sqrt(1-rho)), (1/rho) log(1/(1-rho))},
         1 + 4/(1+sqrt(1-rho)) },
    which equals the three-branch piecewise form with crossings near
    0.9587 and 0.9898.
    """
    if not 0.0 <= rho < 1.0:
        raise StabilityError("rho must lie in [0, 1)")
    return min(max(_sqrt_branch(rho), _log_branch(rho)), 1.0 + _sqrt_branch(rho))


def _bisect(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ratio_bound_thresholds() -> tuple[float, float]:
    """Loads where the bound's branches cross, solved by bisection to 1e-8."""
    rho1 = _bisect(lambda r: _log_branch(r) - _sqrt_branch(r), 0.90, 0.98)
    rho2 = _bisect(lambda r: _log_branch(r) - 1.0 - _sqrt_branch(r), 0.95, 0.9999)
    return rho1, rho2


def pathological_ratio_approx(delta: float, epsilon: float) -> float:
    """(2 d^3 + 2 d e + e^2) / (2 d^3 + d e + e^2): closed-form response
    ratio for the three-atom distribution at load 1 - epsilon; at most 2,
    approaching 2 when the d*e term dominates."""
    d, e = delta, epsilon
    return (2 * d**3 + 2 * d * e + e * e) / (2 * d**3 + d * e + e * e)
