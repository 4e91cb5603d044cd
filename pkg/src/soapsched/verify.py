"""Randomized invariant suite over generated discrete distributions.

Each case draws 2-8 atoms (log-uniform sizes spanning at most four orders
of magnitude, Dirichlet probabilities) and checks, at loads 0.3/0.6/0.9:
rank ordering, the hill-subset property, the truncated-load ratio
bound and its tail-ratio consequence, the monotonicity table, envelope
idempotence, the hill-age ordering chain, and agreement of the fast
stopping-age ranks with a direct-summation oracle. Fixed fixtures (the
two-atom example, a point mass, the three-atom near-worst case) always
run first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dist import DiscreteDist, MG1, pathological
from .hillvalley import coload, decompose, excess, next_hill, prev_hill
from .rank import gittins_rank, increasing_envelope, mserpt_rank, serpt_rank

_REL_TOL = 1e-9


@dataclass
class VerifyReport:
    cases: int = 0
    checks: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)  # (case, detail)

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        lines = [f"{self.cases} cases, {self.checks} checks, {len(self.failures)} failures"]
        for case, detail in self.failures[:50]:
            lines.append(f"  FAIL [{case}] {detail}")
        return "\n".join(lines)


def random_dist(rng: np.random.Generator) -> DiscreteDist:
    """2-8 atoms, log-uniform sizes within 4 orders of magnitude."""
    n = int(rng.integers(2, 9))
    while True:
        sizes = np.sort(10.0 ** rng.uniform(-2.0, 2.0, n))
        if np.all(np.diff(sizes) > 1e-9 * sizes[:-1]):
            break
    probs = rng.dirichlet(np.ones(n))
    if np.any(probs < 1e-9):  # keep atoms numerically meaningful
        probs = probs + 1e-6
        probs /= probs.sum()
    return DiscreteDist(sizes, probs)


def gittins_oracle(dist: DiscreteDist, a: float) -> float:
    """Brute-force stopping-age rank by direct summation (no caches)."""
    atoms = list(zip(dist.sizes.tolist(), dist.probs.tolist()))

    def tail(t):
        return sum(p for x, p in atoms if x > t)

    best = math.inf
    for b, _ in atoms:
        if b <= a:
            continue
        knots = [a] + [x for x, _ in atoms if a < x < b] + [b]
        integral = sum(tail(lo) * (hi - lo) for lo, hi in zip(knots[:-1], knots[1:]))
        den = tail(a) - tail(b)
        if den > 0:
            best = min(best, integral / den)
    return best


def _probe_ages(dist: DiscreteDist) -> list[float]:
    """Atom ages plus segment midpoints (domain is [0, x_max))."""
    knots = [0.0] + dist.sizes.tolist()
    ages = []
    for lo, hi in zip(knots[:-1], knots[1:]):
        ages.append(lo)
        ages.append(0.5 * (lo + hi))
    return ages


def check_case(dist: DiscreteDist, rhos=(0.3, 0.6, 0.9), oracle: bool = True):
    """Run every invariant on one distribution; returns (checks, failures)."""
    failures: list[str] = []
    checks = 0

    def expect(ok: bool, msg: str):
        nonlocal checks
        checks += 1
        if not ok:
            failures.append(msg)

    srank = serpt_rank(dist)
    mrank = mserpt_rank(dist)
    grank, table = gittins_rank(dist)
    ages = _probe_ages(dist)

    # rank ordering: gittins <= serpt <= mserpt everywhere
    for a in ages:
        g, s, m = grank.value(a), srank.value(a), mrank.value(a)
        scale = max(1.0, abs(s))
        expect(g <= s + _REL_TOL * scale, f"rank order gittins>serpt at a={a!r}: {g!r} > {s!r}")
        expect(s <= m + _REL_TOL * scale, f"rank order serpt>mserpt at a={a!r}: {s!r} > {m!r}")

    # envelope: idempotent, dominating, nondecreasing
    env = increasing_envelope(srank)
    env2 = increasing_envelope(env)
    for a in ages:
        expect(abs(env.value(a) - env2.value(a)) <= _REL_TOL * max(1.0, abs(env.value(a))),
               f"envelope not idempotent at a={a!r}")
        expect(env.value(a) >= srank.value(a) - _REL_TOL * max(1.0, abs(env.value(a))),
               f"envelope below input at a={a!r}")
    expect(env.is_nondecreasing(), "envelope not nondecreasing")

    # hill subset: every gittins hill age is an mserpt hill age
    dg = decompose(grank)
    dm = decompose(mrank)
    g_hills = {a for lo, hi in dg.hills for a in (lo, hi)}
    for a in sorted(g_hills):
        expect(dm.is_hill_age(a), f"gittins hill age {a!r} not an mserpt hill age")

    # ordering chain y_G <= y_M <= x <= z_M <= z_G at atom sizes
    for x in dist.sizes.tolist():
        yg, zg = prev_hill(dg, x), next_hill(dg, x)
        ym, zm = prev_hill(dm, x), next_hill(dm, x)
        expect(yg <= ym + 1e-12 and ym <= x <= zm and zm <= zg + 1e-12,
               f"hill-age ordering chain broken at x={x!r}: {(yg, ym, x, zm, zg)!r}")

    # stopping-age oracle at 0 and atom ages
    if oracle and dist.n <= 12:
        for a, r in zip(table.ages.tolist(), table.ranks.tolist()):
            ref = gittins_oracle(dist, a)
            expect(abs(r - ref) <= _REL_TOL * max(1.0, abs(ref)),
                   f"gittins rank at a={a!r}: fast {r!r} vs oracle {ref!r}")
        for a in ages:
            ref = gittins_oracle(dist, a)
            expect(abs(grank.value(a) - ref) <= _REL_TOL * max(1.0, abs(ref)),
                   f"gittins value at a={a!r}: {grank.value(a)!r} vs oracle {ref!r}")

    # per-load checks
    m_hill_ages = sorted({a for lo, hi in dm.hills for a in (lo, hi)})
    grid = sorted(set(ages + m_hill_ages + [dist.x_max]))
    for rho in rhos:
        mg1 = MG1.from_rho(dist, rho)

        # monotonicity table: tail/coload decreasing, excess increasing,
        # y and z nondecreasing
        prev = None
        for a in grid:
            cur = (dist.tail(a), coload(mg1, a), excess(mg1, a),
                   prev_hill(dm, a), next_hill(dm, a))
            if prev is not None:
                expect(cur[0] <= prev[0] + 1e-12, f"tail not decreasing at a={a!r}")
                expect(cur[1] <= prev[1] + 1e-12, f"coload not decreasing at a={a!r}")
                expect(cur[2] >= prev[2] - 1e-12, f"excess not increasing at a={a!r}")
                expect(cur[3] >= prev[3] - 1e-12, f"y not nondecreasing at a={a!r}")
                expect(cur[4] >= prev[4] - 1e-12, f"z not nondecreasing at a={a!r}")
            prev = cur

        # truncated-load ratio bound and its tail-ratio form at hill-age pairs
        for bi, b in enumerate(m_hill_ages):
            cb = coload(mg1, b)
            tb = dist.tail(b)
            for a in m_hill_ages[: bi + 1]:
                ca = coload(mg1, a)
                ta = dist.tail(a)
                if ta == 0.0:
                    continue  # a == x_max: only pairs with b == x_max, trivial
                lhs = ca / cb
                rhs = 1.0 / (1.0 - rho + rho * tb / ta)
                expect(lhs <= rhs * (1.0 + 1e-9),
                       f"coload ratio bound fails at rho={rho}, a={a!r}, b={b!r}")
                if tb > 0.0:
                    expect(lhs <= (ta / tb) * (1.0 + 1e-9),
                           f"coload tail-ratio bound fails at rho={rho}, a={a!r}, b={b!r}")

    return checks, failures


def fixtures() -> list[tuple[str, DiscreteDist]]:
    return [
        ("two-point", DiscreteDist([1.0, 2.0], [0.5, 0.5])),
        ("point-mass", DiscreteDist([3.0], [1.0])),
        ("near-worst-case", pathological(0.1)),
    ]


def run_verify(cases: int, seed: int, rhos=(0.3, 0.6, 0.9)) -> VerifyReport:
    report = VerifyReport()
    for name, d in fixtures():
        checks, fails = check_case(d, rhos)
        report.cases += 1
        report.checks += checks
        report.failures.extend((name, f) for f in fails)
    for i in range(cases):
        rng = np.random.default_rng([seed, i])
        d = random_dist(rng)
        checks, fails = check_case(d, rhos)
        report.cases += 1
        report.checks += checks
        report.failures.extend((f"seed={seed} case={i}", f) for f in fails)
    return report
