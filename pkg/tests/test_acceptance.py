"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The simulation battery (distributions x loads x policies, one million
completions per cell except where noted) runs once per session on a process
pool sized by SOAP_SCHED_THREADS / cpu count; per-(distribution, load)
seeds are fixed, so policies sharing a cell see common random numbers.
"""

import math
import time
import zlib

import pytest

from soapsched.analytic import (
    mean_response,
    pathological_ratio_approx,
    quasi_response,
    ratio_bound,
    ratio_bound_thresholds,
    srpt_lower_bound,
)
from soapsched.dist import DiscreteDist, MG1, from_spec, pathological
from soapsched.sim import Cell, run_cells
from soapsched.verify import run_verify

DISTS = {
    "d1": {"kind": "discrete", "atoms": [[1.0, 0.5], [2.0, 0.5]]},
    "path01": {"kind": "pathological", "delta": 0.1},
    "pareto": {"kind": "pareto", "shape": 1.5, "scale": 1.0, "quantize": {"points": 2000}},
}
EXP = {"kind": "exponential", "rate": 1.0, "quantize": {"points": 500}}
MIX = {"kind": "bell-mixture", "quantize": {"points": 1000}}
RHOS = (0.3, 0.6, 0.9)
CORE_POLICIES = ("fcfs", "fb", "mserpt")
EXTRA_POLICIES = ("serpt", "gittins")
JOBS = 1_000_000
MIX_JOBS = 400_000


def _seed(key: str, rho: float) -> int:
    return zlib.crc32(f"{key}:{rho}".encode()) & 0x7FFFFFFF


def _lam(spec: dict, rho: float) -> float:
    return rho / from_spec(spec).mean


def _mg1(spec: dict, rho: float) -> MG1:
    return MG1(from_spec(spec), _lam(spec, rho))


def report(num: int, desc: str, ok: bool, detail: str = ""):
    line = f"ACCEPTANCE {num:02d} {'PASS' if ok else 'FAIL'}: {desc}"
    if detail:
        line += f" [{detail}]"
    print(line)
    assert ok, line


@pytest.fixture(scope="session")
def battery():
    """All simulation cells, core (criterion 4) timed separately."""
    core, extra = [], []
    for key, spec in DISTS.items():
        for rho in RHOS:
            lam, seed = _lam(spec, rho), _seed(key, rho)
            for pol in CORE_POLICIES:
                core.append(((key, rho, pol), Cell(spec, lam, pol, JOBS, seed)))
            for pol in EXTRA_POLICIES:
                extra.append(((key, rho, pol), Cell(spec, lam, pol, JOBS, seed)))
    for rho in RHOS:
        lam, seed = _lam(EXP, rho), _seed("exp", rho)
        for pol in CORE_POLICIES + EXTRA_POLICIES:
            extra.append((("exp", rho, pol), Cell(EXP, lam, pol, JOBS, seed)))
    for rho in (0.5, 0.8):
        extra.append((("exp", rho, "srpt"),
                      Cell(EXP, _lam(EXP, rho), "srpt", JOBS, _seed("exp", rho))))
    for rho in (0.8, 0.95):
        extra.append((("pareto", rho, "fb"),
                      Cell(DISTS["pareto"], _lam(DISTS["pareto"], rho), "fb",
                           JOBS, _seed("pareto", rho))))
    for rho in RHOS:
        lam, seed = _lam(MIX, rho), _seed("mix", rho)
        for pol in ("mserpt", "gittins"):
            extra.append((("mix", rho, pol), Cell(MIX, lam, pol, MIX_JOBS, seed)))

    t0 = time.perf_counter()
    core_results = run_cells([c for _, c in core])
    core_seconds = time.perf_counter() - t0
    extra_results = run_cells([c for _, c in extra])
    sims = {key: res for (key, _), res in zip(core + extra, core_results + extra_results)}
    return {"sims": sims, "core_seconds": core_seconds}


def test_criterion_1_pk_exactness():
    mg1 = MG1(DiscreteDist([1.0, 2.0], [0.5, 0.5]), 0.4)
    mean_response(mg1, "mserpt")  # warm caches
    t0 = time.perf_counter()
    res = mean_response(mg1, "mserpt")
    elapsed = time.perf_counter() - t0
    ok = abs(res.mean_response - 2.75) < 1e-9 and elapsed < 1e-3
    report(1, "analytic M-SERPT on D1 at lambda 0.4 equals 2.75 within 1e-9 in < 1 ms",
           ok, f"value={res.mean_response!r} runtime={elapsed*1e3:.3f}ms")


def test_criterion_2_closed_forms():
    mg1 = MG1(DiscreteDist([1.0], [1.0]), 0.5)
    fb = mean_response(mg1, "fb").mean_response
    ps = mean_response(mg1, "ps").mean_response
    ok = abs(fb - 3.0) < 1e-9 and abs(ps - 2.0) < 1e-9
    report(2, "point-mass closed forms: FB = 3, PS = 2 within 1e-9",
           ok, f"fb={fb!r} ps={ps!r}")


def test_criterion_3_ratio_bound_curve():
    eps = 1e-12
    checks = [
        abs(ratio_bound(8 / 9) - 3.0) < eps,
        abs(ratio_bound(0.0) - 2.0) < eps,
        ratio_bound(0.64) <= 2.5 + 1e-9,
        ratio_bound(0.95) <= 3.3,
        ratio_bound(0.98) <= 4.0,
        ratio_bound(0.999) <= 5.0,
    ]
    r1, r2 = ratio_bound_thresholds()
    checks += [abs(r1 - 0.9587) < 5e-5, abs(r2 - 0.9898) < 5e-5]
    report(3, "bound curve: 3 at 8/9, 2 at 0, crossings 0.9587/0.9898, per-load caps",
           all(checks), f"thresholds=({r1:.6f},{r2:.6f})")


def test_criterion_4_sim_vs_analytic(battery):
    sims = battery["sims"]
    failures = []
    for key, spec in DISTS.items():
        for rho in RHOS:
            mg1 = _mg1(spec, rho)
            for pol in CORE_POLICIES:
                r = sims[(key, rho, pol)]
                a = mean_response(mg1, pol).mean_response
                if abs(r.mean - a) > max(0.02 * a, 3 * r.ci):
                    failures.append(f"{key}/{rho}/{pol}: sim {r.mean:.4g} vs {a:.4g}")
    runtime_ok = battery["core_seconds"] < 600
    ok = not failures and runtime_ok
    report(4, "27-cell battery matches exact analysis within max(2%, 3 CI) in < 10 min",
           ok, f"core={battery['core_seconds']:.0f}s " + "; ".join(failures))


def test_criterion_5_gittins_optimality(battery):
    sims = battery["sims"]
    failures = []
    for key in list(DISTS) + ["exp"]:
        for rho in RHOS:
            g = sims[(key, rho, "gittins")]
            for pol in ("serpt", "mserpt", "fb", "fcfs"):
                o = sims[(key, rho, pol)]
                if g.mean > o.mean + 3 * (g.ci + o.ci):
                    failures.append(f"{key}/{rho}/{pol}")
    report(5, "simulated Gittins is minimal on every cell (within 3 combined CI)",
           not failures, "; ".join(failures))


def test_criterion_6_ratio_bound_consistency(battery):
    sims = battery["sims"]
    failures = []
    for key in list(DISTS) + ["exp"]:
        for rho in RHOS:
            g = sims[(key, rho, "gittins")]
            m = sims[(key, rho, "mserpt")]
            ratio = m.mean / g.mean
            rci = ratio * math.hypot(m.ci / m.mean, g.ci / g.mean)
            if not (1 - 3 * rci <= ratio <= ratio_bound(rho) + 3 * rci):
                failures.append(f"{key}/{rho}: ratio {ratio:.4f}")
    report(6, "simulated M-SERPT/Gittins ratio lies in [1, bound(rho)] within 3 ratio-CI",
           not failures, "; ".join(failures))


def test_criterion_7_pathological_lower_bound():
    closed = {d: pathological_ratio_approx(d, d ** 1.5) for d in (0.1, 0.01, 0.001)}
    expect = {0.1: 1.513, 0.01: 1.769, 0.001: 1.913}
    ok = all(abs(closed[d] - expect[d]) < 1e-3 for d in expect)
    ok &= closed[0.1] < closed[0.01] < closed[0.001] < 2.0
    delta = 0.01
    mg1 = MG1.from_rho(pathological(delta), 1 - delta ** 1.5)
    quasi = (mean_response(mg1, "mserpt").mean_response
             / quasi_response(mg1, "gittins").mean_response)
    ok &= abs(quasi - closed[delta]) / closed[delta] < 0.10
    report(7, "closed-form ratios {1.513, 1.769, 1.913} rise toward 2; quasi-analytic "
              "within 10% at delta = 0.01",
           ok, f"quasi={quasi:.4f} closed={closed[delta]:.4f}")


def test_criterion_8_property_suite():
    t0 = time.perf_counter()
    rep = run_verify(200, 7)
    elapsed = time.perf_counter() - t0
    ok = rep.passed and elapsed < 120
    report(8, "verify --cases 200 --seed 7: rank ordering, hill subset, coload ratio bound, "
              "monotonicity, stopping-rank oracle",
           ok, f"{rep.checks} checks in {elapsed:.1f}s; {len(rep.failures)} failures")


def test_criterion_9_srpt_floor(battery):
    sims = battery["sims"]
    failures = []
    for rho in (0.5, 0.8):
        r = sims[("exp", rho, "srpt")]
        lb = srpt_lower_bound(_mg1(EXP, rho))
        if r.mean < lb - 3 * r.ci:
            failures.append(f"rho {rho}: {r.mean:.4f} < {lb:.4f}")
    report(9, "simulated SRPT respects the universal response-time floor",
           not failures, "; ".join(failures))


def test_criterion_10_divergence_and_mixture(battery):
    sims = battery["sims"]
    ratios = {}
    for rho in (0.8, 0.95):
        ps = mean_response(_mg1(DISTS["pareto"], rho), "ps").mean_response
        ratios[rho] = ps / sims[("pareto", rho, "fb")].mean
    ok = ratios[0.95] > ratios[0.8]
    mix_ratios = []
    for rho in RHOS:
        m = sims[("mix", rho, "mserpt")]
        g = sims[("mix", rho, "gittins")]
        mix_ratios.append(m.mean / g.mean)
        ok &= m.mean / g.mean <= 1.15
    report(10, "PS/FB ratio on Pareto grows with load; mixture M-SERPT/Gittins <= 1.15",
           ok, f"ps/fb: {ratios[0.8]:.3f}->{ratios[0.95]:.3f}; "
               f"mix ratios {['%.3f' % r for r in mix_ratios]}")
