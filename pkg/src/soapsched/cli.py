"""Command-line front end.

Subcommands: rank-dump, analyze, simulate, compare, ratio-curve,
pathological-sweep, verify. Every output file starts with a manifest
(command, parameters, seeds, version, runtime) sufficient to reproduce its
numeric columns byte for byte. Numeric CSV columns use 17 significant
digits so diffs are bit-stable. SOAP_SCHED_THREADS caps the worker pool.

Exit codes: 0 ok, 1 invariant failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import __version__
from .dist import MG1, from_spec
from .errors import SoapSchedError
from .analytic import (
    mean_response,
    pathological_ratio_approx,
    quasi_response,
    ratio_bound,
    ratio_bound_thresholds,
)
from .rank import Policy, dump_grid, gittins_rank, mserpt_rank, serpt_rank
from .sim import Cell, SimConfig, run_cells, simulate
from .verify import run_verify


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _manifest(command: str, params: dict, t0: float) -> dict:
    return {
        "command": command,
        "params": params,
        "version": __version__,
        "runtime_s": round(time.perf_counter() - t0, 3),
    }


def _write_csv(out, manifest: dict, header: list[str], rows: list[list]):
    out.write("# manifest: " + json.dumps(manifest, sort_keys=True) + "\n")
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def _open_out(path):
    return open(path, "w") if path else sys.stdout


def _mg1_from_args(args) -> MG1:
    dist = from_spec(args.dist)
    if args.rho is not None:
        return MG1.from_rho(dist, args.rho)
    return MG1(dist, args.lam)


def _add_system_args(p, policy=True):
    p.add_argument("--dist", required=True, help="distribution spec (JSON file or inline JSON)")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda", dest="lam", type=float, help="arrival rate")
    g.add_argument("--rho", type=float, help="offered load (lambda inferred)")
    if policy:
        p.add_argument("--policy", required=True, help="gittins|serpt|mserpt|fb|fcfs|srpt|ps")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="output path (default stdout)")


def cmd_rank_dump(args) -> int:
    t0 = time.perf_counter()
    dist = from_spec(args.dist)
    grank, _ = gittins_rank(dist)
    srank = serpt_rank(dist)
    mrank = mserpt_rank(dist)
    ages = dump_grid(dist, args.midpoints)
    rows = [[float(a), grank.value(a), srank.value(a), mrank.value(a)]
            for a in ages if a < dist.x_max]
    man = _manifest("rank-dump", {"dist": args.dist, "midpoints": args.midpoints}, t0)
    out = _open_out(args.out)
    _write_csv(out, man, ["age", "rank_gittins", "rank_serpt", "rank_mserpt"], rows)
    if out is not sys.stdout:
        out.close()
    return 0


def cmd_analyze(args) -> int:
    t0 = time.perf_counter()
    mg1 = _mg1_from_args(args)
    res = mean_response(mg1, args.policy)
    payload = {
        "policy": res.policy,
        "rho": mg1.rho,
        "mean_waiting": res.mean_waiting,
        "mean_residence": res.mean_residence,
        "mean_response": res.mean_response,
        "exact": res.exact,
        "mode": res.mode,
    }
    man = _manifest("analyze", {"dist": args.dist, "lambda": mg1.lam, "policy": args.policy}, t0)
    out = _open_out(args.out)
    if args.format == "json":
        json.dump({"manifest": man, **payload}, out, indent=2)
        out.write("\n")
    else:
        _write_csv(out, man, list(payload), [list(payload.values())])
    if out is not sys.stdout:
        out.close()
    return 0


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    mg1 = _mg1_from_args(args)
    cfg = SimConfig(mg1, args.policy, jobs=args.jobs, warmup=args.warmup,
                    seed=args.seed, batches=args.batches)
    trace = [] if args.trace else None
    res = simulate(cfg, trace=trace)
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write("time,event,job_id,age,rank\n")
            for t, kind, jid, age, rank in trace:
                fh.write(f"{_fmt(t)},{kind},{jid},{_fmt(age)},{_fmt(rank)}\n")
    payload = {
        "policy": res.policy,
        "rho": mg1.rho,
        "mean_response": res.mean,
        "ci_half_width": res.ci,
        "completions": res.completions,
        "seed": res.seed,
    }
    man = _manifest("simulate", {
        "dist": args.dist, "lambda": mg1.lam, "policy": args.policy, "jobs": args.jobs,
        "seed": args.seed, "warmup": args.warmup, "batches": args.batches,
    }, t0)
    out = _open_out(args.out)
    if args.format == "json":
        json.dump({"manifest": man, **payload}, out, indent=2)
        out.write("\n")
    else:
        _write_csv(out, man, list(payload), [list(payload.values())])
    if out is not sys.stdout:
        out.close()
    return 0


def cmd_compare(args) -> int:
    t0 = time.perf_counter()
    mg1 = _mg1_from_args(args)
    policies = [Policy.parse(p).value for p in args.policies.split(",")]
    cells = []
    for i, pol in enumerate(sorted(policies)):
        seed = args.seed if args.common_random else args.seed + i
        cells.append(Cell(mg1.dist.to_spec(), mg1.lam, pol, args.jobs, seed,
                          args.warmup, args.batches))
    results = run_cells(cells)
    rows = [[r.policy, r.mean, r.ci, r.completions, r.seed] for r in results]
    man = _manifest("compare", {
        "dist": args.dist, "lambda": mg1.lam, "policies": sorted(policies),
        "jobs": args.jobs, "seed": args.seed, "common_random": args.common_random,
        "warmup": args.warmup, "batches": args.batches,
    }, t0)
    out = _open_out(args.out)
    if args.format == "json":
        json.dump({"manifest": man, "results": [
            {"policy": r.policy, "mean_response": r.mean, "ci_half_width": r.ci,
             "completions": r.completions, "seed": r.seed} for r in results]}, out, indent=2)
        out.write("\n")
    else:
        _write_csv(out, man, ["policy", "mean_response", "ci_half_width", "completions", "seed"], rows)
    if out is not sys.stdout:
        out.close()
    return 0


def cmd_ratio_curve(args) -> int:
    t0 = time.perf_counter()
    if args.grid:
        grid = [float(x) for x in args.grid.split(",")]
    else:
        grid = [i / args.points for i in range(args.points)]
    r1, r2 = ratio_bound_thresholds()
    rhos = sorted(set(grid) | {r1, r2})
    rows = [[rho, ratio_bound(rho)] for rho in rhos]
    man = _manifest("ratio-curve", {"grid": args.grid, "points": args.points,
                                    "thresholds": [r1, r2]}, t0)
    out = _open_out(args.out)
    _write_csv(out, man, ["rho", "bound"], rows)
    if out is not sys.stdout:
        out.close()
    return 0


def cmd_pathological_sweep(args) -> int:
    t0 = time.perf_counter()
    deltas = [float(x) for x in args.deltas.split(",")]
    sim_jobs = args.simulate
    rows = []
    cells = []
    for delta in deltas:
        eps = delta ** 1.5
        spec = {"kind": "pathological", "delta": delta}
        if sim_jobs:
            for pol in ("mserpt", "gittins"):
                lam = (1.0 - eps) / from_spec(spec).mean
                cells.append(Cell(spec, lam, pol, sim_jobs, args.seed, 0.1, 20))
    sims = {}
    warn = ""
    if sim_jobs:
        try:
            results = run_cells(cells)
            for cell, res in zip(cells, results):
                sims[(cell.dist_spec["delta"], res.policy)] = res
        except SoapSchedError as exc:
            warn = f"sim-skipped: {exc}"
    for delta in deltas:
        eps = delta ** 1.5
        p = from_spec({"kind": "pathological", "delta": delta})
        mg1 = MG1.from_rho(p, 1.0 - eps)
        closed = pathological_ratio_approx(delta, eps)
        quasi = (mean_response(mg1, "mserpt").mean_response
                 / quasi_response(mg1, "gittins").mean_response)
        row = [delta, eps, 1.0 - eps, closed, quasi]
        if sim_jobs:
            rm = sims.get((delta, "mserpt"))
            rg = sims.get((delta, "gittins"))
            if rm and rg:
                ratio = rm.mean / rg.mean
                ci = ratio * ((rm.ci / rm.mean) ** 2 + (rg.ci / rg.mean) ** 2) ** 0.5
                row += [ratio, ci]
            else:
                row += [float("nan"), float("nan")]
        rows.append(row)
    header = ["delta", "epsilon", "rho", "closed_form", "quasi_analytic"]
    if sim_jobs:
        header += ["sim_ratio", "sim_ratio_ci"]
    man = _manifest("pathological-sweep", {"deltas": deltas, "simulate": sim_jobs,
                                           "seed": args.seed, "warning": warn}, t0)
    out = _open_out(args.out)
    _write_csv(out, man, header, rows)
    if out is not sys.stdout:
        out.close()
    return 0


def cmd_verify(args) -> int:
    report = run_verify(args.cases, args.seed)
    print(report.summary())
    return 0 if report.passed else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="soapsched",
                                 description="Rank-function scheduling for the M/G/1")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank-dump", help="CSV of the three rank functions over the support")
    p.add_argument("--dist", required=True)
    p.add_argument("--midpoints", type=int, default=4)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_rank_dump)

    p = sub.add_parser("analyze", help="analytic mean response time")
    _add_system_args(p)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("simulate", help="event-driven simulation")
    _add_system_args(p)
    p.add_argument("--jobs", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--warmup", type=float, default=0.1)
    p.add_argument("--batches", type=int, default=20)
    p.add_argument("--trace", default=None, help="write an event-log CSV here")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("compare", help="simulate several policies on one system")
    _add_system_args(p, policy=False)
    p.add_argument("--policies", required=True, help="comma-separated policy names")
    p.add_argument("--jobs", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--warmup", type=float, default=0.1)
    p.add_argument("--batches", type=int, default=20)
    p.add_argument("--no-common-random", dest="common_random", action="store_false")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("ratio-curve", help="bound on the mean response time ratio vs load")
    p.add_argument("--grid", default=None, help="comma-separated rho values")
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_ratio_curve)

    p = sub.add_parser("pathological-sweep", help="near-worst-case ratio vs delta")
    p.add_argument("--deltas", default="0.1,0.01,0.001")
    p.add_argument("--simulate", type=int, default=0,
                   help="completions per simulated cell (0 = analytic columns only)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_pathological_sweep)

    p = sub.add_parser("verify", help="randomized invariant suite; exit 1 on failure")
    p.add_argument("--cases", type=int, default=200)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(fn=cmd_verify)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except SoapSchedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
