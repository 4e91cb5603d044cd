"""Rank-function scheduling for the M/G/1 queue.

Builds the Gittins, SERPT, M-SERPT, FB, and FCFS rank functions for
discrete (or quantized continuous) job size distributions, computes exact
mean response times through the hill/valley decomposition, evaluates the
piecewise approximation-ratio bound, and cross-validates everything with
an exact event-driven preemptive simulator.
"""

__version__ = "0.1.0"

from .dist import ContinuousSpec, DiscreteDist, MG1, bell_mixture_spec, from_spec, pathological, quantize
from .rank import (
    GittinsTable,
    PiecewiseLinearFn,
    Policy,
    efficiency,
    gittins_rank,
    increasing_envelope,
    mserpt_rank,
    policy_rank,
    serpt_rank,
)
from .hillvalley import HVDecomp, coload, decompose, excess, next_hill, prev_hill
from .analytic import (
    AnalyticResult,
    mean_response,
    pathological_ratio_approx,
    quasi_response,
    ratio_bound,
    ratio_bound_thresholds,
    residence_x,
    srpt_lower_bound,
    waiting_x,
)
from .sim import (
    Cell,
    Event,
    JobState,
    SimConfig,
    SimResult,
    compare_policies,
    merge_replications,
    next_event,
    run_cells,
    simulate,
)
from .verify import run_verify

__all__ = [
    "AnalyticResult", "Cell", "ContinuousSpec", "DiscreteDist", "Event", "GittinsTable",
    "HVDecomp", "JobState", "MG1", "PiecewiseLinearFn", "Policy", "SimConfig", "SimResult",
    "bell_mixture_spec", "coload", "compare_policies", "decompose", "efficiency", "excess",
    "from_spec", "gittins_rank", "increasing_envelope", "mean_response", "merge_replications", "mserpt_rank",
    "next_event", "next_hill", "pathological", "pathological_ratio_approx", "policy_rank",
    "prev_hill", "quantize", "quasi_response", "ratio_bound", "ratio_bound_thresholds",
    "residence_x", "run_cells", "run_verify", "serpt_rank", "simulate", "srpt_lower_bound",
    "waiting_x",
]
