"""Event-driven M/G/1 simulator for rank-based policies plus SRPT.

No time-stepping: every event time (arrival, completion, rank crossing,
rank-piece boundary) is the exact root of a linear function. Waiting jobs
keep a static rank frozen at their current age; only the served job's rank
evolves. Dispatch order is (rank, arrival id), so equal ranks go to the
earlier arrival.

Between up-jumps the built-in rank functions are flat or decreasing, so a
served job can lose priority only at a jump; the engine therefore asks the
rank function for the first jump whose post-jump value beats the waiting
minimum instead of re-dispatching at every jump. Strictly increasing rank
segments (least-attained-service) have no event-driven fixed point under
literal earlier-arrival ties - the alternation limit is an even split - so
tied jobs on increasing segments advance as a shared cohort, which is also
how that policy is defined and what its closed forms describe.
"""

from __future__ import annotations

import bisect
import math
from array import array
from dataclasses import dataclass
from heapq import heappop, heappush

import numpy as np
from scipy import stats

from .dist import MG1
from .errors import ParameterError, UnsupportedPolicyError
from .rank import GittinsFn, PiecewiseLinearFn, Policy, policy_rank

_CHUNK = 1 << 16
_INF = math.inf
_JUMP_TOL = 1e-12


@dataclass(frozen=True)
class SimConfig:
    mg1: MG1
    policy: object  # Policy, policy name, or custom PiecewiseLinearFn
    jobs: int = 1_000_000  # completions counted (warmup share included)
    warmup: float = 0.1
    seed: int = 0
    batches: int = 20

    def __post_init__(self):
        if self.jobs < 10_000:
            raise ParameterError("need >= 1e4 completions for CI validity")
        if not 0.0 <= self.warmup < 1.0:
            raise ParameterError("warmup must lie in [0, 1)")
        if self.batches < 10:
            raise ParameterError("need >= 10 batches")


@dataclass(frozen=True)
class SimResult:
    policy: str
    mean: float
    ci: float  # 95% half-width, batch means
    completions: int
    seed: int


@dataclass(frozen=True)
class JobState:
    id: int
    size: float
    age: float
    arrival_time: float


@dataclass(frozen=True)
class Event:
    kind: str  # arrival | completion | crossing | boundary
    time: float
    age: float  # served job's age when the event fires


def next_event(job: JobState, waiting_min_rank: float, rank: PiecewiseLinearFn,
               next_arrival: float = _INF, now: float = 0.0,
               waiting_id: int | None = None) -> Event:
    """Earliest event for the served job against a static waiting minimum.

    Candidates: next arrival, completion at age == size, first age at which
    the job's rank exceeds waiting_min_rank (ties lose only to an earlier
    arrival), and the next rank-piece boundary. Exact roots of the linear
    pieces; no iteration.
    """
    strict = waiting_id is None or waiting_id > job.id
    w = waiting_min_rank
    cross = None
    boundary = None
    n = rank.ages.size
    i = int(np.searchsorted(rank.ages, job.age, side="right")) - 1
    while i < n and rank.ages[i] < job.size:
        lo = float(rank.ages[i])
        hi = float(rank.ages[i + 1]) if i + 1 < n else rank.end
        v0, s = float(rank.values[i]), float(rank.slopes[i])
        seg_start = max(job.age, lo)
        if seg_start > job.age and _beats(v0, w, strict):
            cross = seg_start  # up-jump at the piece start
            break
        if s > 0.0 and w != _INF:
            x = lo + (w - v0) / s  # rank reaches w here, exceeds just after
            if x < hi and x >= seg_start:
                cross = x
                break
        if boundary is None and hi > job.age and hi < min(job.size, rank.end):
            boundary = hi
        i += 1
    best = Event("completion", now + (job.size - job.age), job.size)
    if cross is not None and cross < job.size:
        t = now + (cross - job.age)
        if t < best.time:
            best = Event("crossing", t, cross)
    if boundary is not None:
        t = now + (boundary - job.age)
        if t < best.time:
            best = Event("boundary", t, boundary)
    if next_arrival < best.time:
        best = Event("arrival", next_arrival, job.age + (next_arrival - now))
    return best


def _beats(value: float, w: float, strict: bool) -> bool:
    if w == _INF:
        return False
    return value > w if strict else value >= w


# --- rank adapters ----------------------------------------------------------

class _MaxTree:
    """Static max segment tree answering 'first index >= i0 with value > w
    (or >= w)' in O(log n)."""

    __slots__ = ("n", "size", "tree")

    def __init__(self, vals):
        n = len(vals)
        size = 1
        while size < max(n, 1):
            size <<= 1
        tree = [-_INF] * (2 * size)
        tree[size:size + n] = [float(v) for v in vals]
        for i in range(size - 1, 0, -1):
            a, b = tree[2 * i], tree[2 * i + 1]
            tree[i] = a if a >= b else b
        self.n, self.size, self.tree = n, size, tree

    def first_above(self, i0: int, w: float, strict: bool = True) -> int:
        n, size, tree = self.n, self.size, self.tree
        if i0 >= n:
            return -1
        i = i0 + size
        hit = tree[i] > w if strict else tree[i] >= w
        if not hit:
            while True:
                while i & 1:
                    i >>= 1
                    if i <= 1:
                        return -1
                i += 1
                if (tree[i] > w) if strict else (tree[i] >= w):
                    break
        while i < size:
            i <<= 1
            good = tree[i] > w if strict else tree[i] >= w
            if not good:
                i += 1
        j = i - size
        return j if j < n else -1


class _NonincAdapter:
    """Rank flat or decreasing between up-jumps at known ages."""

    __slots__ = ("r0", "jump_ages", "jump_vals", "step", "tree", "sorted_vals",
                 "_ages", "_vals", "_slopes", "_gittins")

    def __init__(self, fn):
        if isinstance(fn, GittinsFn):
            t = fn.table
            self.r0 = float(t.ranks[0])
            self.jump_ages = [float(a) for a in t.ages[1:]]
            self.jump_vals = [float(v) for v in t.ranks[1:]]
            self.step = False
            self._gittins = fn
            self._ages = self._vals = self._slopes = None
        else:
            self.r0 = float(fn.values[0])
            ages, vals = [], []
            for i in range(1, fn.ages.size):
                left = fn.values[i - 1] + fn.slopes[i - 1] * (fn.ages[i] - fn.ages[i - 1])
                if fn.values[i] > left:
                    ages.append(float(fn.ages[i]))
                    vals.append(float(fn.values[i]))
            self.jump_ages = ages
            self.jump_vals = vals
            self.step = bool(np.all(fn.slopes == 0.0))
            self._gittins = None
            self._ages = [float(a) for a in fn.ages]
            self._vals = [float(v) for v in fn.values]
            self._slopes = [float(s) for s in fn.slopes]
        self.sorted_vals = all(b >= a for a, b in zip(self.jump_vals, self.jump_vals[1:]))
        self.tree = None if self.sorted_vals else _MaxTree(self.jump_vals)

    def value(self, a: float) -> float:
        if self._gittins is not None:
            return self._gittins.value(a)
        i = bisect.bisect_right(self._ages, a) - 1
        return self._vals[i] + self._slopes[i] * (a - self._ages[i])

    def upper_bound(self, a: float) -> float:
        """Bound on value(a): the last jump level reached (exact for steps,
        an upper bound when the rank decays after the jump)."""
        j = bisect.bisect_right(self.jump_ages, a) - 1
        return self.r0 if j < 0 else self.jump_vals[j]

    def stop(self, a: float, w: float, wid: int, cur_id: int):
        """First jump age > a whose post-jump value loses to the waiting
        minimum (w, wid): value > w, or value == w against an earlier
        arrival. Returns (age, post_value) or None."""
        vals = self.jump_vals
        n = len(vals)
        j0 = bisect.bisect_right(self.jump_ages, a)
        if self.sorted_vals:
            j = bisect.bisect_left(vals, w)
            if j < j0:
                j = j0
            if j >= n:
                return None
            if vals[j] == w and wid > cur_id:
                j = max(j0, bisect.bisect_right(vals, w))
                if j >= n:
                    return None
        else:
            j = self.tree.first_above(j0, w, strict=False)
            if j < 0:
                return None
            if vals[j] == w and wid > cur_id:
                j = self.tree.first_above(j, w, strict=True)
                if j < 0:
                    return None
        return self.jump_ages[j], vals[j]


def _has_increasing(fn) -> bool:
    return isinstance(fn, PiecewiseLinearFn) and bool(np.any(fn.slopes > 0.0))


# --- result assembly --------------------------------------------------------

def _batch_ci(measured: np.ndarray, batches: int) -> tuple[float, float]:
    m = measured.size // batches
    means = measured[: m * batches].reshape(batches, m).mean(axis=1)
    half = float(stats.t.ppf(0.975, batches - 1) * means.std(ddof=1) / math.sqrt(batches))
    return float(measured.mean()), half


def _result(policy_name: str, responses, cfg: SimConfig) -> SimResult:
    skip = int(round(cfg.warmup * cfg.jobs))
    measured = np.asarray(responses[skip:], dtype=float)
    mean, ci = _batch_ci(measured, cfg.batches)
    return SimResult(policy_name, mean, ci, int(measured.size), cfg.seed)


def _check_conservation(served: float, done_work: float, leftover: float):
    if abs(served - done_work - leftover) > 1e-6 * max(1.0, served):
        raise AssertionError(
            f"work conservation violated: served={served!r} "
            f"completed={done_work!r} in-flight={leftover!r}"
        )


class _Stream:
    """Chunked Poisson arrival stream with paired size draws. The draws are
    policy-independent, so equal seeds give common random numbers."""

    __slots__ = ("rng", "lam", "sizes", "cum", "t", "_gaps", "_draws", "_i")

    def __init__(self, mg1: MG1, seed: int):
        self.rng = np.random.default_rng(seed)
        self.lam = mg1.lam
        self.sizes = mg1.dist.sizes
        self.cum = mg1.dist.cum_probs
        self.t = 0.0
        self._refill()

    def _refill(self):
        self._gaps = self.rng.exponential(1.0 / self.lam, _CHUNK)
        u = self.rng.random(_CHUNK)
        idx = np.minimum(np.searchsorted(self.cum, u, side="right"), self.sizes.size - 1)
        self._draws = self.sizes[idx]
        self._i = 0

    def next(self) -> tuple[float, float]:
        if self._i >= _CHUNK:
            self._refill()
        self.t += self._gaps[self._i]
        s = self._draws[self._i]
        self._i += 1
        return self.t, float(s)


def _lam_zero(cfg: SimConfig, name: str) -> SimResult:
    # no queueing: every response time equals the job size exactly
    rng = np.random.default_rng(cfg.seed)
    u = rng.random(cfg.jobs)
    idx = np.minimum(np.searchsorted(cfg.mg1.dist.cum_probs, u, side="right"),
                     cfg.mg1.dist.sizes.size - 1)
    return _result(name, cfg.mg1.dist.sizes[idx], cfg)


# --- engines ----------------------------------------------------------------

def _run_noninc(cfg: SimConfig, ad: _NonincAdapter, name: str, trace=None) -> SimResult:
    stream = _Stream(cfg.mg1, cfg.seed)
    target = cfg.jobs
    size = array("d")
    age = array("d")
    born = array("d")
    responses = array("d")
    heap: list[tuple[float, int]] = []
    cur = -1
    cur_age = 0.0
    now = 0.0
    served = 0.0
    done_work = 0.0
    r0 = ad.r0
    log = trace.append if trace is not None else None
    ad_stop = ad.stop
    ad_value = ad.value
    ad_upper = ad.upper_bound
    stream_next = stream.next
    next_t, next_size = stream_next()

    n_resp = 0
    while n_resp < target:
        if cur < 0:
            if heap:
                r, cur = heappop(heap)
                cur_age = age[cur]
                if log:
                    log((now, "serve", cur, cur_age, r))
            else:
                now = next_t
                j = len(size)
                size.append(next_size)
                age.append(0.0)
                born.append(now)
                next_t, next_size = stream_next()
                cur = j
                cur_age = 0.0
                if log:
                    log((now, "arrive", j, 0.0, r0))
                    log((now, "serve", j, 0.0, r0))
            continue

        t_comp = now + (size[cur] - cur_age)
        if heap:
            w, wid = heap[0]
            st = ad_stop(cur_age, w, wid, cur)
        else:
            st = None
        t_stop = now + (st[0] - cur_age) if st is not None and st[0] < size[cur] else _INF

        if next_t < t_comp and next_t < t_stop:
            # arrival
            delta = next_t - now
            cur_age += delta
            served += delta
            now = next_t
            j = len(size)
            size.append(next_size)
            age.append(0.0)
            born.append(now)
            next_t, next_size = stream_next()
            if log:
                log((now, "arrive", j, 0.0, r0))
            if r0 < ad_upper(cur_age):
                v = ad_value(cur_age)
                if r0 < v:
                    age[cur] = cur_age
                    heappush(heap, (v, cur))
                    if log:
                        log((now, "preempt", cur, cur_age, v))
                    cur = j
                    cur_age = 0.0
                    if log:
                        log((now, "serve", j, 0.0, r0))
                    continue
            heappush(heap, (r0, j))
        elif t_comp <= t_stop:
            delta = t_comp - now
            served += delta
            done_work += size[cur]
            now = t_comp
            responses.append(now - born[cur])
            n_resp += 1
            if log:
                log((now, "complete", cur, size[cur], ad_value(cur_age)))
            age[cur] = size[cur]
            cur = -1
        else:
            # served job jumps above the waiting minimum: yield
            stop_age, stop_val = st
            delta = t_stop - now
            served += delta
            now = t_stop
            age[cur] = stop_age
            heappush(heap, (stop_val, cur))
            if log:
                log((now, "yield", cur, stop_age, stop_val))
            cur = -1

    leftover = (cur_age if cur >= 0 else 0.0) + sum(age[j] for _, j in heap)
    _check_conservation(served, done_work, leftover)
    return _result(name, responses, cfg)


def _run_inc(cfg: SimConfig, fn: PiecewiseLinearFn, name: str, trace=None) -> SimResult:
    """Cohort engine for rank functions with increasing pieces (FB, custom).

    Tied jobs whose rank is strictly increasing share the server so their
    ranks stay equal; a tied job on a flat or decreasing piece takes the
    server alone (the alternation limit of earlier-arrival ties).
    """
    stream = _Stream(cfg.mg1, cfg.seed)
    target = cfg.jobs
    ages_l = [float(a) for a in fn.ages]
    vals_l = [float(v) for v in fn.values]
    slopes_l = [float(s) for s in fn.slopes]
    end = fn.end

    def value(a: float) -> float:
        i = bisect.bisect_right(ages_l, a) - 1
        return vals_l[i] + slopes_l[i] * (a - ages_l[i])

    def piece(a: float) -> tuple[float, float]:
        """(slope, hi) of the piece containing age a."""
        i = bisect.bisect_right(ages_l, a) - 1
        hi = ages_l[i + 1] if i + 1 < len(ages_l) else end
        return slopes_l[i], hi

    r0 = vals_l[0]
    size = array("d")
    age = array("d")
    born = array("d")
    responses = array("d")
    heap: list[tuple[float, int]] = []
    members: list[int] = []
    w_c = 0.0
    now = 0.0
    served = 0.0
    done_work = 0.0
    next_t, next_size = stream.next()
    log = trace.append if trace is not None else None

    def freeze(ids):
        for j in ids:
            heappush(heap, (w_c, j))
            if log:
                log((now, "freeze", j, age[j], w_c))

    while len(responses) < target:
        if not members:
            if heap:
                r, j = heappop(heap)
                group = [j]
                while heap and heap[0][0] == r:
                    group.append(heappop(heap)[1])
                holders = [g for g in group if piece(age[g])[0] <= 0.0]
                if holders:
                    keep = holders[0]  # heap pops in id order
                    for g in group:
                        if g != keep:
                            heappush(heap, (r, g))
                    members = [keep]
                else:
                    members = group
                w_c = r
            else:
                now = next_t
                j = len(size)
                size.append(next_size)
                age.append(0.0)
                born.append(now)
                next_t, next_size = stream.next()
                if log:
                    log((now, "arrive", j, 0.0, r0))
                members = [j]
                w_c = r0
            if log:
                for j in members:
                    log((now, "serve", j, age[j], w_c))
            continue

        if len(members) > 1:
            # flat-beats-rising: a member whose piece stopped increasing
            # holds the server alone while the others stay tied at w_c
            flats = [j for j in members if piece(age[j])[0] <= 0.0]
            if flats:
                keep = min(flats)
                freeze([j for j in members if j != keep])
                members = [keep]

        # shares keep member ranks equal: c_i proportional to 1/slope_i
        pieces = [piece(age[j]) for j in members]
        if len(members) == 1 and pieces[0][0] <= 0.0:
            shares = [1.0]
            sigma = 0.0  # rank not rising
        else:
            inv = [1.0 / s for s, _ in pieces]
            tot = sum(inv)
            shares = [v / tot for v in inv]
            sigma = 1.0 / tot

        t_comp, i_comp = _INF, -1
        t_piece, i_piece = _INF, -1
        for i, j in enumerate(members):
            t = now + (size[j] - age[j]) / shares[i]
            if t < t_comp:
                t_comp, i_comp = t, i
            hi = pieces[i][1]
            if hi < size[j]:
                t = now + (hi - age[j]) / shares[i]
                if t < t_piece:
                    t_piece, i_piece = t, i
        t_reach = _INF
        if heap and sigma > 0.0 and heap[0][0] > w_c:
            t_reach = now + (heap[0][0] - w_c) / sigma
        elif heap and sigma > 0.0:
            t_reach = now  # already level with the waiting minimum

        t_min = min(t_comp, t_piece, t_reach, next_t)

        def advance(t):
            nonlocal now, w_c, served
            dt = t - now
            if dt > 0.0:
                for i, j in enumerate(members):
                    age[j] += shares[i] * dt
                w_c += sigma * dt
                served += dt
                now = t

        if t_comp == t_min:
            advance(t_comp)
            pin = members[i_comp]
            age[pin] = size[pin]
            finished = [j for j in members
                        if size[j] - age[j] <= 1e-12 * max(1.0, size[j])]
            for j in finished:
                members.remove(j)
                age[j] = size[j]
                done_work += size[j]
                responses.append(now - born[j])
                if log:
                    log((now, "complete", j, size[j], w_c))
        elif t_piece == t_min:
            advance(t_piece)
            j = members[i_piece]
            hi = pieces[i_piece][1]
            age[j] = hi
            # exact left limit of the piece just finished, immune to the
            # accumulated drift in w_c
            pi = bisect.bisect_left(ages_l, hi) - 1
            v_left = vals_l[pi] + slopes_l[pi] * (hi - ages_l[pi])
            v_new = value(hi)
            if v_new > v_left + _JUMP_TOL:
                members.remove(j)  # up-jump: member leaves the cohort
                heappush(heap, (v_new, j))
                if log:
                    log((now, "yield", j, hi, v_new))
            else:
                w_c = v_new  # re-pin the common rank at the exact boundary
                # a flat/decreasing continuation is handled by the loop-top
                # flat-beats-rising rule
        elif t_reach == t_min:
            advance(t_reach)
            w = heap[0][0]
            w_c = w  # pin exactly: cohort rank has risen to the waiting level
            joiners = []
            while heap and heap[0][0] == w:
                joiners.append(heappop(heap)[1])
            holders = [g for g in joiners if piece(age[g])[0] <= 0.0]
            if holders:
                keep = holders[0]
                for g in joiners:
                    if g != keep:
                        heappush(heap, (w, g))
                freeze(members)
                members = [keep]
                if log:
                    log((now, "serve", keep, age[keep], w))
            else:
                members.extend(joiners)
                if log:
                    for g in joiners:
                        log((now, "absorb", g, age[g], w))
        else:
            advance(next_t)
            now = next_t
            j = len(size)
            size.append(next_size)
            age.append(0.0)
            born.append(now)
            next_t, next_size = stream.next()
            if log:
                log((now, "arrive", j, 0.0, r0))
            if r0 < w_c:
                freeze(members)
                members = [j]
                w_c = r0
                if log:
                    log((now, "serve", j, 0.0, r0))
            elif r0 == w_c and piece(0.0)[0] > 0.0:
                members.append(j)
                if log:
                    log((now, "absorb", j, 0.0, r0))
            else:
                heappush(heap, (r0, j))

    leftover = sum(age[j] for j in members) + sum(age[j] for _, j in heap)
    _check_conservation(served, done_work, leftover)
    return _result(name, responses, cfg)


def _run_srpt(cfg: SimConfig, trace=None) -> SimResult:
    stream = _Stream(cfg.mg1, cfg.seed)
    target = cfg.jobs
    sizes = array("d")
    born = array("d")
    responses = array("d")
    heap: list[tuple[float, int]] = []  # (remaining at freeze, id)
    cur = -1
    rem = 0.0
    now = 0.0
    served = 0.0
    done_work = 0.0
    next_t, next_size = stream.next()
    log = trace.append if trace is not None else None

    while len(responses) < target:
        if cur < 0:
            if heap:
                rem, cur = heappop(heap)
                if log:
                    log((now, "serve", cur, sizes[cur] - rem, rem))
            else:
                now = next_t
                sizes.append(next_size)
                born.append(now)
                cur = len(sizes) - 1
                rem = next_size
                next_t, next_size = stream.next()
                if log:
                    log((now, "arrive", cur, 0.0, rem))
                    log((now, "serve", cur, 0.0, rem))
            continue
        t_comp = now + rem
        if next_t < t_comp:
            delta = next_t - now
            rem -= delta
            served += delta
            now = next_t
            sizes.append(next_size)
            born.append(now)
            j = len(sizes) - 1
            if log:
                log((now, "arrive", j, 0.0, next_size))
            if next_size < rem:  # tie keeps the earlier arrival
                heappush(heap, (rem, cur))
                if log:
                    log((now, "preempt", cur, sizes[cur] - rem, rem))
                cur = j
                rem = next_size
                if log:
                    log((now, "serve", j, 0.0, rem))
            else:
                heappush(heap, (next_size, j))
            next_t, next_size = stream.next()
        else:
            served += rem
            done_work += sizes[cur]
            now = t_comp
            responses.append(now - born[cur])
            if log:
                log((now, "complete", cur, sizes[cur], 0.0))
            cur = -1
            rem = 0.0

    leftover = (sizes[cur] - rem if cur >= 0 else 0.0) \
        + sum(sizes[j] - r for r, j in heap)
    _check_conservation(served, done_work, leftover)
    return _result("srpt", responses, cfg)


def simulate(config: SimConfig, trace: list | None = None) -> SimResult:
    """Run one replication; deterministic given (config, seed)."""
    policy = config.policy
    if isinstance(policy, PiecewiseLinearFn):
        name = "custom"
        fn = policy
    else:
        policy = Policy.parse(policy)
        name = policy.value
        if policy is Policy.PS:
            raise UnsupportedPolicyError("processor sharing is analytic-only")
        if policy is Policy.SRPT:
            if config.mg1.lam == 0.0:
                return _lam_zero(config, name)
            return _run_srpt(config, trace)
        fn = policy_rank(policy, config.mg1.dist)
    if config.mg1.lam == 0.0:
        return _lam_zero(config, name)
    if _has_increasing(fn):
        return _run_inc(config, fn, name, trace)
    return _run_noninc(config, _NonincAdapter(fn), name, trace)


def compare_policies(mg1: MG1, policies, jobs: int = 1_000_000, seed: int = 0,
                     warmup: float = 0.1, batches: int = 20,
                     common_random: bool = True, threads: int | None = None) -> list[SimResult]:
    """Simulate several policies; with common_random the arrival/size
    streams are identical across policies, sharpening ratio estimates."""
    cells = []
    for i, pol in enumerate(policies):
        s = seed if common_random else seed + i
        pol = pol if isinstance(pol, PiecewiseLinearFn) else Policy.parse(pol).value
        cells.append(Cell(mg1.dist.to_spec(), mg1.lam, pol, jobs, s, warmup, batches))
    return run_cells(cells, threads=threads)


@dataclass(frozen=True)
class Cell:
    """Picklable unit of simulation work for the process pool."""

    dist_spec: dict
    lam: float
    policy: object
    jobs: int = 1_000_000
    seed: int = 0
    warmup: float = 0.1
    batches: int = 20


def _cell_worker(cell: Cell) -> SimResult:
    from .dist import from_spec

    mg1 = MG1(from_spec(cell.dist_spec), cell.lam)
    return simulate(SimConfig(mg1, cell.policy, jobs=cell.jobs, warmup=cell.warmup,
                              seed=cell.seed, batches=cell.batches))


def pool_size(n_cells: int, threads: int | None = None) -> int:
    import os

    cap = threads if threads is not None else os.environ.get("SOAP_SCHED_THREADS")
    cap = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(cap, n_cells))


def run_cells(cells: list[Cell], threads: int | None = None) -> list[SimResult]:
    """Run independent cells on a worker pool; results keep input order."""
    procs = pool_size(len(cells), threads)
    if procs <= 1 or len(cells) <= 1:
        return [_cell_worker(c) for c in cells]
    import multiprocessing as mp

    with mp.get_context("fork").Pool(procs) as pool:
        return pool.map(_cell_worker, cells)


def merge_replications(results: list[SimResult]) -> SimResult:
    """Combine independent replications (distinct seeds, same policy) into
    one estimate: completion-weighted mean, half-widths pooled as for a sum
    of independent errors."""
    if not results:
        raise ParameterError("nothing to merge")
    if len({r.policy for r in results}) != 1:
        raise ParameterError("replications must share one policy")
    n = sum(r.completions for r in results)
    mean = sum(r.mean * r.completions for r in results) / n
    half = math.sqrt(sum((r.ci * r.completions) ** 2 for r in results)) / n
    return SimResult(results[0].policy, mean, half, n, results[0].seed)
