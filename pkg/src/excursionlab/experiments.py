"""Experiment drivers: straddle studies and the checks built on them.

Every driver is a deterministic function of its arguments.  Candidate,
reference and replicate draws each use their own Philox stream keyed by
``(seed, domain + index)``, and work is split into fixed index blocks whose
results are merged in index order, so the worker count never changes output.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytic import DEFAULT_SERIES, SeriesConfig, exit_rate, limit_cdf_vec, lifetime_tail_ratio
from .core import (DOMAIN_AUX, DOMAIN_LIMIT, DOMAIN_REFERENCE, DOMAIN_REPLICATE, Interval, SampledPath, Side,
                   StraddleObservation, stream_generator)
from .engine import GridSpec, first_exit, refine_near, simulate_path
from .extract import downcrossing_local_time, enumerate_excursions, observation_from_arrays
from .functionals import DEFAULT_FUNCTIONALS, Functional, FunctionalId, evaluate_all
from .limit import DEFAULT_Q, QConfig, sample_limit_pairs_from, sample_q_arrays, sample_q_prefix
from .stats import (BucketReport, compare_proportions, family_expected_failures, ks_distance,
                    ks_two_sample, mean_se, quantile_edges, three_sigma_alpha, wilson_interval)

BLOCK = 2048


def _map_blocks(fn, args_list, workers: int):
    """``[fn(*args) for args in args_list]``, optionally across processes, in order."""
    if workers <= 1 or len(args_list) <= 1:
        return [fn(*args) for args in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*args_list)))


# Straddle study ---------------------------------------------------------------

@dataclass
class StudyResult:
    t: float
    observations: list
    indices: np.ndarray
    n_paths: int
    never_exited: int

    @property
    def acceptance_rate(self) -> float:
        return len(self.observations) / self.n_paths

    def exited(self):
        return [o for o in self.observations if not o.never_exited]

    def column(self, name: str) -> np.ndarray:
        return np.array([o.functionals[name] for o in self.exited()])

    def ages(self) -> np.ndarray:
        return np.array([o.age for o in self.exited()])

    def sides(self) -> np.ndarray:
        return np.array([o.x_sigma for o in self.exited()])


def straddle_candidate(index: int, t: float, start: float, interval: Interval, grid: GridSpec,
                       seed: int, functionals=DEFAULT_FUNCTIONALS, keep_excursion: bool = False):
    """Candidate path ``index``: ``None`` unless ``W_t`` lands in ``(a, b)``.

    ``W_t`` is drawn exactly; the path before ``t`` is the Brownian bridge
    back to ``start``, scanned in reversed time for ``sigma_t``, and the path
    after ``t`` is free Brownian motion scanned forward for ``d_t``.
    """
    rng = stream_generator(seed, DOMAIN_REPLICATE + index)
    w = start + math.sqrt(t) * rng.standard_normal()
    if not interval.a < w < interval.b:
        return None
    back = first_exit(np.array([0.0, t]), np.array([w, start]), interval, grid, rng)
    fwd = first_exit(np.array([t]), np.array([w]), interval, grid, rng, extend=True)
    if back.time is None:
        return StraddleObservation(t, 0.0, float(fwd.time), None, None, True, {})
    sigma = t - back.time
    clock = np.concatenate((back.time - back.times[::-1], fwd.times[1:] - sigma))
    values = np.concatenate((back.values[::-1], fwd.values[1:]))
    parts = (sigma, float(fwd.time), interval.boundary(back.side), clock, values, fwd.side)
    return observation_from_arrays(t, parts, interval, functionals, keep_excursion)


def _straddle_block(lo, hi, t, start, interval, grid, seed, functionals, keep_excursion):
    out = []
    for i in range(lo, hi):
        obs = straddle_candidate(i, t, start, interval, grid, seed, functionals, keep_excursion)
        if obs is not None:
            out.append((i, obs))
    return out


def run_straddle_study(t: float, n_target: int, start: float, interval: Interval, grid: GridSpec,
                       seed: int, functionals=DEFAULT_FUNCTIONALS, keep_excursion: bool = False,
                       workers: int = 1, block: int = BLOCK) -> StudyResult:
    """First ``n_target`` candidates (by index) with ``W_t`` in ``(a, b)``."""
    if n_target < 1:
        raise ValueError("n_target must be positive")
    found: list = []
    lo = 0
    batch = max(1, workers) * 2
    while len(found) < n_target:
        args = [(lo + k * block, lo + (k + 1) * block, t, start, interval, grid, seed, functionals,
                 keep_excursion) for k in range(batch)]
        for res in _map_blocks(_straddle_block, args, workers):
            found.extend(res)
        lo += batch * block
    found = found[:n_target]
    idx = np.array([i for i, _ in found], dtype=np.int64)
    obs = [o for _, o in found]
    return StudyResult(t, obs, idx, int(idx[-1]) + 1, sum(o.never_exited for o in obs))


# Conditional kernel identity at finite t -----------------------------------------

KERNEL_FUNCTIONALS = (
    Functional(FunctionalId.LIFETIME_TAIL, 0.1),
    Functional(FunctionalId.ENDPOINT_DISP),
    Functional(FunctionalId.SUP_DISP),
)


def _q_values(x, s, interval, grid, rng, functionals, cfg, qcfg):
    clock, values, lifetime, _ = sample_q_arrays(x, s, interval, grid, rng, cfg, qcfg)
    row = evaluate_all(functionals, clock, values, lifetime, interval, s)
    row["lifetime"] = lifetime
    return row


def _reference_block(indices, xs, ages, interval, grid, seed, functionals, cfg, qcfg, domain):
    out = []
    for i, x, s in zip(indices, xs, ages):
        rng = stream_generator(seed, domain + int(i))
        out.append(_q_values(float(x), float(s), interval, grid, rng, functionals, cfg, qcfg))
    return out


def reference_draws(indices, xs, ages, interval, grid, seed, functionals, cfg=DEFAULT_SERIES,
                    qcfg=DEFAULT_Q, workers=1, domain=DOMAIN_REFERENCE, block=256) -> dict:
    """One ``q(x_i, s_i, .)`` draw per entry; returns column name -> array,
    with a ``lifetime`` column besides the functionals."""
    n = len(indices)
    args = [(indices[k:k + block], xs[k:k + block], ages[k:k + block], interval, grid, seed,
             functionals, cfg, qcfg, domain) for k in range(0, n, block)]
    rows = [r for res in _map_blocks(_reference_block, args, workers) for r in res]
    return {k: np.array([r[k] for r in rows]) for k in rows[0]} if rows else {}


@dataclass
class KernelCheckResult:
    buckets: list
    edges: np.ndarray
    mode: str
    n_tests: int
    pass_fraction: float
    study: StudyResult = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.pass_fraction >= 0.8

    def summary(self) -> dict:
        return {"mode": self.mode, "n_tests": self.n_tests, "pass_fraction": self.pass_fraction,
                "alpha_per_test": three_sigma_alpha(),
                "expected_false_failures": family_expected_failures(self.n_tests, three_sigma_alpha()),
                "pass": self.passed}


def check_kernel_identity(t: float, n_target: int, start: float, interval: Interval, grid: GridSpec, seed: int,
                    functionals=KERNEL_FUNCTIONALS, n_buckets: int = 8, mode: str = "matched",
                    n_ref: int = 2000, min_obs: int = 100, cfg: SeriesConfig = DEFAULT_SERIES,
                    qcfg: QConfig = DEFAULT_Q, workers: int = 1, study: StudyResult = None) -> KernelCheckResult:
    """Bucketed comparison of straddle functionals with the conditional kernel.

    ``mode="matched"`` draws one reference excursion from ``q(x_i, s_i, .)``
    per observation at its own age ``s_i``, so no discretisation allowance
    is needed.  ``mode="midpoint"`` draws ``n_ref`` references at the bucket
    midpoint and widens the test by the change of the reference mean between
    the bucket edges.  Lifetime tails always use the analytic ratio.
    """
    if mode not in ("matched", "midpoint"):
        raise ValueError(f"unknown mode {mode!r}")
    if study is None:
        study = run_straddle_study(t, n_target, start, interval, grid, seed, functionals, workers=workers)
    exited = study.exited()
    idx = np.array([i for i, o in zip(study.indices, study.observations) if not o.never_exited])
    ages = study.ages()
    sides = study.sides()
    edges = quantile_edges(ages, n_buckets)
    mc = [f for f in functionals if f.kind is not FunctionalId.LIFETIME_TAIL]
    ref = {}
    if mode == "matched" and mc:
        ref = reference_draws(idx, sides, ages, interval, grid, seed, mc, cfg, qcfg, workers)
    reports = []
    for x in (interval.a, interval.b):
        for k in range(n_buckets):
            lo, hi = float(edges[k]), float(edges[k + 1])
            sel = (sides == x) & (ages >= lo) & (ages < hi)
            n = int(sel.sum())
            for f in functionals:
                if n < min_obs:
                    reports.append(BucketReport(x, lo, hi, f.name, n, math.nan, math.nan, math.nan,
                                                skipped=True))
                    continue
                emp = np.array([o.functionals[f.name] for o, s in zip(exited, sel) if s])
                emp_mean, emp_se = mean_se(emp)
                allowance = 0.0
                if f.kind is FunctionalId.LIFETIME_TAIL:
                    if mode == "matched":
                        p = np.array([lifetime_tail_ratio(x, s, f.param, interval, cfg) for s in ages[sel]])
                        ref_mean = float(p.mean())
                        se = math.sqrt(float(np.sum(p * (1 - p)))) / n
                    else:
                        mid = 0.5 * (lo + hi)
                        ref_mean = lifetime_tail_ratio(x, mid, f.param, interval, cfg)
                        se = emp_se
                        allowance = max(abs(lifetime_tail_ratio(x, e, f.param, interval, cfg) - ref_mean)
                                        for e in (max(lo, 1e-9), hi))
                elif mode == "matched":
                    ref_mean, ref_se = mean_se(ref[f.name][sel])
                    se = math.hypot(emp_se, ref_se)
                else:
                    ref_mean, ref_se, allowance = _midpoint_reference(x, lo, hi, f, interval, grid, seed, k,
                                                                      n_ref, cfg, qcfg, workers)
                    se = math.hypot(emp_se, ref_se)
                reports.append(BucketReport(x, lo, hi, f.name, n, emp_mean, ref_mean, se, allowance))
    live = [r for r in reports if not r.skipped]
    frac = sum(r.passed for r in live) / len(live) if live else 0.0
    return KernelCheckResult(reports, edges, mode, len(live), frac, study)


def _midpoint_reference(x, lo, hi, f, interval, grid, seed, k, n_ref, cfg, qcfg, workers):
    side = 0 if x == interval.a else 1
    means = []
    se_mid = math.nan
    for j, s in enumerate((0.5 * (lo + hi), max(lo, 1e-6), hi)):
        domain = DOMAIN_REFERENCE + ((side * 64 + k) * 4 + j + 1) * (1 << 40)
        ids = np.arange(n_ref)
        vals = reference_draws(ids, np.full(n_ref, x), np.full(n_ref, s), interval, grid, seed, (f,),
                               cfg, qcfg, workers, domain=domain)[f.name]
        m, se = mean_se(vals)
        means.append(m)
        if j == 0:
            se_mid = se
    allowance = max(abs(means[1] - means[0]), abs(means[2] - means[0]))
    return means[0], se_mid, allowance


# Convergence to the limit law -----------------------------------------------

def _p0_block(lo, hi, interval, grid, seed, functionals, cfg, qcfg, prefix_only):
    gens = [stream_generator(seed, DOMAIN_LIMIT + i) for i in range(lo, hi)]
    xs, ys = sample_limit_pairs_from(gens, interval, cfg)
    out = []
    for rng, x, y in zip(gens, xs, ys):
        x, y = float(x), float(y)
        if prefix_only:
            clock, values = sample_q_prefix(x, y, interval, grid, rng, cfg, qcfg)
            row = {"endpoint_disp": float(values[-1] - values[0])}
        else:
            clock, values, lifetime, _ = sample_q_arrays(x, y, interval, grid, rng, cfg, qcfg)
            row = evaluate_all(functionals, clock, values, lifetime, interval, y)
            row["lifetime"] = lifetime
        row["x"] = x
        row["y"] = y
        out.append(row)
    return out


def p0_sample(n: int, interval: Interval, grid: GridSpec, seed: int, functionals=DEFAULT_FUNCTIONALS,
              cfg: SeriesConfig = DEFAULT_SERIES, qcfg: QConfig = DEFAULT_Q, workers: int = 1,
              prefix_only: bool = False, block: int = 512) -> dict:
    """``n`` draws from the limit law; returns column name -> array.

    With ``prefix_only`` each excursion is sampled only up to its age, which
    suffices for ``endpoint_disp``.
    """
    args = [(lo, min(n, lo + block), interval, grid, seed, functionals, cfg, qcfg, prefix_only)
            for lo in range(0, n, block)]
    rows = [r for res in _map_blocks(_p0_block, args, workers) for r in res]
    return {k: np.array([r[k] for r in rows]) for k in rows[0]}


@dataclass
class ConvergenceRow:
    t: float
    n_obs: int
    acceptance_rate: float
    never_exited: int
    ks_age: object
    p_a: float
    p_a_ci: tuple
    ks_functionals: dict

    def as_dict(self) -> dict:
        return {"t": self.t, "n_obs": self.n_obs, "acceptance_rate": self.acceptance_rate,
                "never_exited": self.never_exited, "ks_age": self.ks_age.as_dict(), "p_a": self.p_a,
                "p_a_ci": list(self.p_a_ci),
                "ks_functionals": {k: v.as_dict() for k, v in self.ks_functionals.items()}}


def convergence_row(study: StudyResult, interval: Interval, reference: dict, functionals,
                    cfg: SeriesConfig = DEFAULT_SERIES, alpha: float = 0.01) -> ConvergenceRow:
    ages = study.ages()
    sides = study.sides()
    ks_age = ks_distance(ages, lambda s: limit_cdf_vec(s, interval, cfg), alpha)
    k_a = int(np.sum(sides == interval.a))
    ks_f = {}
    for f in functionals:
        if f.continuous and f.name in reference:
            ks_f[f.name] = ks_two_sample(study.column(f.name), reference[f.name], alpha)
    return ConvergenceRow(study.t, ages.size, study.acceptance_rate, study.never_exited, ks_age,
                          k_a / ages.size, wilson_interval(k_a, ages.size, alpha), ks_f)


def check_convergence(t_list, n_target: int, start: float, interval: Interval, grid: GridSpec, seed: int,
                      n_ref: int = 20000, functionals=DEFAULT_FUNCTIONALS, cfg: SeriesConfig = DEFAULT_SERIES,
                      qcfg: QConfig = DEFAULT_Q, workers: int = 1, studies: dict = None):
    """One row per ``t``: KS of the age against ``F``, ``P(W_sigma = a)``, and
    two-sample KS of each continuous functional against a limit-law sample."""
    t_list = list(t_list)
    if any(t2 <= t1 for t1, t2 in zip(t_list, t_list[1:])):
        raise ValueError("t values must be increasing")
    reference = p0_sample(n_ref, interval, grid, seed, functionals, cfg, qcfg, workers)
    rows = []
    for t in t_list:
        study = (studies or {}).get(t)
        if study is None:
            study = run_straddle_study(t, n_target, start, interval, grid, seed, functionals, workers=workers)
        rows.append(convergence_row(study, interval, reference, functionals, cfg))
    return rows, reference


# Application: joint age/displacement event ---------------------------------

@dataclass
class ApplicationPoint:
    u: float
    y: float
    k_direct: int
    n_direct: int
    k_limit: int
    n_limit: int
    b_contribution: int
    comparison: object

    @property
    def passed(self) -> bool:
        return self.comparison.agree and self.b_contribution == 0

    def as_dict(self) -> dict:
        d = {"u": self.u, "y": self.y, "b_contribution": self.b_contribution}
        d.update(self.comparison.as_dict())
        d["pass"] = self.passed
        return d


def application_event(age, disp, u: float, y: float):
    age = np.asarray(age)
    disp = np.asarray(disp)
    return (age > 0) & (age < u) & (disp > 0) & (disp < y)


def application_limit(u_list, y_list, interval: Interval, study: StudyResult, limit: dict) -> list:
    """Direct frequency of ``{0 < t - sigma_t < u, 0 < W_t - W_sigma < y}`` at
    large ``t`` against the same event under the limit law."""
    ages = study.ages()
    disp = study.column("endpoint_disp")
    out = []
    for u in u_list:
        for y in y_list:
            if not (u > 0 and 0 < y < interval.length()):
                raise ValueError(f"need u > 0 and 0 < y < b - a, got u={u}, y={y}")
            hit_d = application_event(ages, disp, u, y)
            hit_l = application_event(limit["y"], limit["endpoint_disp"], u, y)
            b_hits = int(np.sum(hit_l & (limit["x"] == interval.b)))
            cmp = compare_proportions(int(hit_d.sum()), hit_d.size, int(hit_l.sum()), hit_l.size)
            out.append(ApplicationPoint(u, y, int(hit_d.sum()), hit_d.size, int(hit_l.sum()), hit_l.size,
                                        b_hits, cmp))
    return out


# Excursions per unit local time ------------------------------------------------

@dataclass
class RateReplicate:
    count: int
    count_double: int
    local_time: float


def local_time_at(path: SampledPath, level: float, epsilon: float, horizon: float, fine_dt: float, rng,
                  upward: bool = True) -> float:
    """Overshoot-corrected downcrossing estimate at ``level``.

    Steps near the band are first refined to ``fine_dt`` in two stages.
    With ``upward=False`` the band ``[level - epsilon, level]`` is used,
    through the path mirrored about ``level``.
    """
    band = (level, level + epsilon) if upward else (level - epsilon, level)
    mid_dt = math.sqrt(fine_dt * float(np.max(np.diff(path.times))))
    path = refine_near(path, band[0], band[1], mid_dt, rng)
    path = refine_near(path, band[0], band[1], fine_dt, rng)
    if not upward:
        path = SampledPath(path.times, 2 * level - path.values)
    return downcrossing_local_time(path, level, epsilon, horizon, step_sd=math.sqrt(fine_dt))


def rate_replicate(index: int, horizon: float, s_threshold: float, interval: Interval, grid: GridSpec,
                   epsilon: float, fine_local: float, seed: int, side: Side = Side.A) -> RateReplicate:
    domain = DOMAIN_REPLICATE if side is Side.A else DOMAIN_AUX
    rng = stream_generator(seed, domain + index)
    level = interval.boundary(side)
    path = simulate_path(level, horizon, grid, rng)
    exc = enumerate_excursions(path, interval, grid, rng)
    lives = np.array([e.lifetime for e in exc if e.side is side and e.alpha <= horizon])
    lt = local_time_at(path, level, epsilon, horizon, fine_local, rng, upward=side is Side.A)
    return RateReplicate(int(np.sum(lives > s_threshold)), int(np.sum(lives > 2 * s_threshold)), lt)


def _rate_block(lo, hi, *args):
    return [rate_replicate(i, *args) for i in range(lo, hi)]


@dataclass
class RateReport:
    side: Side
    s_threshold: float
    replicates: list
    reference: float

    @property
    def count(self) -> int:
        return sum(r.count for r in self.replicates)

    @property
    def count_double(self) -> int:
        return sum(r.count_double for r in self.replicates)

    @property
    def local_time(self) -> float:
        return sum(r.local_time for r in self.replicates)

    @property
    def rate(self) -> float:
        return self.count / self.local_time

    @property
    def ratio(self) -> float:
        return self.rate / self.reference

    @property
    def ratio_se(self) -> float:
        """Delta-method SE of the ratio of sums across replicates."""
        c = np.array([r.count for r in self.replicates], dtype=float)
        l = np.array([r.local_time for r in self.replicates])
        n = c.size
        if n < 2 or l.sum() == 0:
            return math.inf
        resid = c - self.rate * l
        return float(math.sqrt(np.sum(resid ** 2) * n / (n - 1)) / l.sum() / self.reference)

    @property
    def passed(self) -> bool:
        return 0.9 <= self.ratio <= 1.1

    def as_dict(self) -> dict:
        return {"side": self.side.value, "s_threshold": self.s_threshold, "replicates": len(self.replicates),
                "count": self.count, "count_double_threshold": self.count_double,
                "local_time": self.local_time, "rate": self.rate, "exit_rate": self.reference,
                "ratio": self.ratio, "ratio_se": self.ratio_se, "pass": self.passed}


def rate_check(horizon: float, s_threshold: float, interval: Interval, grid: GridSpec, seed: int,
               n_replicates: int = 50, epsilon: float = 0.01, fine_local: float = 1e-6,
               side: Side = Side.A, cfg: SeriesConfig = DEFAULT_SERIES, workers: int = 1,
               block: int = 5) -> RateReport:
    """Excursions from ``side`` with lifetime above ``s_threshold`` per unit local time."""
    args = [(lo, min(n_replicates, lo + block), horizon, s_threshold, interval, grid, epsilon, fine_local,
             seed, side) for lo in range(0, n_replicates, block)]
    reps = [r for res in _map_blocks(_rate_block, args, workers) for r in res]
    return RateReport(side, s_threshold, reps, exit_rate(side, s_threshold, interval, cfg))
