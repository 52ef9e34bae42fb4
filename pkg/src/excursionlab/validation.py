"""Certification of the analytic series and the samplers against oracles."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import DEFAULT_SERIES, SeriesConfig, exit_rate, ito_tail, limit_cdf_vec, psi
from .core import DOMAIN_LIMIT, DOMAIN_ORACLE, Interval, Side, stream_generator
from .engine import GridSpec
from .experiments import reference_draws
from .functionals import Functional, FunctionalId
from .limit import DEFAULT_Q, QConfig, sample_limit_pairs_from
from .oracles import epsilon_excursions, survival_counts, uniform_exit_times
from .stats import ks_distance, ks_two_sample, proportion_se


@dataclass(frozen=True)
class PsiCheck:
    x: float
    s: float
    analytic: float
    estimate: float
    se: float

    @property
    def passed(self) -> bool:
        return abs(self.estimate - self.analytic) <= 3.0 * self.se

    def as_dict(self) -> dict:
        return {"x": self.x, "s": self.s, "analytic": self.analytic, "estimate": self.estimate,
                "se": self.se, "pass": self.passed}


def psi_oracle_check(interval: Interval, xs, ss, n_paths: int, seed: int, dt: float = 1e-4,
                     cfg: SeriesConfig = DEFAULT_SERIES) -> list:
    """Series ``psi(x, s)`` against killed-path survival frequencies."""
    ss = sorted(ss)
    out = []
    for k, x in enumerate(xs):
        rng = stream_generator(seed, DOMAIN_ORACLE + k)
        counts = survival_counts(x, interval.a, interval.b, ss, n_paths, rng, dt)
        for s, c in zip(ss, counts):
            p = c / n_paths
            se = max(proportion_se(p, n_paths), 1.0 / n_paths)
            out.append(PsiCheck(x, s, psi(x, s, interval, cfg), p, se))
    return out


def exit_rate_epsilon_check(interval: Interval, ss, epsilon: float = 1e-3, cfg: SeriesConfig = DEFAULT_SERIES,
                            tol: float = 0.01) -> list:
    """``exit_rate(a, s)`` against ``psi(a + epsilon, s) / (2 epsilon)``."""
    out = []
    for s in ss:
        series = exit_rate(Side.A, s, interval, cfg)
        approx = psi(interval.a + epsilon, s, interval, cfg) / (2.0 * epsilon)
        rel = abs(approx - series) / series
        out.append({"s": s, "exit_rate": series, "epsilon_limit": approx, "relative_error": rel,
                    "pass": rel <= tol})
    return out


def ito_tail_check(grid=None) -> dict:
    grid = np.linspace(0.01, 10.0, 1000) if grid is None else np.asarray(grid)
    at = ito_tail(2.0 / math.pi)
    exact = abs(at - 1.0) <= 1e-15
    monotone = bool(np.all(np.diff([ito_tail(float(t)) for t in grid]) < 0))
    return {"value_at_2_over_pi": at, "exact": exact, "monotone": monotone, "pass": exact and monotone}


SAMPLER_STATS = ("endpoint", "lifetime", "sup")


def sampler_check(interval: Interval, x, s: float, n: int, seed: int, grid: GridSpec, cell: int = 0,
                  epsilon: float = 1e-3, alpha: float = 0.01, cfg: SeriesConfig = DEFAULT_SERIES,
                  qcfg: QConfig = DEFAULT_Q, workers: int = 1) -> dict:
    """Two-sample KS of ``q(x, s, .)`` draws against the epsilon-start oracle.

    The oracle runs on a uniform grid of step ``grid.coarse_dt`` so both
    samples carry the same grid bias in the supremum.
    """
    funcs = (Functional(FunctionalId.ENDPOINT_DISP), Functional(FunctionalId.SUP_DISP))
    ids = np.arange(n) + (cell << 32)
    draws = reference_draws(ids, np.full(n, x), np.full(n, s), interval, grid, seed, funcs, cfg, qcfg,
                            workers, domain=DOMAIN_ORACLE + (1 << 40))
    rng = stream_generator(seed, DOMAIN_ORACLE + (2 << 40) + cell)
    end, life, sup, trials = epsilon_excursions(x, interval.a, interval.b, s, n, rng, epsilon, grid.coarse_dt)
    if end.size < n:
        raise RuntimeError("epsilon oracle hit its trial cap")
    reports = {
        "endpoint": ks_two_sample(draws["endpoint_disp"], end, alpha),
        "lifetime": ks_two_sample(draws["lifetime"], life, alpha),
        "sup": ks_two_sample(draws["sup_disp"], sup, alpha),
    }
    return {"x": x, "s": s, "n": n, "oracle_trials": int(trials), "reports": reports,
            "pass": all(r.passed for r in reports.values())}


def limit_pair_check(interval: Interval, n: int, n_oracle: int, seed: int, cfg: SeriesConfig = DEFAULT_SERIES,
                     oracle_dt: float = 1e-4, alpha: float = 0.01) -> dict:
    """Fair boundary coin, inverse-CDF ages against ``F`` and against uniform-start exit times."""
    gens = [stream_generator(seed, DOMAIN_LIMIT + i) for i in range(n)]
    xs, ys = sample_limit_pairs_from(gens, interval, cfg)
    p_a = float(np.mean(xs == interval.a))
    ks_f = ks_distance(ys, lambda v: limit_cdf_vec(v, interval, cfg), alpha)
    exits = uniform_exit_times(interval.a, interval.b, n_oracle, stream_generator(seed, DOMAIN_ORACLE + (3 << 40)),
                               oracle_dt)
    ks_o = ks_two_sample(ys, exits, alpha)
    coin = 0.495 <= p_a <= 0.505
    return {"p_a": p_a, "coin_pass": coin, "ks_cdf": ks_f, "ks_oracle": ks_o,
            "pass": coin and ks_f.passed and ks_o.passed}
