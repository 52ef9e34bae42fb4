"""Empirical CDFs, Kolmogorov-Smirnov distances and confidence intervals."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtri

# Asymptotic Kolmogorov critical values c(alpha).
KS_CRITICAL = {0.10: 1.224, 0.05: 1.358, 0.01: 1.628, 0.001: 1.949}


def ks_critical(alpha: float) -> float:
    if alpha in KS_CRITICAL:
        return KS_CRITICAL[alpha]
    return math.sqrt(-0.5 * math.log(alpha / 2.0))


@dataclass(frozen=True)
class KsReport:
    statistic: float
    n_effective: float
    threshold: float
    passed: bool

    def as_dict(self) -> dict:
        return {"statistic": self.statistic, "n_effective": self.n_effective,
                "threshold": self.threshold, "pass": self.passed}


@dataclass(frozen=True)
class BucketReport:
    x_sigma: float
    s_low: float
    s_high: float
    functional: str
    n_obs: int
    empirical_mean: float
    reference_mean: float
    combined_se: float
    allowance: float = 0.0
    skipped: bool = False

    @property
    def passed(self) -> bool:
        if self.skipped:
            return False
        return abs(self.empirical_mean - self.reference_mean) <= 3.0 * self.combined_se + self.allowance

    @property
    def status(self) -> str:
        return "SKIPPED" if self.skipped else ("PASS" if self.passed else "FAIL")

    def as_dict(self) -> dict:
        return {"x_sigma": self.x_sigma, "s_low": self.s_low, "s_high": self.s_high,
                "functional": self.functional, "n_obs": self.n_obs,
                "empirical_mean": self.empirical_mean, "reference_mean": self.reference_mean,
                "combined_se": self.combined_se, "allowance": self.allowance, "status": self.status}


def ecdf(sample):
    """Sorted sample and the right-continuous ECDF values at those points."""
    x = np.sort(np.asarray(sample, dtype=float))
    return x, np.arange(1, x.size + 1) / x.size


def ks_distance(sample, cdf: Callable, alpha: float = 0.01) -> KsReport:
    """Sup distance between the empirical CDF of ``sample`` and ``cdf``."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("ks_distance needs a nonempty sample")
    f = np.asarray(cdf(x), dtype=float)
    d_plus = np.max(np.arange(1, n + 1) / n - f)
    d_minus = np.max(f - np.arange(0, n) / n)
    d = float(max(d_plus, d_minus))
    thr = ks_critical(alpha) / math.sqrt(n)
    return KsReport(d, n, thr, d <= thr)


def ks_two_sample(x, y, alpha: float = 0.01) -> KsReport:
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    if x.size == 0 or y.size == 0:
        raise ValueError("ks_two_sample needs nonempty samples")
    grid = np.concatenate((x, y))
    fx = np.searchsorted(x, grid, side="right") / x.size
    fy = np.searchsorted(y, grid, side="right") / y.size
    d = float(np.max(np.abs(fx - fy)))
    n_eff = x.size * y.size / (x.size + y.size)
    thr = ks_critical(alpha) / math.sqrt(n_eff)
    return KsReport(d, n_eff, thr, d <= thr)


def wilson_interval(successes: int, n: int, alpha: float = 0.01) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    z = float(ndtri(1 - alpha / 2))
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    if v.size == 1:
        return float(v[0]), math.inf
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def proportion_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n else math.inf


@dataclass(frozen=True)
class ProportionComparison:
    p1: float
    n1: int
    p2: float
    n2: int
    ci1: tuple
    ci2: tuple
    combined_se: float
    agree: bool

    def as_dict(self) -> dict:
        return {"p_direct": self.p1, "n_direct": self.n1, "ci_direct": list(self.ci1),
                "p_limit": self.p2, "n_limit": self.n2, "ci_limit": list(self.ci2),
                "combined_se": self.combined_se, "pass": self.agree}


def compare_proportions(k1: int, n1: int, k2: int, n2: int, alpha: float = 0.01,
                        n_se: float = 3.0) -> ProportionComparison:
    p1, p2 = k1 / n1, k2 / n2
    se = math.sqrt(proportion_se(p1, n1) ** 2 + proportion_se(p2, n2) ** 2)
    # Both estimates exactly 0 (or 1) agree regardless of the vanishing SE.
    agree = abs(p1 - p2) <= n_se * se if se > 0 else p1 == p2
    return ProportionComparison(p1, n1, p2, n2, wilson_interval(k1, n1, alpha),
                                wilson_interval(k2, n2, alpha), se, agree)


def family_expected_failures(n_tests: int, alpha: float) -> float:
    return n_tests * alpha


def three_sigma_alpha() -> float:
    """Two-sided size of a 3-SE normal test."""
    return float(math.erfc(3.0 / math.sqrt(2.0)))


def quantile_edges(x, n_buckets: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    edges = np.quantile(x, np.linspace(0, 1, n_buckets + 1))
    edges[0] = min(edges[0], float(x.min()))
    edges[-1] = np.nextafter(max(edges[-1], float(x.max())), np.inf)
    return edges


def optional_float(v) -> Optional[float]:
    return None if v is None else float(v)
