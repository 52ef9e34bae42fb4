import math

import numpy as np
import pytest
from scipy import stats as sps

from excursionlab.stats import (BucketReport, compare_proportions, ecdf, ks_critical, ks_distance, ks_two_sample,
                                mean_se, quantile_edges, three_sigma_alpha, wilson_interval)


def test_ks_of_single_point():
    r = ks_distance([0.5], lambda x: x)
    assert r.statistic == 0.5


def test_ks_matches_scipy():
    x = np.random.default_rng(0).random(500)
    assert ks_distance(x, lambda v: v).statistic == pytest.approx(sps.kstest(x, "uniform").statistic)
    y = np.random.default_rng(1).random(300)
    assert ks_two_sample(x, y).statistic == pytest.approx(sps.ks_2samp(x, y).statistic)


def test_shifted_sample_fails_and_null_passes_at_nominal_rate():
    rng = np.random.default_rng(2)
    assert not ks_distance(rng.random(10000) + 0.05, lambda v: np.clip(v, 0, 1)).passed
    passes = sum(ks_distance(rng.random(1000), lambda v: v).passed for _ in range(1000))
    assert passes >= 980


def test_two_sample_threshold_uses_effective_size():
    r = ks_two_sample(np.arange(100.0), np.arange(300.0))
    assert r.n_effective == pytest.approx(75.0)
    assert r.threshold == pytest.approx(ks_critical(0.01) / math.sqrt(75.0))
    with pytest.raises(ValueError):
        ks_two_sample([], [1.0])
    assert ks_critical(0.2) == pytest.approx(sps.kstwobign.isf(0.2), rel=2e-2)


def test_wilson_interval():
    lo, hi = wilson_interval(50, 100, alpha=0.05)
    assert lo == pytest.approx(0.4038, abs=1e-3) and hi == pytest.approx(0.5962, abs=1e-3)
    assert wilson_interval(0, 10)[0] == 0.0
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_mean_se_and_ecdf():
    m, se = mean_se([1.0, 2.0, 3.0])
    assert m == 2.0 and se == pytest.approx(1 / math.sqrt(3))
    assert math.isinf(mean_se([1.0])[1])
    x, f = ecdf([3.0, 1.0])
    assert list(x) == [1.0, 3.0] and list(f) == [0.5, 1.0]


def test_bucket_report_semantics():
    ok = BucketReport(0.0, 0.0, 1.0, "f", 100, 1.0, 1.05, 0.02)
    assert ok.passed and ok.status == "PASS"
    bad = BucketReport(0.0, 0.0, 1.0, "f", 100, 1.0, 1.1, 0.02)
    assert not bad.passed and bad.status == "FAIL"
    assert BucketReport(0.0, 0.0, 1.0, "f", 100, 1.0, 1.1, 0.02, allowance=0.05).passed
    skip = BucketReport(0.0, 0.0, 1.0, "f", 3, 1.0, 1.0, 0.0, skipped=True)
    assert not skip.passed and skip.status == "SKIPPED"


def test_compare_proportions():
    assert compare_proportions(0, 100, 0, 1000).agree
    assert not compare_proportions(50, 100, 10, 100).agree
    assert compare_proportions(50, 100, 52, 100).agree


def test_quantile_edges_cover_the_sample():
    x = np.random.default_rng(3).random(1000)
    e = quantile_edges(x, 8)
    assert e.size == 9 and e[0] <= x.min() and e[-1] > x.max()
    counts = np.histogram(x, e)[0]
    assert counts.sum() == 1000 and counts.min() >= 120


def test_three_sigma_alpha():
    assert three_sigma_alpha() == pytest.approx(0.0026998, abs=1e-6)
