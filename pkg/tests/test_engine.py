import math

import numpy as np
import pytest
from scipy import stats

from excursionlab.core import Interval, SampledPath, Side, stream_generator
from excursionlab.engine import (GridSpec, bridge_midpoint, detect_exit, first_exit, grid_times,
                                 hidden_cross_prob, refine_near, sample_bessel3_bridge, sample_brownian_bridge,
                                 sample_meander, simulate_path, single_barrier_cross_prob)

UNIT = Interval(0.0, 1.0)


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(coarse_dt=1e-3, fine_dt=1e-2)
    with pytest.raises(ValueError):
        GridSpec(coarse_dt=0.0)
    g = GridSpec.for_interval(Interval(0.0, 2.0))
    assert g.coarse_dt == pytest.approx(4e-3) and g.fine_dt == pytest.approx(4e-6)


def test_grid_times_end_exactly():
    t = grid_times(0.0105, 1e-3)
    assert t[0] == 0.0 and t[-1] == 0.0105 and np.all(np.diff(t) > 0)


def test_single_barrier_probability():
    assert single_barrier_cross_prob(0.5, 0.5, 0.0, 0.5) == pytest.approx(math.exp(-1.0))
    assert single_barrier_cross_prob(0.5, -0.1, 0.0, 0.5) == 1.0
    assert single_barrier_cross_prob(0.0, 0.3, 0.0, 0.5) == 1.0
    p = hidden_cross_prob(np.array([0.5]), np.array([0.5]), np.array([1e-3]), UNIT)
    assert p[0] < 1e-100


def test_bridge_midpoint_moments():
    rng = np.random.default_rng(2)
    xs = np.array([bridge_midpoint((0.0, 0.0), (1.0, 2.0), rng)[1] for _ in range(20000)])
    assert abs(xs.mean() - 1.0) < 3 * 0.5 / math.sqrt(20000)
    assert abs(xs.var() - 0.25) < 0.01
    with pytest.raises(ValueError):
        bridge_midpoint((1.0, 0.0), (1.0, 0.0), rng)


def test_simulate_path_increments_are_standard():
    p = simulate_path(0.0, 10.0, GridSpec(), np.random.default_rng(3))
    inc = np.diff(p.values) / np.sqrt(np.diff(p.times))
    assert stats.kstest(inc, "norm").pvalue > 0.001
    with pytest.raises(ValueError):
        simulate_path(0.0, -1.0, GridSpec(), np.random.default_rng(3))


def test_first_exit_on_hand_path_lands_in_crossing_step():
    times = np.array([0.0, 1.0, 2.0, 3.0])
    values = np.array([0.5, 0.5, 1.5, 1.5])
    grid = GridSpec(coarse_dt=1.0, fine_dt=1e-6)
    scan = first_exit(times, values, UNIT, grid, np.random.default_rng(0))
    assert scan.side in (Side.A, Side.B)
    assert 0.0 < scan.time <= 2.0
    assert scan.values[-1] == UNIT.boundary(scan.side)
    assert np.all(UNIT.contains(scan.values[:-1]))


def test_first_exit_start_outside_exits_immediately():
    scan = first_exit(np.array([0.0, 1.0]), np.array([0.0, 0.5]), UNIT, GridSpec(), np.random.default_rng(0))
    assert scan.time == 0.0 and scan.side is Side.A


def test_first_exit_without_exit_returns_none():
    times = grid_times(0.01, 1e-3)
    scan = first_exit(times, np.full(times.size, 0.5), UNIT, GridSpec(), np.random.default_rng(0))
    assert scan.time is None and scan.times.size == times.size


def test_exit_time_from_centre_has_mean_one():
    # E[exit time of (-1, 1) from 0] = (x - a)(b - x) = 1.
    iv = Interval(-1.0, 1.0)
    grid = GridSpec()
    n = 3000
    tau = np.empty(n)
    sides = []
    for i in range(n):
        scan = first_exit(np.array([0.0]), np.array([0.0]), iv, grid, stream_generator(11, i), extend=True)
        tau[i] = scan.time
        sides.append(scan.side)
    se = tau.std(ddof=1) / math.sqrt(n)
    assert abs(tau.mean() - 1.0) < 3 * se
    frac_a = sides.count(Side.A) / n
    assert abs(frac_a - 0.5) < 3 * math.sqrt(0.25 / n)


def test_exit_time_distribution_matches_series():
    # P(tau > s) from x = 0.5 on (0, 1) equals psi(0.5, s).
    from excursionlab.analytic import psi
    grid = GridSpec()
    n = 4000
    tau = np.array([first_exit(np.array([0.0]), np.array([0.5]), UNIT, grid, stream_generator(12, i),
                               extend=True).time for i in range(n)])
    for s in (0.05, 0.1, 0.3):
        p = psi(0.5, s, UNIT)
        assert abs(np.mean(tau > s) - p) < 3 * math.sqrt(p * (1 - p) / n) + 1e-3


def test_detect_exit_from_interior_time():
    p = SampledPath([0.0, 1.0, 2.0], [0.5, 0.6, 2.0])
    ev = detect_exit(p, UNIT, 1.0, GridSpec(coarse_dt=1.0, fine_dt=1e-6), np.random.default_rng(1))
    assert ev is not None and 1.0 < ev.time <= 2.0
    with pytest.raises(ValueError):
        detect_exit(p, UNIT, 2.0, GridSpec(coarse_dt=1.0, fine_dt=1e-6), np.random.default_rng(1))


def test_bridge_pins_both_ends():
    b = sample_brownian_bridge(0.2, 0.7, 0.5, GridSpec(), np.random.default_rng(0))
    assert b.values[0] == pytest.approx(0.2) and b.values[-1] == pytest.approx(0.7)
    assert b.horizon == 0.5


def test_bessel_bridge_is_positive_and_pinned():
    b = sample_bessel3_bridge(0.8, 1.0, GridSpec(), np.random.default_rng(0))
    assert b.values[0] == 0.0 and b.values[-1] == 0.8
    assert np.all(b.values[1:] > 0)


def test_meander_endpoint_is_rayleigh():
    rng = np.random.default_rng(5)
    ends = np.array([sample_meander(1.0, GridSpec(coarse_dt=0.05), rng).values[-1] for _ in range(4000)])
    assert stats.kstest(ends, stats.rayleigh.cdf).pvalue > 0.001
    assert np.all(ends > 0)


def test_refine_near_only_touches_steps_near_band():
    p = SampledPath([0.0, 1.0, 2.0, 3.0], [5.0, 5.0, 0.05, 0.1])
    q = refine_near(p, 0.0, 0.1, 0.01, np.random.default_rng(0), margin_sd=1.0)
    assert np.all(np.isin(p.times, q.times))
    assert np.max(np.diff(q.times[q.times >= 1.0])) <= 0.01 + 1e-12
    assert np.sum(q.times < 1.0) == 1
