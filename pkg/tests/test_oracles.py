import math

import numpy as np

from excursionlab.analytic import limit_cdf_vec, psi
from excursionlab.core import Interval
from excursionlab.oracles import epsilon_excursions, survival_counts, uniform_exit_times
from excursionlab.stats import ks_distance

UNIT = Interval(0.0, 1.0)


def test_survival_counts_match_series():
    n = 20000
    counts = survival_counts(0.3, 0.0, 1.0, [0.05, 0.2], n, np.random.default_rng(0), 1e-3)
    for c, s in zip(counts, (0.05, 0.2)):
        p = psi(0.3, s, UNIT)
        assert abs(c / n - p) < 3 * math.sqrt(p * (1 - p) / n)


def test_uniform_start_exit_time_mean_and_law():
    n = 20000
    # Exit times sit on the grid, so the step must be small where F ~ sqrt(s).
    tau = uniform_exit_times(0.0, 1.0, n, np.random.default_rng(1), 1e-4)
    assert abs(tau.mean() - 1 / 6) < 3 * tau.std() / math.sqrt(n)
    assert ks_distance(tau, lambda v: limit_cdf_vec(v, UNIT)).passed


def test_epsilon_oracle_contract():
    end, life, sup, trials = epsilon_excursions(0.0, 0.0, 1.0, 0.2, 200, np.random.default_rng(2), 1e-2, 1e-3)
    assert end.size == 200 and trials >= 200
    assert np.all(life > 0.2) and np.all(sup <= 1.0) and np.all(np.abs(end) <= sup + 1e-12)
    end_b, *_ = epsilon_excursions(1.0, 0.0, 1.0, 0.2, 50, np.random.default_rng(2), 1e-2, 1e-3)
    assert np.all(end_b <= 0)
