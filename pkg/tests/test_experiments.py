import math

import numpy as np
import pytest
from scipy.stats import norm

from excursionlab.core import Interval, Side
from excursionlab.engine import GridSpec
from excursionlab.experiments import (KERNEL_FUNCTIONALS, application_event, application_limit, p0_sample, rate_replicate,
                                      reference_draws, run_straddle_study, straddle_candidate)

UNIT = Interval(0.0, 1.0)
GRID = GridSpec()


def test_candidate_contract_and_determinism():
    seen = 0
    for i in range(200):
        obs = straddle_candidate(i, 5.0, 0.0, UNIT, GRID, 3)
        again = straddle_candidate(i, 5.0, 0.0, UNIT, GRID, 3)
        if obs is None:
            assert again is None
            continue
        seen += 1
        assert obs.sigma == again.sigma and obs.d == again.d
        assert obs.sigma <= obs.t < obs.d
        if not obs.never_exited:
            assert obs.x_sigma in (UNIT.a, UNIT.b)
            assert obs.functionals["lifetime"] == pytest.approx(obs.d - obs.sigma)
    assert seen > 0


def test_acceptance_rate_matches_gaussian_mass():
    # P(W_50 in (0, 1)) = Phi(1/sqrt(50)) - 1/2.
    study = run_straddle_study(50.0, 400, 0.0, UNIT, GRID, 4)
    p = norm.cdf(1 / math.sqrt(50)) - 0.5
    assert len(study.observations) == 400
    assert abs(study.acceptance_rate - p) < 0.1 * p
    assert study.never_exited == 0


def test_worker_count_does_not_change_results():
    one = run_straddle_study(2.0, 60, 0.0, UNIT, GRID, 5, workers=1, block=16)
    two = run_straddle_study(2.0, 60, 0.0, UNIT, GRID, 5, workers=2, block=16)
    assert np.array_equal(one.indices, two.indices)
    assert [o.sigma for o in one.observations] == [o.sigma for o in two.observations]
    assert np.array_equal(one.column("sup_disp"), two.column("sup_disp"))


def test_never_exited_paths_are_flagged():
    study = run_straddle_study(0.01, 50, 0.5, UNIT, GRID, 6)
    assert study.never_exited > 0
    assert all(o.never_exited == (o.x_sigma is None) for o in study.observations)


def test_reference_draws_are_keyed_by_index():
    idx = np.array([3, 10, 11])
    xs = np.array([0.0, 1.0, 0.0])
    ages = np.array([0.2, 0.3, 0.4])
    a = reference_draws(idx, xs, ages, UNIT, GRID, 1, KERNEL_FUNCTIONALS, workers=1)
    b = reference_draws(idx[::-1], xs[::-1], ages[::-1], UNIT, GRID, 1, KERNEL_FUNCTIONALS, workers=1)
    for k, v in a.items():
        assert np.array_equal(v, b[k][::-1])
    assert np.all(a["lifetime"] > ages)


def test_application_event_and_b_contribution():
    assert list(application_event([0.1, 0.1, 0.0, 0.3], [0.05, -0.05, 0.05, 0.05], 0.25, 0.1)) == \
        [True, False, False, False]
    limit = p0_sample(400, UNIT, GRID, 2, prefix_only=True)
    # Excursions from b move down, so the positive-displacement event never sees them.
    assert np.all(limit["endpoint_disp"][limit["x"] == UNIT.b] <= 0)
    study = run_straddle_study(5.0, 200, 0.0, UNIT, GRID, 7)
    pts = application_limit([0.5], [0.3], UNIT, study, limit)
    assert pts[0].b_contribution == 0
    with pytest.raises(ValueError):
        application_limit([0.5], [2.0], UNIT, study, limit)


def test_rate_replicate_contract():
    r = rate_replicate(0, 5.0, 0.05, UNIT, GRID, 0.01, 1e-6, 8)
    assert r.count >= r.count_double >= 0 and r.local_time >= 0
    b = rate_replicate(0, 5.0, 0.05, UNIT, GRID, 0.01, 1e-6, 8, side=Side.B)
    assert (b.count, b.local_time) != (r.count, r.local_time)
