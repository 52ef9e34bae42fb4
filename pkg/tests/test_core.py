import numpy as np
import pytest

from excursionlab.core import (DOMAIN_LIMIT, DOMAIN_REFERENCE, Excursion, Interval, SampledPath, Side,
                               derive_stream, stream_generator)


def test_interval_rejects_reversed_and_nonfinite():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)
    with pytest.raises(ValueError):
        Interval(0.0, 0.0)
    with pytest.raises(ValueError):
        Interval(0.0, np.inf)


def test_interval_membership_is_strict_and_vectorised():
    iv = Interval(0.0, 1.0)
    assert list(iv.contains(np.array([0.0, 0.5, 1.0, -1.0]))) == [False, True, False, False]
    assert iv.length() == 1.0 and iv.midpoint == 0.5


def test_snap_prefers_nearer_boundary_and_breaks_ties_towards_a():
    iv = Interval(0.0, 1.0)
    assert iv.snap(0.2) is Side.A
    assert iv.snap(0.9) is Side.B
    assert iv.snap(0.5) is Side.A
    assert iv.boundary(Side.B) == 1.0
    assert iv.mirror(0.25) == 0.75


def test_streams_are_pure_functions_of_their_key():
    a = stream_generator(7, 3).standard_normal(5)
    b = stream_generator(7, 3).standard_normal(5)
    c = stream_generator(7, 4).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert derive_stream(-1, DOMAIN_LIMIT).key()[0] == (1 << 64) - 1
    assert DOMAIN_REFERENCE != DOMAIN_LIMIT


def test_sampled_path_validation():
    with pytest.raises(ValueError):
        SampledPath([0.1, 0.2], [0.0, 0.0])
    with pytest.raises(ValueError):
        SampledPath([0.0, 0.2, 0.2], [0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        SampledPath([0.0, 1.0], [0.0])
    p = SampledPath([0.0, 1.0], [0.0, 2.0])
    with pytest.raises(ValueError):
        p.values[0] = 5.0


def test_refine_keeps_stored_points_and_inserts_bridge_values():
    p = SampledPath([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    q = p.refine([0.5, 1.0, 1.5], np.random.default_rng(0))
    assert list(q.times) == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert q.values[0] == 0.0 and q.values[2] == 1.0 and q.values[4] == 0.0
    with pytest.raises(ValueError):
        p.refine([3.0], np.random.default_rng(0))


def test_refine_bridge_moments():
    p = SampledPath([0.0, 1.0], [0.0, 1.0])
    rng = np.random.default_rng(1)
    mids = np.array([p.refine([0.25], rng).values[1] for _ in range(20000)])
    # Bridge at 1/4: mean 1/4, variance 3/16.
    assert abs(mids.mean() - 0.25) < 3 * np.sqrt(3 / 16 / 20000)
    assert abs(mids.var() - 3 / 16) < 0.01


def test_reversed_and_shifted():
    p = SampledPath([0.0, 1.0, 3.0], [0.0, 2.0, 5.0])
    r = p.reversed()
    assert list(r.times) == [0.0, 2.0, 3.0] and list(r.values) == [5.0, 2.0, 0.0]
    s = p.shifted(1.0)
    assert list(s.times) == [0.0, 2.0] and list(s.values) == [2.0, 5.0]
    with pytest.raises(ValueError):
        p.reversed(2.0)


def test_excursion_contract():
    iv = Interval(0.0, 1.0)
    path = SampledPath([0.0, 0.5, 1.0], [0.0, 0.4, 1.0])
    e = Excursion(0.0, path, 1.0, Side.B, iv)
    assert e.end_value == 1.0
    assert e.value_at(2.0) == 1.0
    assert e.value_at(0.5) == pytest.approx(0.4)
    with pytest.raises(ValueError):
        Excursion(0.5, path, 1.0, Side.B, iv)
    with pytest.raises(ValueError):
        Excursion(0.0, path, 0.0, Side.B, iv)
