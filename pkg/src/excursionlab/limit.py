"""Samplers for the conditional excursion kernel and the limit law.

An excursion from ``a`` conditioned on lifetime greater than ``s`` is built in
height coordinates ``m = zeta - a`` (mirrored for ``b``):

1. on ``[0, s1]``, ``s1 = min(s, switch * L**2)``, a Brownian meander
   (Rayleigh endpoint plus Bessel(3) bridge) rejected unless it stays below
   ``L = b - a``; for ``s > s1`` it is additionally accepted with probability
   ``psi(m(s1), s - s1) / psi(L/2, s - s1)``;
2. on ``[s1, s]``, Brownian motion conditioned to stay in ``(0, L)`` through
   ``s``, drawn in chunks of length ``h`` by rejection with the same
   ``psi`` weight;
3. after ``s``, free Brownian motion until it leaves ``(0, L)``.

Each rejection step targets the exact conditional law, so the only
approximation is the time grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import DEFAULT_SERIES, SeriesConfig, limit_cdf_inverse, psi
from .core import Excursion, Interval, LimitSample, SampledPath, Side
from .engine import GridSpec, first_exit, grid_times, hidden_cross_prob, sample_bessel3_bridge


@dataclass(frozen=True)
class QConfig:
    switch: float = 0.5   # end of the meander phase, in units of (b - a)**2
    chunk: float = 0.1    # h-transform chunk length, in units of (b - a)**2
    max_iter: int = 1_000_000


DEFAULT_Q = QConfig()


def _boundary_side(x, interval: Interval) -> Side:
    if isinstance(x, Side):
        return x
    if x == interval.a:
        return Side.A
    if x == interval.b:
        return Side.B
    raise ValueError(f"q(x, s, .) is defined only for x in {{a, b}}, got {x}")


def _bessel_hits_level(m, steps, level, rng) -> bool:
    """Hidden touch of ``level`` by a Bessel(3) bridge between grid points.

    Uses the Brownian-bridge crossing probability divided by the probability
    that the bridge avoids 0, which is the Bessel(3) h-transform of the
    killed bridge when the joint event of touching both is negligible.
    """
    m0, m1 = m[:-1], m[1:]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        p_level = np.exp(-2.0 * (level - m0) * (level - m1) / steps)
        avoid0 = -np.expm1(-2.0 * m0 * m1 / steps)
        p = np.where(p_level > 1e-300, p_level / np.where(avoid0 > 0, avoid0, np.inf), 0.0)
    return bool(np.any(rng.random(p.size) < p))


def _meander_phase(s1, s_total, L, grid, rng, cfg, qcfg):
    times = grid_times(s1, grid.coarse_dt)
    steps = np.diff(times)
    rest = s_total - s1
    unit = Interval(0.0, L)
    top = psi(0.5 * L, rest, unit, cfg) if rest > 0 else 1.0
    for _ in range(qcfg.max_iter):
        r = math.sqrt(s1) * math.sqrt(-2.0 * math.log1p(-rng.random()))
        if r >= L:
            continue
        m = sample_bessel3_bridge(r, s1, grid, rng, times=times).values
        if m.max() >= L or _bessel_hits_level(m, steps, L, rng):
            continue
        if rest > 0 and rng.random() * top >= psi(float(m[-1]), rest, unit, cfg):
            continue
        return times, m
    raise RuntimeError(f"meander rejection exceeded {qcfg.max_iter} iterations (s={s1}, L={L})")


def _conditioned_phase(t0, y, rest, L, grid, rng, cfg, qcfg):
    unit = Interval(0.0, L)
    out_t, out_m = [], []
    h0 = qcfg.chunk * L * L
    while rest > 1e-15:
        h = min(rest, h0)
        if rest - h < 1e-12 * L * L:
            h = rest
        times = grid_times(h, grid.coarse_dt)
        steps = np.diff(times)
        after = rest - h
        top = psi(0.5 * L, after, unit, cfg) if after > 0 else 1.0
        for _ in range(qcfg.max_iter):
            m = y + np.concatenate(([0.0], np.cumsum(rng.standard_normal(steps.size) * np.sqrt(steps))))
            if m.min() <= 0.0 or m.max() >= L:
                continue
            p = hidden_cross_prob(m[:-1], m[1:], steps, unit)
            if np.any(rng.random(p.size) < p):
                continue
            if after > 0 and rng.random() * top >= psi(float(m[-1]), after, unit, cfg):
                continue
            break
        else:
            raise RuntimeError("conditioned-phase rejection exceeded its iteration cap")
        out_t.append(t0 + times[1:])
        out_m.append(m[1:])
        t0 += h
        y = float(m[-1])
        rest = after
    return out_t, out_m, t0, y


def _prefix(side: Side, s: float, L: float, grid, rng, cfg, qcfg):
    s1 = min(s, qcfg.switch * L * L)
    times, m = _meander_phase(s1, s, L, grid, rng, cfg, qcfg)
    pieces_t, pieces_m = [times], [m]
    if s > s1:
        more_t, more_m, _, _ = _conditioned_phase(s1, float(m[-1]), s - s1, L, grid, rng, cfg, qcfg)
        pieces_t += more_t
        pieces_m += more_m
        pieces_t[-1][-1] = s
    return pieces_t, pieces_m


def _to_interval(height, side: Side, interval: Interval):
    return interval.a + height if side is Side.A else interval.b - height


def sample_q_prefix(x, s: float, interval: Interval, grid: GridSpec, rng: np.random.Generator,
                    cfg: SeriesConfig = DEFAULT_SERIES, qcfg: QConfig = DEFAULT_Q):
    """The ``q(x, s, .)`` excursion on ``[0, s]`` only; returns ``(clock, values)``."""
    if not s > 0:
        raise ValueError("s must be positive")
    side = _boundary_side(x, interval)
    pieces_t, pieces_m = _prefix(side, s, interval.length(), grid, rng, cfg, qcfg)
    return np.concatenate(pieces_t), _to_interval(np.concatenate(pieces_m), side, interval)


def sample_q_arrays(x, s: float, interval: Interval, grid: GridSpec, rng: np.random.Generator,
                    cfg: SeriesConfig = DEFAULT_SERIES, qcfg: QConfig = DEFAULT_Q):
    """Draw from ``q(x, s, .)``; returns ``(clock, values, lifetime, exit_side)``."""
    if not s > 0:
        raise ValueError("s must be positive")
    side = _boundary_side(x, interval)
    L = interval.length()
    pieces_t, pieces_m = _prefix(side, s, L, grid, rng, cfg, qcfg)
    scan = first_exit(np.array([s]), pieces_m[-1][-1:], Interval(0.0, L), grid, rng, extend=True)
    pieces_t.append(scan.times[1:])
    pieces_m.append(scan.values[1:])
    clock = np.concatenate(pieces_t)
    values = _to_interval(np.concatenate(pieces_m), side, interval)
    far = scan.side is Side.B
    exit_side = side if not far else (Side.B if side is Side.A else Side.A)
    values[-1] = interval.boundary(exit_side)
    return clock, values, float(scan.time), exit_side


def sample_q(x, s: float, interval: Interval, grid: GridSpec, rng: np.random.Generator,
             cfg: SeriesConfig = DEFAULT_SERIES, qcfg: QConfig = DEFAULT_Q) -> Excursion:
    clock, values, lifetime, exit_side = sample_q_arrays(x, s, interval, grid, rng, cfg, qcfg)
    start = interval.boundary(_boundary_side(x, interval))
    return Excursion(start, SampledPath(clock, values), lifetime, exit_side, interval)


def sample_limit_pair(interval: Interval, cfg: SeriesConfig, rng: np.random.Generator):
    """``(X, Y)`` with ``X`` uniform on ``{a, b}`` and ``Y ~ F`` independent."""
    x = interval.a if rng.random() < 0.5 else interval.b
    return x, float(limit_cdf_inverse(rng.random(), interval, cfg))


def sample_limit_pairs(n: int, interval: Interval, cfg: SeriesConfig, rng: np.random.Generator):
    x = np.where(rng.random(n) < 0.5, interval.a, interval.b)
    return x, limit_cdf_inverse(rng.random(n), interval, cfg)


def sample_limit_pairs_from(generators, interval: Interval, cfg: SeriesConfig = DEFAULT_SERIES):
    """One pair per generator, consuming draws in the order of :func:`sample_limit_pair`.

    The inverse CDF is evaluated once for the whole batch.
    """
    xs = np.empty(len(generators))
    us = np.empty(len(generators))
    for k, g in enumerate(generators):
        xs[k] = interval.a if g.random() < 0.5 else interval.b
        us[k] = g.random()
    return xs, np.atleast_1d(limit_cdf_inverse(us, interval, cfg))


def sample_p0(interval: Interval, cfg: SeriesConfig, grid: GridSpec, rng: np.random.Generator,
              qcfg: QConfig = DEFAULT_Q) -> LimitSample:
    x, y = sample_limit_pair(interval, cfg, rng)
    return LimitSample(x, y, sample_q(x, y, interval, grid, rng, cfg, qcfg))
