"""Pathwise extraction of the excursion straddling a fixed time.

``sigma_t`` is found by running the forward exit scan on the time-reversed
path, ``d_t`` by the forward scan from ``t`` (extending the path as free
Brownian motion when needed).  Both directions use the same bridge-corrected
crossing machinery from :mod:`excursionlab.engine`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Excursion, Interval, SampledPath, Side, StraddleObservation
from .engine import GridSpec, first_exit
from .functionals import DEFAULT_FUNCTIONALS, evaluate_all


@dataclass(frozen=True)
class ExcursionInterval:
    alpha: float
    beta: float
    side: Side

    def __post_init__(self):
        if not self.alpha < self.beta:
            raise ValueError("alpha must precede beta")

    @property
    def lifetime(self) -> float:
        return self.beta - self.alpha


def _ensure_time(path: SampledPath, t: float, rng) -> tuple[SampledPath, int]:
    j = int(np.searchsorted(path.times, t))
    if j >= len(path) or path.times[j] != t:
        path = path.refine([t], rng)
        j = int(np.searchsorted(path.times, t))
    return path, j


def _check_inside(path: SampledPath, j: int, interval: Interval):
    if not interval.a < path.values[j] < interval.b:
        raise ValueError(f"W_t = {path.values[j]} is not inside ({interval.a}, {interval.b})")


def _backward_scan(path, j, interval, grid, rng, stop_index=0):
    t = path.times[j]
    seg_t = t - path.times[stop_index:j + 1][::-1]
    seg_x = path.values[stop_index:j + 1][::-1]
    return first_exit(seg_t, seg_x, interval, grid, rng)


def locate_sigma(path: SampledPath, t: float, interval: Interval, grid: GridSpec, rng):
    """Last time at or before ``t`` the path is outside ``(a, b)``.

    Returns ``(sigma, x_sigma, never_exited)``; a path that started inside and
    never left gives ``(0.0, None, True)``.
    """
    path, j = _ensure_time(path, t, rng)
    _check_inside(path, j, interval)
    scan = _backward_scan(path, j, interval, grid, rng)
    if scan.time is None:
        return 0.0, None, True
    return float(t - scan.time), interval.boundary(scan.side), False


def locate_d(path: SampledPath, t: float, interval: Interval, grid: GridSpec, rng) -> float:
    """First exit of ``(a, b)`` strictly after ``t``."""
    path, j = _ensure_time(path, t, rng)
    _check_inside(path, j, interval)
    scan = first_exit(path.times[j:], path.values[j:], interval, grid, rng, extend=True)
    return float(scan.time)


def straddle_arrays(path: SampledPath, t: float, interval: Interval, grid: GridSpec, rng):
    """Raw pieces of the straddling excursion.

    Returns ``(sigma, d, x_sigma, clock, values)`` or ``None`` when the path
    never left the interval before ``t``.
    """
    path, j = _ensure_time(path, t, rng)
    _check_inside(path, j, interval)
    back = _backward_scan(path, j, interval, grid, rng)
    fwd = first_exit(path.times[j:], path.values[j:], interval, grid, rng, extend=True)
    if back.time is None:
        return None
    sigma = t - back.time
    clock = np.concatenate((back.time - back.times[::-1], fwd.times[1:] - sigma))
    values = np.concatenate((back.values[::-1], fwd.values[1:]))
    return sigma, fwd.time, interval.boundary(back.side), clock, values, fwd.side


def extract_zeta(path: SampledPath, t: float, interval: Interval, grid: GridSpec, rng,
                 functionals=DEFAULT_FUNCTIONALS, keep_excursion: bool = True) -> StraddleObservation:
    """Straddling excursion at ``t`` with its functionals evaluated at age ``t - sigma``."""
    parts = straddle_arrays(path, t, interval, grid, rng)
    if parts is None:
        d = locate_d(path, t, interval, grid, rng)
        return StraddleObservation(t, 0.0, d, None, None, True, {})
    return observation_from_arrays(t, parts, interval, functionals, keep_excursion)


def observation_from_arrays(t, parts, interval, functionals, keep_excursion):
    sigma, d, x_sigma, clock, values, exit_side = parts
    lifetime = d - sigma
    feats = {"lifetime": lifetime}
    feats.update(evaluate_all(functionals, clock, values, lifetime, interval, t - sigma))
    zeta = None
    if keep_excursion:
        zeta = Excursion(x_sigma, SampledPath(clock, values), lifetime, exit_side, interval)
    return StraddleObservation(t, sigma, d, x_sigma, zeta, False, feats)


def enumerate_excursions(path: SampledPath, interval: Interval, grid: GridSpec, rng,
                         extend_last: bool = True) -> list[ExcursionInterval]:
    """Maximal excursion intervals into ``(a, b)`` that start on the boundary.

    Each excursion is found from a stored point inside the interval: its left
    end is the last exit before that point, its right end the first exit
    after it.  Excursions without a stored interior point are too short to
    be resolved and are absorbed into the boundary set.  A segment starting
    inside the interval at time 0 is not an excursion from the boundary and
    is skipped.
    """
    times, values = path.times, path.values
    inside_idx = np.flatnonzero(interval.contains(values))
    out: list[ExcursionInterval] = []
    barrier_t, barrier_x = None, None  # exit point of the previous excursion
    pos = 0
    while True:
        k = int(np.searchsorted(inside_idx, pos))
        if k >= inside_idx.size:
            break
        j = int(inside_idx[k])
        if barrier_t is None:
            bt, bx = times[:j + 1], values[:j + 1]
        else:
            m = int(np.searchsorted(times, barrier_t, side="right"))
            bt = np.concatenate(([barrier_t], times[m:j + 1]))
            bx = np.concatenate(([barrier_x], values[m:j + 1]))
        back = first_exit(times[j] - bt[::-1], bx[::-1], interval, grid, rng)
        horizon = math.inf if extend_last else path.horizon
        fwd = first_exit(times[j:], values[j:], interval, grid, rng, extend=True, horizon=horizon)
        if fwd.time is None:
            break
        if back.time is not None:
            out.append(ExcursionInterval(float(times[j] - back.time), fwd.time, back.side))
        barrier_t, barrier_x = fwd.time, interval.boundary(fwd.side)
        pos = int(np.searchsorted(times, fwd.time, side="right"))
    return out


def count_downcrossings(values, level: float, epsilon: float) -> int:
    """Downcrossings of ``[level, level + epsilon]`` along a sequence of values."""
    v = np.asarray(values, dtype=float)
    marks = np.where(v >= level + epsilon, 1, np.where(v <= level, -1, 0))
    marks = marks[marks != 0]
    if marks.size < 2:
        return 0
    return int(np.count_nonzero((marks[:-1] == 1) & (marks[1:] == -1)))


# -zeta(1/2) / sqrt(2 pi): mean overshoot of a discretely sampled Brownian
# path over a level, in units of the step standard deviation.
OVERSHOOT = 0.5825971579390106


def downcrossing_local_time(path: SampledPath, level: float, epsilon: float, horizon: float,
                            step_sd: float = 0.0) -> float:
    """``2 * epsilon * (number of downcrossings of [level, level + epsilon])`` up to ``horizon``.

    With ``step_sd`` > 0 the band width is replaced by
    ``epsilon + 2 * OVERSHOOT * step_sd``, correcting for crossings missed
    between samples taken with that step standard deviation.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    n = int(np.searchsorted(path.times, horizon, side="right"))
    width = epsilon + 2.0 * OVERSHOOT * step_sd
    return 2.0 * width * count_downcrossings(path.values[:n], level, epsilon)


def occupation_local_time(path: SampledPath, level: float, epsilon: float, horizon: float) -> float:
    """``(1/epsilon) * Leb{s <= horizon : W_s in [level, level + epsilon]}`` (left-point rule).

    Only meaningful on a path whose steps near the band are much shorter
    than ``epsilon**2``.
    """
    n = int(np.searchsorted(path.times, horizon, side="right"))
    t, v = path.times[:n], path.values[:n]
    dt = np.diff(t)
    inband = (v[:-1] >= level) & (v[:-1] <= level + epsilon)
    return float(np.sum(dt[inband]) / epsilon)
