"""Brownian path generation, bridge refinement and exit detection.

Paths are exact in distribution at the times where they are sampled.  Exit
detection scans coarse steps, flags hidden crossings inside a step with the
single-barrier bridge probabilities ``p_a + p_b`` and resolves flagged or
straddling steps by recursive bridge bisection down to ``fine_dt``.

A hidden-crossing flag is resolved on the bridge whose right endpoint has
been reflected across the flagged barrier.  By the reflection principle the
pre-crossing part of that bridge has the law of the original bridge
conditioned to touch the barrier, so a flag always resolves to a crossing
and the flag probability is the crossing probability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import Interval, SampledPath, Side


@dataclass(frozen=True)
class GridSpec:
    coarse_dt: float = 1e-3
    fine_dt: float = 1e-6
    block: int = 256

    def __post_init__(self):
        if not (self.coarse_dt > 0 and self.fine_dt > 0):
            raise ValueError("grid steps must be positive")
        if self.fine_dt > self.coarse_dt:
            raise ValueError(f"fine_dt={self.fine_dt} exceeds coarse_dt={self.coarse_dt}")
        if self.block < 1:
            raise ValueError("block must be >= 1")

    @classmethod
    def for_interval(cls, interval: Interval, coarse: float = 1e-3, fine: float = 1e-6, block: int = 256):
        """Steps expressed in units of ``(b - a)**2``."""
        scale = interval.length() ** 2
        return cls(coarse * scale, fine * scale, block)


class ExitEvent(NamedTuple):
    time: float
    side: Side


@dataclass
class ExitScan:
    """Result of a forward scan: visited points up to and including the exit.

    ``times``/``values`` hold every sampled point before the exit (all inside
    the interval) followed by the exit point snapped to its boundary.  When
    ``time`` is None no exit happened and the arrays hold every visited point.
    """

    time: Optional[float]
    side: Optional[Side]
    times: np.ndarray
    values: np.ndarray


def grid_times(length: float, dt: float) -> np.ndarray:
    """``0, dt, 2 dt, ...`` ending exactly at ``length``."""
    n = max(1, int(math.ceil(length / dt - 1e-9)))
    t = dt * np.arange(n + 1, dtype=float)
    t[-1] = length
    return t


def simulate_path(origin: float, horizon: float, grid: GridSpec, rng: np.random.Generator) -> SampledPath:
    if not (math.isfinite(origin) and math.isfinite(horizon)):
        raise ValueError("origin and horizon must be finite")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    t = grid_times(horizon, grid.coarse_dt)
    inc = rng.standard_normal(t.size - 1) * np.sqrt(np.diff(t))
    return SampledPath(t, origin + np.concatenate(([0.0], np.cumsum(inc))))


def bridge_midpoint(p1, p2, rng: np.random.Generator):
    (t1, x1), (t2, x2) = p1, p2
    if not t1 < t2:
        raise ValueError("bridge_midpoint needs time1 < time2")
    return 0.5 * (t1 + t2), 0.5 * (x1 + x2) + 0.5 * math.sqrt(t2 - t1) * rng.standard_normal()


def single_barrier_cross_prob(x, y, level, dt):
    """P(Brownian bridge from x to y over dt touches ``level``).

    Equals ``exp(-2 (x - level)(y - level) / dt)`` when both ends are strictly
    on the same side, and 1 otherwise.
    """
    prod = (np.asarray(x, dtype=float) - level) * (np.asarray(y, dtype=float) - level)
    with np.errstate(over="ignore"):
        p = np.where(prod > 0, np.exp(-2.0 * np.maximum(prod, 0.0) / dt), 1.0)
    return p if p.ndim else float(p)


def hidden_cross_prob(x, y, dt, interval: Interval):
    pa = single_barrier_cross_prob(x, y, interval.a, dt)
    pb = single_barrier_cross_prob(x, y, interval.b, dt)
    return np.minimum(pa + pb, 1.0)


def _side_of(x: float, interval: Interval) -> Side:
    if x <= interval.a:
        return Side.A
    if x >= interval.b:
        return Side.B
    return interval.snap(x)


class _Resolver:
    """Bisection of one step known to contain (or flagged to contain) an exit."""

    def __init__(self, interval: Interval, fine_dt: float, rng: np.random.Generator):
        self.iv = interval
        self.fine_dt = fine_dt
        self.rng = rng
        self.t: list[float] = []
        self.x: list[float] = []

    def _inside(self, x):
        return self.iv.a < x < self.iv.b

    def hidden(self, t0, x0, t1, x1):
        dt = t1 - t0
        pa = math.exp(-2.0 * (x0 - self.iv.a) * (x1 - self.iv.a) / dt)
        pb = math.exp(-2.0 * (self.iv.b - x0) * (self.iv.b - x1) / dt)
        level = self.iv.a if self.rng.random() * (pa + pb) < pa else self.iv.b
        return self.straddle(t0, x0, t1, 2.0 * level - x1)

    def straddle(self, t0, x0, t1, x1):
        # x0 inside, x1 on or beyond a boundary.
        while t1 - t0 > self.fine_dt:
            tm = 0.5 * (t0 + t1)
            xm = 0.5 * (x0 + x1) + 0.5 * math.sqrt(t1 - t0) * self.rng.standard_normal()
            if not self._inside(xm):
                t1, x1 = tm, xm
                continue
            dt = tm - t0
            p = math.exp(-2.0 * (x0 - self.iv.a) * (xm - self.iv.a) / dt)
            p += math.exp(-2.0 * (self.iv.b - x0) * (self.iv.b - xm) / dt)
            if self.rng.random() < p:
                return self.hidden(t0, x0, tm, xm)
            self.t.append(tm)
            self.x.append(xm)
            t0, x0 = tm, xm
        return t1, _side_of(x1, self.iv)


def _bridge_block(t, x, end_t, end_x, dt, block, rng):
    """Next block of coarse points of a bridge (or free path when end_x is None)."""
    rem = end_t - t
    n = max(1, min(block, int(math.ceil(rem / dt - 1e-9))))
    final = n * dt >= rem - 1e-9 * dt
    r = dt * np.arange(1, n + 1, dtype=float)
    if final:
        r[-1] = rem
    steps = np.diff(r, prepend=0.0)
    w = np.cumsum(rng.standard_normal(n) * np.sqrt(steps))
    if end_x is None:
        vals = x + w
    else:
        w_end = w[-1] if final else w[-1] + math.sqrt(rem - r[-1]) * rng.standard_normal()
        vals = x + w + (r / rem) * (end_x - x - w_end)
        if final:
            vals[-1] = end_x
    return t + r, vals, steps, final


def _scan_segment(t, x, end_t, end_x, interval, grid, rng, out_t, out_x):
    """Scan from (t, x) towards (end_t, end_x); returns ExitEvent or None."""
    while True:
        times, vals, steps, final = _bridge_block(t, x, end_t, end_x, grid.coarse_dt, grid.block, rng)
        prev = np.concatenate(([x], vals[:-1]))
        inside = interval.contains(vals)
        p = np.where(inside, hidden_cross_prob(prev, vals, steps, interval), 1.0)
        flag = rng.random(vals.size) < p
        flag |= ~inside
        if flag.any():
            k = int(np.argmax(flag))
            out_t.append(times[:k])
            out_x.append(vals[:k])
            t0 = times[k - 1] if k else t
            x0 = prev[k]
            res = _Resolver(interval, grid.fine_dt, rng)
            if inside[k]:
                te, side = res.hidden(t0, x0, times[k], vals[k])
            else:
                te, side = res.straddle(t0, x0, times[k], vals[k])
            out_t.append(np.array(res.t))
            out_x.append(np.array(res.x))
            return ExitEvent(te, side)
        out_t.append(times)
        out_x.append(vals)
        t, x = float(times[-1]), float(vals[-1])
        if final:
            return None


def first_exit(times, values, interval: Interval, grid: GridSpec, rng: np.random.Generator,
               extend: bool = False, horizon: float = math.inf, window: int = 1024) -> ExitScan:
    """First exit of ``(a, b)`` after ``times[0]`` along a stored path.

    Stored steps longer than ``coarse_dt`` are filled lazily with bridge
    points.  With ``extend`` the path continues past its last stored point as
    free Brownian motion until exit or until ``horizon``.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    out_t = [times[:1]]
    out_x = [values[:1]]

    def done(ev):
        if ev is None:
            return ExitScan(None, None, np.concatenate(out_t), np.concatenate(out_x))
        te, side = ev
        tt = np.concatenate(out_t + [np.array([te])])
        xx = np.concatenate(out_x + [np.array([interval.boundary(side)])])
        return ExitScan(float(te), side, tt, xx)

    if not interval.a < values[0] < interval.b:
        out_x[0] = np.array([interval.boundary(_side_of(values[0], interval))])
        return ExitScan(float(times[0]), _side_of(values[0], interval), times[:1].copy(), out_x[0])

    steps = np.diff(times)
    short = steps <= grid.coarse_dt * (1 + 1e-9)
    j = 0  # index of the last stored point already emitted
    for lo in range(0, steps.size, window):
        hi = min(steps.size, lo + window)
        x_prev, x_next = values[lo:hi], values[lo + 1:hi + 1]
        inside = interval.contains(x_next)
        dts = np.where(steps[lo:hi] > 0, steps[lo:hi], 1.0)
        p = np.where(inside, hidden_cross_prob(x_prev, x_next, dts, interval), 1.0)
        flag = (rng.random(hi - lo) < p) | ~inside
        for k in np.flatnonzero(~short[lo:hi] | flag) + lo:
            if k > j:
                out_t.append(times[j + 1:k + 1])
                out_x.append(values[j + 1:k + 1])
                j = k
            t0, x0, t1, x1 = times[k], values[k], times[k + 1], values[k + 1]
            if not short[k]:
                ev = _scan_segment(t0, x0, t1, x1, interval, grid, rng, out_t, out_x)
                if ev is not None:
                    return done(ev)
                if not interval.a < x1 < interval.b:
                    raise AssertionError("bridge scan missed an exit at a stored point")
                j = k + 1
                continue
            res = _Resolver(interval, grid.fine_dt, rng)
            te, side = res.hidden(t0, x0, t1, x1) if interval.a < x1 < interval.b else res.straddle(t0, x0, t1, x1)
            out_t.append(np.array(res.t))
            out_x.append(np.array(res.x))
            return done(ExitEvent(te, side))
    if j < times.size - 1:
        out_t.append(times[j + 1:])
        out_x.append(values[j + 1:])
    if extend:
        t_last, x_last = float(times[-1]), float(values[-1])
        if math.isfinite(horizon):
            if horizon <= t_last:
                return done(None)
            out_t2, out_x2 = [], []
            ev = _scan_segment(t_last, x_last, horizon, None, interval, grid, rng, out_t2, out_x2)
        else:
            out_t2, out_x2 = [], []
            ev = None
            t, x = t_last, x_last
            chunk = grid.coarse_dt * grid.block
            while ev is None:
                ev = _scan_segment(t, x, t + chunk, None, interval, grid, rng, out_t2, out_x2)
                if ev is None:
                    t, x = float(out_t2[-1][-1]), float(out_x2[-1][-1])
        out_t.extend(out_t2)
        out_x.extend(out_x2)
        return done(ev)
    return done(None)


def detect_exit(path: SampledPath, interval: Interval, from_time: float, grid: GridSpec,
                rng: np.random.Generator) -> Optional[ExitEvent]:
    """First time after ``from_time`` the refined path leaves ``(a, b)``."""
    j = int(np.searchsorted(path.times, from_time))
    if j >= len(path) or path.times[j] != from_time:
        path = path.refine([from_time], rng)
        j = int(np.searchsorted(path.times, from_time))
    if not interval.a < path.values[j] < interval.b:
        raise ValueError("path value at from_time must lie inside the interval")
    scan = first_exit(path.times[j:], path.values[j:], interval, grid, rng)
    return None if scan.time is None else ExitEvent(scan.time, scan.side)


def sample_brownian_bridge(x_from: float, x_to: float, length: float, grid: GridSpec,
                           rng: np.random.Generator) -> SampledPath:
    if length <= 0:
        raise ValueError("bridge length must be positive")
    t = grid_times(length, grid.coarse_dt)
    return SampledPath(t, x_from + _pinned_walk(t, rng) + (t / length) * (x_to - x_from))


def _pinned_walk(t, rng, dim=None):
    """Brownian bridge from 0 to 0 on the times ``t`` (t[0] = 0)."""
    shape = (t.size - 1,) if dim is None else (dim, t.size - 1)
    w = np.cumsum(rng.standard_normal(shape) * np.sqrt(np.diff(t)), axis=-1)
    w = np.concatenate((np.zeros(shape[:-1] + (1,)), w), axis=-1)
    return w - (t / t[-1]) * w[..., -1:]


def sample_bessel3_bridge(endpoint: float, length: float, grid: GridSpec,
                          rng: np.random.Generator, times=None) -> SampledPath:
    """Norm of a 3-d Brownian bridge from the origin to ``(endpoint, 0, 0)``."""
    if not (endpoint > 0 and length > 0):
        raise ValueError("endpoint and length must be positive")
    t = grid_times(length, grid.coarse_dt) if times is None else np.asarray(times, dtype=float)
    w = _pinned_walk(t, rng, dim=3)
    w[0] += (t / length) * endpoint
    r = np.sqrt(np.sum(w * w, axis=0))
    r[0] = 0.0
    r[-1] = endpoint
    return SampledPath(t, r)


def sample_meander(length: float, grid: GridSpec, rng: np.random.Generator) -> SampledPath:
    """Brownian meander on ``[0, length]``: Rayleigh endpoint, then a Bessel(3) bridge."""
    if length <= 0:
        raise ValueError("meander length must be positive")
    r = math.sqrt(length) * math.sqrt(-2.0 * math.log1p(-rng.random()))
    return sample_bessel3_bridge(r, length, grid, rng)


def refine_near(path: SampledPath, lo: float, hi: float, fine_dt: float, rng: np.random.Generator,
                margin_sd: float = 6.0, chunk: int = 4096) -> SampledPath:
    """Fill with exact bridge points every step that may visit ``[lo, hi]``.

    A step is refined when either endpoint lies within ``margin_sd`` step
    standard deviations of the band; a step farther away reaches the band
    with probability below ``exp(-2 margin_sd**2)``.
    """
    t, v = path.times, path.values
    dt = np.diff(t)
    margin = margin_sd * np.sqrt(dt)
    near = (np.minimum(v[:-1], v[1:]) < hi + margin) & (np.maximum(v[:-1], v[1:]) > lo - margin)
    idx = np.flatnonzero(near & (dt > fine_dt))
    if idx.size == 0:
        return path
    pieces_t = [t[:1]]
    pieces_x = [v[:1]]
    prev = 0
    for c0 in range(0, idx.size, chunk):
        sel = idx[c0:c0 + chunk]
        for k in sel:
            if k > prev:
                pieces_t.append(t[prev + 1:k + 1])
                pieces_x.append(v[prev + 1:k + 1])
            m = int(math.ceil(dt[k] / fine_dt - 1e-9))
            r = dt[k] * np.arange(1, m + 1) / m
            w = np.concatenate(([0.0], np.cumsum(rng.standard_normal(m) * math.sqrt(dt[k] / m))))
            bridge = v[k] + w[1:] - (r / dt[k]) * (w[-1] - (v[k + 1] - v[k]))
            bridge[-1] = v[k + 1]
            pieces_t.append(t[k] + r[:-1])
            pieces_x.append(bridge[:-1])
            pieces_t.append(t[k + 1:k + 2])
            pieces_x.append(v[k + 1:k + 2])
            prev = k + 1
    if prev < t.size - 1:
        pieces_t.append(t[prev + 1:])
        pieces_x.append(v[prev + 1:])
    return SampledPath(np.concatenate(pieces_t), np.concatenate(pieces_x))
