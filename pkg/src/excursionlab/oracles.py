"""Brute-force Monte Carlo oracles, independent of the production samplers.

All kernels run Brownian motion on a uniform grid with per-step killing by
the single-barrier bridge probabilities, so survival is exact at grid points
up to the (negligible) double-crossing term.  Kernels draw from a
``numpy.random.Generator`` passed in by the caller.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _killed(x, y, a, b, dt, rng):
    """Step ``x -> y`` leaves ``(a, b)``: returns 0 (stays), 1 (via a), 2 (via b)."""
    if y <= a:
        return 1
    if y >= b:
        return 2
    ea = 2.0 * (x - a) * (y - a) / dt
    eb = 2.0 * (b - x) * (b - y) / dt
    if ea > 40.0 and eb > 40.0:
        return 0
    pa = math.exp(-ea)
    u = rng.random()
    if u < pa:
        return 1
    if u < pa + math.exp(-eb):
        return 2
    return 0


@njit(cache=True)
def _survival_counts(x0, a, b, dt, checkpoints, n_paths, rng):
    n_chk = checkpoints.size
    counts = np.zeros(n_chk, dtype=np.int64)
    idx = np.empty(n_chk, dtype=np.int64)
    for j in range(n_chk):
        idx[j] = int(round(checkpoints[j] / dt))
    n_steps = idx[n_chk - 1]
    sd = math.sqrt(dt)
    for _ in range(n_paths):
        x = x0
        c = 0
        for k in range(1, n_steps + 1):
            y = x + sd * rng.standard_normal()
            if _killed(x, y, a, b, dt, rng) != 0:
                break
            x = y
            while c < n_chk and idx[c] == k:
                counts[c] += 1
                c += 1
    return counts


def survival_counts(x0: float, a: float, b: float, checkpoints, n_paths: int,
                    rng: np.random.Generator, dt: float = 1e-4) -> np.ndarray:
    """Number of paths from ``x0`` still inside ``(a, b)`` at each checkpoint."""
    chk = np.sort(np.asarray(checkpoints, dtype=float))
    return _survival_counts(float(x0), float(a), float(b), float(dt), chk, int(n_paths), rng)


@njit(cache=True)
def _uniform_exit_times(a, b, dt, n, rng):
    out = np.empty(n)
    sd = math.sqrt(dt)
    for i in range(n):
        x = a + (b - a) * rng.random()
        k = 0
        while True:
            y = x + sd * rng.standard_normal()
            k += 1
            if _killed(x, y, a, b, dt, rng) != 0:
                out[i] = (k - 0.5) * dt
                break
            x = y
    return out


def uniform_exit_times(a: float, b: float, n: int, rng: np.random.Generator,
                       dt: float = 1e-4) -> np.ndarray:
    """Exit times of Brownian motion started uniformly in ``(a, b)``."""
    return _uniform_exit_times(float(a), float(b), float(dt), int(n), rng)


@njit(cache=True)
def _epsilon_excursions(x0, ref, a, b, s, dt, n, rng, max_trials):
    endpoint = np.empty(n)
    lifetime = np.empty(n)
    sup = np.empty(n)
    n_s = int(round(s / dt))
    sd = math.sqrt(dt)
    got = 0
    trials = 0
    while got < n and trials < max_trials:
        trials += 1
        x = x0
        top = abs(x0 - ref)
        k = 0
        end = 0.0
        while True:
            y = x + sd * rng.standard_normal()
            k += 1
            side = _killed(x, y, a, b, dt, rng)
            if side != 0:
                break
            x = y
            d = abs(x - ref)
            if d > top:
                top = d
            if k == n_s:
                end = x - ref
        if k <= n_s:
            continue
        if abs((a if side == 1 else b) - ref) > top:
            top = abs((a if side == 1 else b) - ref)
        endpoint[got] = end
        lifetime[got] = (k - 0.5) * dt
        sup[got] = top
        got += 1
    return endpoint[:got], lifetime[:got], sup[:got], trials


def epsilon_excursions(boundary: float, a: float, b: float, s: float, n: int, rng: np.random.Generator,
                       epsilon: float = 1e-3, dt: float = 1e-3, max_trials: int = 10**10):
    """Brownian motion from ``boundary`` moved ``epsilon`` inward, kept if alive at ``s``.

    Returns ``(endpoint, lifetime, sup, trials)``: displacement from
    ``boundary`` at time ``s``, exit time (step midpoint), and
    ``sup |W - boundary|`` over the grid including the exit point.
    """
    if boundary == a:
        x0 = a + epsilon
    elif boundary == b:
        x0 = b - epsilon
    else:
        raise ValueError("boundary must be a or b")
    return _epsilon_excursions(float(x0), float(boundary), float(a), float(b), float(s), float(dt),
                               int(n), rng, int(max_trials))
