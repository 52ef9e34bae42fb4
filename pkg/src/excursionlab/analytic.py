"""Closed-form and series laws for Brownian motion in an interval.

Two representations are implemented for each quantity:

* the Dirichlet eigenfunction expansion in ``k`` odd, fast for large ``s``;
* the method-of-images expansion, fast for small ``s``.

Both return a :class:`SeriesValue` carrying a rigorous bound on the
truncation remainder.  The public functions pick the image form below
``SeriesConfig.image_switch * (b - a)**2`` and the eigenfunction form above.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

from .core import Interval, Side

_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class SeriesConfig:
    tail_tolerance: float = 1e-12
    max_terms: int = 100_000
    image_switch: float = 0.05

    def __post_init__(self):
        if not self.tail_tolerance > 0:
            raise ValueError("tail_tolerance must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_SERIES = SeriesConfig()


class SeriesValue(NamedTuple):
    value: float
    bound: float
    terms: int
    method: str


def _phi(z):
    return np.exp(-0.5 * z * z) / _SQRT2PI


def _upper(z):
    """Gaussian upper tail P(N > z)."""
    return ndtr(-z)


def _gauss_tail_sum_bound(z: float, h: float) -> float:
    """Bound on sum_{j>=0} P(N > z + j h) for z >= 0, h > 0."""
    if z < 0:
        return math.inf
    ratio = math.exp(-z * h)
    return float(_upper(z)) / (1.0 - ratio) if ratio < 1 else math.inf


def _odd_exp_tail(k_next: int, c: float, weight_pow: int, coef: float) -> float:
    """Bound on sum over odd k >= k_next of coef * k**-weight_pow * exp(-k^2 c)."""
    if c <= 0:
        return math.inf
    lead = coef * k_next ** (-weight_pow) * math.exp(-k_next * k_next * c)
    ratio = math.exp(-4.0 * k_next * c)
    return lead / (1.0 - ratio) if ratio < 1 else math.inf


def _eigen(kind: str, z: float, s: float, L: float, cfg: SeriesConfig) -> SeriesValue:
    c = math.pi ** 2 * s / (2.0 * L * L)
    total = 0.0
    k = 1
    n = 0
    while True:
        e = math.exp(-k * k * c)
        if kind == "psi":
            total += 4.0 / (k * math.pi) * math.sin(k * math.pi * z) * e
            bound = _odd_exp_tail(k + 2, c, 1, 4.0 / math.pi)
        elif kind == "cdf":
            total += 8.0 / (k * k * math.pi ** 2) * e
            bound = _odd_exp_tail(k + 2, c, 2, 8.0 / math.pi ** 2)
        else:
            total += 2.0 / L * e
            bound = _odd_exp_tail(k + 2, c, 0, 2.0 / L)
        n += 1
        if bound < cfg.tail_tolerance or n >= cfg.max_terms:
            return SeriesValue(total, bound, n, "eigen")
        k += 2


def _mass(lo, hi):
    """P(lo < N < hi) without cancellation in the tails."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    return np.where(lo > 0, _upper(lo) - _upper(hi), np.where(hi < 0, ndtr(hi) - ndtr(lo), ndtr(hi) - ndtr(lo)))


def _image_psi(u: float, s: float, L: float, cfg: SeriesConfig) -> SeriesValue:
    rs = math.sqrt(s)
    total = 0.0
    n_max = 0
    while True:
        for n in ((0,) if n_max == 0 else (n_max, -n_max)):
            c1 = u - 2 * n * L
            c2 = -u - 2 * n * L
            total += float(_mass(-c1 / rs, (L - c1) / rs) - _mass(-c2 / rs, (L - c2) / rs))
        z = 2 * n_max * L / rs
        bound = 4.0 * _gauss_tail_sum_bound(z, 2 * L / rs) if n_max else math.inf
        if bound < cfg.tail_tolerance or n_max + 1 >= cfg.max_terms:
            return SeriesValue(total, bound, 2 * n_max + 1, "image")
        n_max += 1


def _G(z):
    # Antiderivative of the standard normal CDF.
    return z * ndtr(z) + _phi(z)


def _image_cdf(s: float, L: float, cfg: SeriesConfig) -> SeriesValue:
    rs = math.sqrt(s)

    def J(c0, c1):
        # integral over c in (c0, c1) of P(N(c, s) in (0, L))
        return rs * (-_G((L - c1) / rs) + _G((L - c0) / rs) + _G(-c1 / rs) - _G(-c0 / rs))

    integral = 0.0
    n_max = 0
    while True:
        for n in ((0,) if n_max == 0 else (n_max, -n_max)):
            integral += float(J(-2 * n * L, (1 - 2 * n) * L) - J(-(1 + 2 * n) * L, -2 * n * L))
        z = 2 * n_max * L / rs
        bound = 4.0 * _gauss_tail_sum_bound(z, 2 * L / rs) if n_max else math.inf
        if bound < cfg.tail_tolerance or n_max + 1 >= cfg.max_terms:
            return SeriesValue(1.0 - integral / L, bound, 2 * n_max + 1, "image")
        n_max += 1


def _image_rate(s: float, L: float, cfg: SeriesConfig) -> SeriesValue:
    rs = math.sqrt(s)
    total = float(_phi(0.0))
    m = 0
    while True:
        m += 1
        total += 2.0 * (-1) ** m * float(_phi(m * L / rs))
        z = (m + 1) * L / rs
        bound = 2.0 / rs * float(_phi(z)) / (1.0 - math.exp(-z * L / rs))
        if bound < cfg.tail_tolerance or m >= cfg.max_terms:
            return SeriesValue(total / rs, bound, 2 * m + 1, "image")


def _use_image(s: float, L: float, cfg: SeriesConfig) -> bool:
    return s < cfg.image_switch * L * L


def psi_series(x: float, s: float, interval: Interval, cfg: SeriesConfig = DEFAULT_SERIES,
               method: str = "auto") -> SeriesValue:
    """Survival probability of Brownian motion from ``x`` in ``(a, b)`` up to ``s``."""
    a, b = interval.a, interval.b
    if not a <= x <= b:
        raise ValueError(f"x={x} outside [{a}, {b}]")
    if s < 0:
        raise ValueError("s must be nonnegative")
    if x == a or x == b:
        return SeriesValue(0.0, 0.0, 0, "boundary")
    if s == 0:
        return SeriesValue(1.0, 0.0, 0, "trivial")
    L = b - a
    if method == "image" or (method == "auto" and _use_image(s, L, cfg)):
        res = _image_psi(x - a, s, L, cfg)
    else:
        res = _eigen("psi", (x - a) / L, s, L, cfg)
    return res._replace(value=min(1.0, max(0.0, res.value)))


def psi(x: float, s: float, interval: Interval, cfg: SeriesConfig = DEFAULT_SERIES) -> float:
    return psi_series(x, s, interval, cfg).value


def limit_cdf_series(s: float, interval: Interval, cfg: SeriesConfig = DEFAULT_SERIES,
                     method: str = "auto") -> SeriesValue:
    """``F(s) = (1/(b-a)) * integral over (a, b) of (1 - psi(x, s)) dx``."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0:
        return SeriesValue(0.0, 0.0, 0, "trivial")
    L = interval.length()
    if method == "image" or (method == "auto" and _use_image(s, L, cfg)):
        res = _image_cdf(s, L, cfg)
    else:
        res = _eigen("cdf", 0.0, s, L, cfg)
        res = res._replace(value=1.0 - res.value)
    return res._replace(value=min(1.0, max(0.0, res.value)))


def limit_cdf(s, interval: Interval, cfg: SeriesConfig = DEFAULT_SERIES):
    if np.ndim(s):
        return np.array([limit_cdf_series(float(v), interval, cfg).value for v in np.ravel(s)]).reshape(np.shape(s))
    return limit_cdf_series(float(s), interval, cfg).value


def limit_cdf_vec(s: np.ndarray, interval: Interval, cfg: SeriesConfig = DEFAULT_SERIES) -> np.ndarray:
    """Vectorised ``F`` for sampling; terms fixed by the smallest argument in each regime."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    L = interval.length()
    small = (s > 0) & (s < cfg.image_switch * L * L)
    big = s >= cfg.image_switch * L * L
    if big.any():
        sb = s[big]
        c = math.pi ** 2 * sb / (2 * L * L)
        k_need = _eigen("cdf", 0.0, float(sb.min()), L, cfg).terms
        k = 2 * np.arange(k_need) + 1
        out[big] = 1.0 - np.sum(8.0 / (k[:, None] ** 2 * math.pi ** 2) * np.exp(-np.outer(k * k, c)), axis=0)
    if small.any():
        ss = s[small]
        rs = np.sqrt(ss)

        def J(c0, c1):
            return rs * (-_G((L - c1) / rs) + _G((L - c0) / rs) + _G(-c1 / rs) - _G(-c0 / rs))

        integral = np.zeros_like(ss)
        for n in (0, 1, -1, 2, -2):
            integral += J(-2 * n * L, (1 - 2 * n) * L) - J(-(1 + 2 * n) * L, -2 * n * L)
        out[small] = 1.0 - integral / L
    return np.clip(out, 0.0, 1.0)


def limit_cdf_inverse(p, interval: Interval, cfg: SeriesConfig = DEFAULT_SERIES, tol: float = 1e-10):
    """Inverse of ``F`` by bisection with bracket growth; vectorised over ``p``."""
    scalar = np.ndim(p) == 0
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(p >= 1) or np.any(p < 0):
        raise ValueError("limit_cdf_inverse needs 0 <= p < 1")
    L2 = interval.length() ** 2
    lo = np.zeros_like(p)
    hi = np.full_like(p, 0.1 * L2)
    grow = limit_cdf_vec(hi, interval, cfg) < p
    while grow.any():
        hi[grow] *= 2.0
        grow = limit_cdf_vec(hi, interval, cfg) < p
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = limit_cdf_vec(mid, interval, cfg)
        below = f < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        err = np.abs(f - p)
        if np.all((err <= tol) | (hi - lo <= 1e-15 * np.maximum(hi, 1e-300))):
            lo = hi = mid
            break
    out = np.where(p == 0, 0.0, 0.5 * (lo + hi))
    return float(out[0]) if scalar else out


def ito_tail(t: float) -> float:
    """Excursion-measure tail ``n{R > t} = sqrt(2 / (pi t))``."""
    if not t > 0:
        raise ValueError("t must be positive")
    return math.sqrt(2.0 / (math.pi * t))


def exit_rate_series(x, s: float, interval: Interval, cfg: SeriesConfig = DEFAULT_SERIES,
                     method: str = "auto") -> SeriesValue:
    """``n_x({R > s})`` for excursions into ``(a, b)`` from boundary point ``x``."""
    if not s > 0:
        raise ValueError("s must be positive")
    _boundary(x, interval)
    L = interval.length()
    if method == "image" or (method == "auto" and _use_image(s, L, cfg)):
        return _image_rate(s, L, cfg)
    return _eigen("rate", 0.0, s, L, cfg)


def exit_rate(x, s: float, interval: Interval, cfg: SeriesConfig = DEFAULT_SERIES) -> float:
    return exit_rate_series(x, s, interval, cfg).value


def _boundary(x, interval: Interval) -> Side:
    if isinstance(x, Side):
        return x
    if x == interval.a:
        return Side.A
    if x == interval.b:
        return Side.B
    raise ValueError(f"{x} is not a boundary point of ({interval.a}, {interval.b})")


def lifetime_tail_ratio(x, s, r, interval: Interval, cfg: SeriesConfig = DEFAULT_SERIES):
    """``q(x, s, {R > s + r}) = n_x(R > s + r) / n_x(R > s)``."""
    return exit_rate(x, s + r, interval, cfg) / exit_rate(x, s, interval, cfg)
