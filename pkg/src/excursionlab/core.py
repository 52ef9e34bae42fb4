"""Shared value types and random stream derivation.

Every stochastic routine in the package takes a ``numpy.random.Generator``
obtained from :func:`derive_stream`.  Streams are Philox generators keyed by
``(master_seed, stream_index)``, so the state of stream ``i`` is a pure
function of its key and never depends on how work is scheduled.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

_MASK64 = (1 << 64) - 1

# Stream-index domains.  Replicate i of an experiment uses ``domain + i``.
DOMAIN_REPLICATE = 0
DOMAIN_REFERENCE = 1 << 60
DOMAIN_LIMIT = 2 << 60
DOMAIN_ORACLE = 3 << 60
DOMAIN_AUX = 4 << 60


class Side(enum.Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class Interval:
    """The open set ``(a, b)``."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"interval endpoints must be finite, got ({self.a}, {self.b})")
        if not self.a < self.b:
            raise ValueError(f"interval requires a < b, got a={self.a}, b={self.b}")

    def length(self) -> float:
        return self.b - self.a

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)

    def contains(self, x):
        """Strict membership, vectorised."""
        return (x > self.a) & (x < self.b)

    def boundary(self, side: Side) -> float:
        return self.a if side is Side.A else self.b

    def snap(self, x: float) -> Side:
        """Nearer boundary point; ties go to ``a``."""
        return Side.A if abs(x - self.a) <= abs(x - self.b) else Side.B

    def mirror(self, x):
        return self.a + self.b - x


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_index: int

    def key(self) -> tuple[int, int]:
        return (self.master_seed & _MASK64, self.stream_index & _MASK64)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=list(self.key())))


def derive_stream(master_seed: int, stream_index: int) -> RngStream:
    return RngStream(int(master_seed), int(stream_index))


def stream_generator(master_seed: int, stream_index: int) -> np.random.Generator:
    return derive_stream(master_seed, stream_index).generator()


def _readonly(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SampledPath:
    """A Brownian trajectory known at a strictly increasing set of times.

    Between stored points the path is a Brownian bridge; use :meth:`refine`
    to sample additional points instead of interpolating linearly.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = _readonly(self.times)
        v = _readonly(self.values)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise ValueError("times and values must be 1-d arrays of equal nonzero length")
        if t[0] != 0.0:
            raise ValueError("times[0] must be 0")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def origin(self) -> float:
        return float(self.values[0])

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def __len__(self):
        return self.times.size

    def value_at(self, t: float) -> float:
        """Value at a stored time, or the bridge mean elsewhere."""
        return float(np.interp(t, self.times, self.values))

    def refine(self, new_times, rng: np.random.Generator) -> "SampledPath":
        """Insert bridge samples at ``new_times`` (inside the stored horizon)."""
        new_times = np.unique(np.asarray(new_times, dtype=float))
        times = list(self.times)
        values = list(self.values)
        for s in new_times:
            if s < 0 or s > times[-1]:
                raise ValueError(f"refinement time {s} outside [0, {times[-1]}]")
            j = int(np.searchsorted(times, s))
            if j < len(times) and times[j] == s:
                continue
            t0, t1 = times[j - 1], times[j]
            x0, x1 = values[j - 1], values[j]
            w = (s - t0) / (t1 - t0)
            mean = x0 + w * (x1 - x0)
            var = (s - t0) * (t1 - s) / (t1 - t0)
            times.insert(j, s)
            values.insert(j, mean + math.sqrt(var) * rng.standard_normal())
        return SampledPath(np.array(times), np.array(values))

    def reversed(self, until: Optional[float] = None) -> "SampledPath":
        """Time reversal of the path on ``[0, until]`` (``until`` must be stored)."""
        until = self.horizon if until is None else until
        j = int(np.searchsorted(self.times, until))
        if j >= self.times.size or self.times[j] != until:
            raise ValueError("reversal time must be a stored time")
        t = until - self.times[: j + 1][::-1]
        return SampledPath(t, self.values[: j + 1][::-1])

    def shifted(self, t0: float) -> "SampledPath":
        """The part of the path after stored time ``t0`` on its own clock."""
        j = int(np.searchsorted(self.times, t0))
        if j >= self.times.size or self.times[j] != t0:
            raise ValueError("shift time must be a stored time")
        return SampledPath(self.times[j:] - t0, self.values[j:])


@dataclass(frozen=True)
class Excursion:
    """A path leaving a boundary point of ``interval`` and stopped on exit."""

    start: float
    samples: SampledPath
    lifetime: float
    exit_side: Side
    interval: Interval

    def __post_init__(self):
        if self.lifetime <= 0:
            raise ValueError("excursion lifetime must be positive")
        if self.start not in (self.interval.a, self.interval.b):
            raise ValueError("excursion must start on the boundary")

    @property
    def end_value(self) -> float:
        return self.interval.boundary(self.exit_side)

    def value_at(self, clock: float) -> float:
        if clock >= self.lifetime:
            return self.end_value
        return self.samples.value_at(clock)


@dataclass(frozen=True)
class StraddleObservation:
    t: float
    sigma: float
    d: float
    x_sigma: Optional[float]
    zeta: Optional[Excursion]
    never_exited: bool
    functionals: dict = field(default_factory=dict)

    @property
    def age(self) -> float:
        return self.t - self.sigma

    @property
    def lifetime(self) -> float:
        return self.d - self.sigma


@dataclass(frozen=True)
class LimitSample:
    x: float
    y: float
    zeta: Excursion
