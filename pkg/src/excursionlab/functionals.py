"""Bounded test functionals of excursions.

A functional sees an excursion through its sample arrays (clock starting at
0) together with its ``age``, the elapsed time at the observation instant.
``ENDPOINT_DISP`` without a clock argument and ``LIFETIME_TAIL`` are measured
relative to that age, which is what a straddling excursion observed at time t
naturally provides (``age = t - sigma_t``).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Excursion, Interval


class FunctionalId(enum.Enum):
    ENDPOINT_DISP = "endpoint_disp"
    SUP_DISP = "sup_disp"
    LIFETIME_TAIL = "lifetime_tail"
    OCC_ABOVE_MID = "occ_above_mid"


@dataclass(frozen=True)
class Functional:
    kind: FunctionalId
    param: Optional[float] = None

    @property
    def name(self) -> str:
        if self.param is None:
            return self.kind.value
        return f"{self.kind.value}({self.param:g})"

    @property
    def continuous(self) -> bool:
        return self.kind is not FunctionalId.LIFETIME_TAIL

    @classmethod
    def parse(cls, text: str) -> "Functional":
        text = text.strip()
        if "(" in text:
            head, arg = text.split("(", 1)
            return cls(FunctionalId(head.strip()), float(arg.rstrip(")")))
        return cls(FunctionalId(text))

    def __call__(self, times, values, lifetime, interval: Interval, age: Optional[float] = None) -> float:
        return _evaluate(self, times, values, lifetime, interval, age)


DEFAULT_FUNCTIONALS = (
    Functional(FunctionalId.ENDPOINT_DISP),
    Functional(FunctionalId.SUP_DISP),
    Functional(FunctionalId.OCC_ABOVE_MID),
)


def _value_at(times, values, lifetime, clock):
    if clock >= lifetime:
        return float(values[-1])
    return float(np.interp(clock, times, values))


def _evaluate(f: Functional, times, values, lifetime, interval, age):
    kind = f.kind
    if kind is FunctionalId.ENDPOINT_DISP:
        clock = age if f.param is None else f.param
        if clock is None:
            raise ValueError("endpoint_disp without a clock argument needs the age")
        return _value_at(times, values, lifetime, clock) - float(values[0])
    if kind is FunctionalId.SUP_DISP:
        return float(np.max(np.abs(values - values[0])))
    if kind is FunctionalId.LIFETIME_TAIL:
        if f.param is None:
            raise ValueError("lifetime_tail needs r")
        return float(lifetime > (age or 0.0) + f.param)
    if kind is FunctionalId.OCC_ABOVE_MID:
        dt = np.diff(times)
        above = values[:-1] > interval.midpoint
        return float(np.sum(dt[above]) / lifetime)
    raise ValueError(kind)


def eval_functional(f: Functional, zeta: Excursion, age: Optional[float] = None) -> float:
    s = zeta.samples
    return _evaluate(f, s.times, s.values, zeta.lifetime, zeta.interval, age)


def evaluate_all(functionals, times, values, lifetime, interval, age) -> dict:
    return {f.name: _evaluate(f, times, values, lifetime, interval, age) for f in functionals}
