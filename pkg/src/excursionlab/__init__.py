"""Monte Carlo and analytic tools for Brownian excursions straddling a fixed time."""
from .analytic import exit_rate, ito_tail, limit_cdf, limit_cdf_inverse, psi
from .core import Excursion, Interval, LimitSample, SampledPath, Side, StraddleObservation, stream_generator
from .engine import GridSpec, first_exit, simulate_path
from .extract import enumerate_excursions, extract_zeta, locate_d, locate_sigma
from .limit import sample_limit_pair, sample_p0, sample_q

__all__ = [
    "Excursion", "GridSpec", "Interval", "LimitSample", "SampledPath", "Side", "StraddleObservation",
    "enumerate_excursions", "exit_rate", "extract_zeta", "first_exit", "ito_tail", "limit_cdf",
    "limit_cdf_inverse", "locate_d", "locate_sigma", "psi", "sample_limit_pair", "sample_p0", "sample_q",
    "simulate_path", "stream_generator",
]
