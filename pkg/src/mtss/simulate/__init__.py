"""Exact samplers for the mixture subordinator, its inverse, and driven processes.

The hot loops (stable proposals and tempering rejection rounds) run in a
compiled kernel when the extension built, and in a stream-compatible numpy
fallback otherwise; BACKEND names the one in use and MTSS_FORCE_FALLBACK=1
forces the fallback.
"""

from mtss.simulate._backend import BACKEND
from mtss.simulate.ops import (
    SimulationError,
    mixture_increment,
    sample_inverse_terminal,
    sample_terminal,
    stable_increment,
    tempered_increment,
)
from mtss.simulate.paths import CountingPath, SamplePath, sample_inverse_path, sample_path
from mtss.simulate.processes import (
    sample_brownian,
    sample_poisson_inverse,
    sample_poisson_mixture,
    sample_poisson_mixture_path,
)
from mtss.simulate.rng import RngConfig

__all__ = [
    "BACKEND",
    "RngConfig",
    "SimulationError",
    "stable_increment",
    "tempered_increment",
    "mixture_increment",
    "sample_terminal",
    "sample_inverse_terminal",
    "SamplePath",
    "CountingPath",
    "sample_path",
    "sample_inverse_path",
    "sample_poisson_mixture",
    "sample_poisson_mixture_path",
    "sample_poisson_inverse",
    "sample_brownian",
]
