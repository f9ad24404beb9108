"""Processes driven by the mixture clock: counting processes and Brownian motion.

The counting processes are a standard Poisson process run on the random clock:
N(t) = M(S(t)) has probability generating function exp(-t phi(mu(1 - z))),
and the time-fractional variant M(E(t)) uses the inverse clock.  The
time-changed Brownian motions B(S(t)) and B(E(t)) are drawn by conditioning:
given the clock value C, the position is N(0, C).
"""

from __future__ import annotations

import numpy as np

from mtss.core import MixtureParams, ParameterError
from mtss.simulate.ops import sample_inverse_terminal, sample_terminal
from mtss.simulate.paths import CountingPath, sample_path

__all__ = [
    "sample_poisson_mixture",
    "sample_poisson_mixture_path",
    "sample_poisson_inverse",
    "sample_brownian",
]


def _check_rate(mu: float) -> None:
    if not (mu > 0.0):
        raise ParameterError(f"jump rate must be positive, got mu={mu!r}")


def sample_poisson_mixture(
    params: MixtureParams, mu: float, t: float, gen: np.random.Generator, size=None
):
    """Counts N(t) = M(S(t)) with M a rate-mu Poisson process."""
    _check_rate(mu)
    clock = sample_terminal(params, t, gen, size=size)
    counts = gen.poisson(mu * np.asarray(clock))
    return int(counts) if size is None else counts


def sample_poisson_mixture_path(
    params: MixtureParams, mu: float, times, gen: np.random.Generator
) -> CountingPath:
    """One trajectory of N(t) = M(S(t)) on a grid.

    Given the clock path, count increments over disjoint intervals are
    independent Poissons with means mu * (S_k - S_{k-1}).
    """
    _check_rate(mu)
    clock = sample_path(params, times, gen)
    jumps = np.diff(np.concatenate([[0.0], clock.value]))
    counts = np.cumsum(gen.poisson(mu * jumps))
    return CountingPath(t=clock.t, value=counts)


def sample_poisson_inverse(
    params: MixtureParams,
    mu: float,
    t: float,
    gen: np.random.Generator,
    du: float,
    size=None,
):
    """Counts M(E(t)) on the inverse clock, resolved to du (see ops)."""
    _check_rate(mu)
    clock = sample_inverse_terminal(params, t, gen, du, size=size)
    counts = gen.poisson(mu * np.asarray(clock))
    return int(counts) if size is None else counts


def sample_brownian(
    params: MixtureParams,
    t: float,
    gen: np.random.Generator,
    clock: str = "mixture",
    du: float | None = None,
    size=None,
):
    """Positions of a standard Brownian motion run on the random clock.

    clock="mixture" uses C = S(t) (space-fractional regime); clock="inverse"
    uses C = E(t) and needs the grid resolution du.  Conditionally on C the
    position is exactly N(0, C).
    """
    if clock == "mixture":
        c = sample_terminal(params, t, gen, size=size)
    elif clock == "inverse":
        if du is None:
            raise ParameterError("the inverse clock needs a grid resolution du")
        c = sample_inverse_terminal(params, t, gen, du, size=size)
    else:
        raise ValueError(f"unknown clock {clock!r}")
    z = gen.standard_normal(size=size)
    return z * np.sqrt(c)
