"""Path containers and grid-based path samplers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mtss.core import MixtureParams, ParameterError
from mtss.simulate.ops import SimulationError, mixture_increment

__all__ = ["SamplePath", "CountingPath", "sample_path", "sample_inverse_path"]


def _validate_grid(t: np.ndarray, allow_zero_start: bool) -> None:
    if t.ndim != 1 or t.size == 0:
        raise ParameterError("time grid must be a nonempty 1-d array")
    if np.any(np.diff(t) <= 0.0):
        raise ParameterError("time grid must be strictly increasing")
    floor = 0.0 if allow_zero_start else None
    if floor is not None:
        if t[0] < floor:
            raise ParameterError("time grid must be nonnegative")
    elif not t[0] > 0.0:
        raise ParameterError("time grid must be strictly positive")


@dataclass
class SamplePath:
    """A nondecreasing path observed on a time grid."""

    t: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.value = np.asarray(self.value)
        if self.t.shape != self.value.shape or self.t.ndim != 1:
            raise ParameterError("grid and values must be 1-d arrays of equal length")
        if np.any(np.diff(self.t) <= 0.0):
            raise ParameterError("time grid must be strictly increasing")
        if np.any(np.diff(self.value) < 0) or (self.value.size and self.value[0] < 0):
            raise ParameterError("path values must be nonnegative and nondecreasing")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("t,value\n")
            for ti, vi in zip(self.t, self.value):
                fh.write(f"{ti:.17g},{vi:.17g}\n")


class CountingPath(SamplePath):
    """A nondecreasing integer-valued path (jump counts on a grid)."""

    def __post_init__(self):
        super().__post_init__()
        if not np.issubdtype(self.value.dtype, np.integer):
            raise ParameterError("counting paths must hold integer values")


def sample_path(params: MixtureParams, times, gen: np.random.Generator) -> SamplePath:
    """S on the given grid, by exact increments between consecutive times.

    A leading grid time of 0 gets the exact value S(0) = 0.
    """
    t = np.asarray(times, dtype=float)
    _validate_grid(t, allow_zero_start=True)
    vals = np.empty(t.shape)
    acc = 0.0
    prev = 0.0
    for k, tk in enumerate(t):
        if tk > prev:
            acc += mixture_increment(params, tk - prev, gen)
        vals[k] = acc
        prev = tk
    return SamplePath(t=t, value=vals)


def sample_inverse_path(
    params: MixtureParams,
    times,
    gen: np.random.Generator,
    du: float,
    midpoint: bool = True,
    max_steps: int = 10**7,
) -> SamplePath:
    """E on the given grid, from one underlying path of S marched at spacing du.

    E(t) = inf{u : S(u) > t} is resolved to the first grid step with S > t;
    the grid values share a single realization of S, so the path is a bona
    fide nondecreasing trajectory of the inverse process.
    """
    t = np.asarray(times, dtype=float)
    _validate_grid(t, allow_zero_start=False)
    if not (du > 0.0):
        raise ParameterError(f"grid spacing must be positive, got du={du!r}")
    K = np.zeros(t.shape, dtype=np.int64)
    acc = 0.0
    j = 0
    step = 0
    while j < t.size:
        step += 1
        if step > max_steps:
            raise SimulationError(
                f"S has not reached t={t[j]} after {max_steps} steps of du={du}"
            )
        acc += mixture_increment(params, du, gen)
        while j < t.size and acc > t[j]:
            K[j] = step
            j += 1
    e = du * K.astype(float)
    if midpoint:
        e -= 0.5 * du
    return SamplePath(t=t, value=e)
