"""Exact increment and terminal-value samplers for the mixture subordinator.

Stable increments use Kanter's representation (no rejection).  Tempered
increments thin stable proposals with acceptance exp(-lam x), which succeeds
with probability exp(-lam^alpha dt); rejection re-proposes only the pending
entries, in rounds, so the stream consumption is a deterministic function of
the accept/reject history.  Batch and terminal samplers split the horizon into
ceil(lam^alpha c t) equal sub-increments first, which is exact by infinite
divisibility and keeps every per-round acceptance probability above e^-1.
"""

from __future__ import annotations

import math

import numpy as np

from mtss.core import MixtureParams, ParameterError, RegimeError
from mtss.simulate._backend import stable_round, tss_round

__all__ = [
    "SimulationError",
    "stable_increment",
    "tempered_increment",
    "mixture_increment",
    "sample_terminal",
    "sample_inverse_terminal",
]

# acceptance exp(-30) ~ 1e-13: no realistic round budget can finish, so the
# increment-level API refuses outright and points at subdivision
_LOG_ACCEPT_LIMIT = 30.0
_MAX_SUBDIVISIONS = 10**7


class SimulationError(RuntimeError):
    """A sampling loop exhausted its round or step budget."""


def _check_increment(alpha: float, lam: float, dt: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"stability index must lie in (0, 1), got {alpha!r}")
    if not (lam >= 0.0):
        raise ParameterError(f"tempering rate must be >= 0, got {lam!r}")
    if not (dt > 0.0):
        raise ParameterError(f"increment length must be positive, got {dt!r}")


def stable_increment(gen: np.random.Generator, alpha: float, dt: float, size=None):
    """Draw S_alpha(dt) for the untempered subordinator, scalar or 1-d batch."""
    _check_increment(alpha, 0.0, dt)
    n = 1 if size is None else int(size)
    x = stable_round(alpha, dt, n, gen.bit_generator)
    return float(x[0]) if size is None else x


def tempered_increment(
    gen: np.random.Generator,
    alpha: float,
    lam: float,
    dt: float,
    size=None,
    max_rounds: int = 10**6,
):
    """Draw a tempered stable increment with exponent dt((s+lam)^a - lam^a).

    Raises RegimeError when lam^alpha dt > 30 (acceptance below e^-30): split
    the increment into ceil(lam^alpha dt) pieces instead, or use
    sample_terminal / mixture_increment, which do that automatically.
    """
    _check_increment(alpha, lam, dt)
    if lam == 0.0:
        return stable_increment(gen, alpha, dt, size=size)
    cost = lam**alpha * dt
    if cost > _LOG_ACCEPT_LIMIT:
        raise RegimeError(
            f"thinning acceptance exp(-{cost:.1f}) is unworkable for a single "
            f"increment; subdivide into {math.ceil(cost)} pieces"
        )
    n = 1 if size is None else int(size)
    out = np.empty(n)
    pending = np.arange(n)
    for _ in range(max_rounds):
        x, acc = tss_round(alpha, lam, dt, pending.size, gen.bit_generator)
        out[pending[acc]] = x[acc]
        pending = pending[~acc]
        if not pending.size:
            return float(out[0]) if size is None else out
    raise SimulationError(
        f"thinning did not finish within {max_rounds} rounds "
        f"(acceptance exp(-{cost:.2f}), {pending.size} of {n} pending)"
    )


def _tempered_sum(gen, alpha, lam, horizon, size):
    """Sum of auto-subdivided tempered increments covering `horizon`."""
    if lam == 0.0:
        return stable_increment(gen, alpha, horizon, size=size)
    n_sub = max(1, math.ceil(lam**alpha * horizon))
    if n_sub > _MAX_SUBDIVISIONS:
        raise RegimeError(
            f"horizon needs {n_sub} sub-increments (lam^alpha t = "
            f"{lam**alpha * horizon:.3e}); refusing"
        )
    dt = horizon / n_sub
    if size is None:
        return math.fsum(tempered_increment(gen, alpha, lam, dt) for _ in range(n_sub))
    out = np.zeros(int(size))
    for _ in range(n_sub):
        out += tempered_increment(gen, alpha, lam, dt, size=size)
    return out


def mixture_increment(params: MixtureParams, dt: float, gen: np.random.Generator, size=None):
    """Draw S(t + dt) - S(t): one increment of the full mixture.

    Components are sampled independently on their own clocks c_i dt and
    summed; each is subdivided as needed, so any dt is admissible.
    """
    if not (dt > 0.0):
        raise ParameterError(f"increment length must be positive, got {dt!r}")
    total = 0.0 if size is None else np.zeros(int(size))
    for c in params.active():
        total = total + _tempered_sum(gen, c.alpha, c.lam, c.weight * dt, size)
    return total


def sample_terminal(params: MixtureParams, t: float, gen: np.random.Generator, size=None):
    """Draw S(t) exactly (no discretization), scalar or 1-d batch."""
    if not (t > 0.0):
        raise ParameterError(f"time must be positive, got t={t!r}")
    return mixture_increment(params, t, gen, size=size)


def sample_inverse_terminal(
    params: MixtureParams,
    t: float,
    gen: np.random.Generator,
    du: float,
    size=None,
    midpoint: bool = True,
    max_steps: int = 10**7,
):
    """Draw the first-passage time E(t) = inf{u : S(u) > t} on a u-grid.

    Marches every path along a shared grid of spacing du (step-major: each
    step draws increments for the still-running paths only, in one batch per
    component) and records the first grid time with S > t.  The raw grid
    estimate du*K overshoots E(t) by at most du; midpoint=True subtracts du/2,
    which cancels the O(du) bias and leaves O(du^2).
    """
    if not (t > 0.0):
        raise ParameterError(f"time must be positive, got t={t!r}")
    if not (du > 0.0):
        raise ParameterError(f"grid spacing must be positive, got du={du!r}")
    n = 1 if size is None else int(size)
    S = np.zeros(n)
    K = np.zeros(n, dtype=np.int64)
    running = np.arange(n)
    step = 0
    while running.size:
        step += 1
        if step > max_steps:
            raise SimulationError(
                f"{running.size} of {n} paths still below t={t} after "
                f"{max_steps} steps of du={du}; increase du"
            )
        S[running] += mixture_increment(params, du, gen, size=running.size)
        crossed = S[running] > t
        K[running[crossed]] = step
        running = running[~crossed]
    e = du * K.astype(float)
    if midpoint:
        e -= 0.5 * du
    return float(e[0]) if size is None else e
