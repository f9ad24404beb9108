"""Pure-numpy sampling rounds, stream-compatible with the compiled kernels.

Each round consumes a fixed, known number of doubles from the bit generator:
2m for a stable round (interleaved U, V pairs) and 3m for a tempered round
(interleaved U, V, W triples).  U and V get the half-ulp shift into the open
interval before entering any logarithm; the acceptance variate W does not.
Keeping the consumption layout and the arithmetic order identical to the
compiled kernels makes the two backends interchangeable mid-stream: the same
(seed, stream) yields the same draws up to SIMD-vs-libm rounding (a couple of
ulps on a few percent of values) and, in particular, identical round counts.
"""

from __future__ import annotations

import math

import numpy as np

_OPEN = 2.0**-54  # half the lattice spacing of the 53-bit uniforms


def _kanter(alpha: float, dt: float, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    # one-sided stable increment with Laplace exponent dt * s^alpha
    inv = 1.0 / alpha
    pu = math.pi * u
    lx = (
        math.log(dt) * inv
        + np.log(np.sin(alpha * pu))
        + (inv - 1.0) * np.log(np.sin((1.0 - alpha) * pu))
        - np.log(np.sin(pu)) * inv
        - (inv - 1.0) * np.log(-np.log(v))
    )
    return np.exp(lx)


def stable_round(alpha: float, dt: float, m: int, bit_generator) -> np.ndarray:
    """m stable increments; consumes exactly 2m doubles as (U, V) pairs."""
    raw = np.random.Generator(bit_generator).random(2 * m)
    u = raw[0::2] + _OPEN
    v = raw[1::2] + _OPEN
    return _kanter(alpha, dt, u, v)


def tss_round(alpha: float, lam: float, dt: float, m: int, bit_generator):
    """m tempering proposals; consumes exactly 3m doubles as (U, V, W) triples.

    Returns (x, accepted): the stable proposals and the thinning mask
    W < exp(-lam x).  Requires lam > 0; the untempered case is routed to
    stable_round by the callers so both layouts stay fixed.
    """
    raw = np.random.Generator(bit_generator).random(3 * m)
    u = raw[0::3] + _OPEN
    v = raw[1::3] + _OPEN
    w = raw[2::3]
    x = _kanter(alpha, dt, u, v)
    return x, w < np.exp(-lam * x)
