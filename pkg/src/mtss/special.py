"""Three-parameter (Prabhakar) Mittag-Leffler function.

M^r_{p,q}(z) = sum_{n>=0} (r)_n z^n / (Gamma(p n + q) n!), p > 0.

The series converges for every finite z; what limits a double-precision
evaluation is cancellation for large negative arguments, which is detected and
raised rather than silently returned.  For p = 1 the function is a rescaled
confluent hypergeometric and that identity is used as a fast, stable path.
"""

from __future__ import annotations

import math

from scipy.special import hyp1f1, rgamma

__all__ = ["MittagLefflerPrecisionError", "mittag_leffler_prabhakar"]

_GUARD = 1e13  # max |term| / |sum| before the float result has no digits left


class MittagLefflerPrecisionError(ArithmeticError):
    """Series cancellation exceeds what double precision can represent."""


def mittag_leffler_prabhakar(
    z: float,
    p: float,
    q: float,
    r: float = 1.0,
    rel_tol: float = 1e-15,
    max_terms: int = 20000,
    method: str = "auto",
) -> float:
    """Evaluate M^r_{p,q}(z) for real arguments.

    method="auto" uses the hyp1f1 identity when p == 1 and the defining series
    otherwise; method="series" forces the series (used to cross-check the
    identity path).
    """
    if not (p > 0.0):
        raise ValueError(f"series parameter p must be positive, got {p!r}")
    if method not in ("auto", "series"):
        raise ValueError(f"unknown method {method!r}")
    if r == 0.0:
        # (0)_0 = 1 and (0)_n = 0 for n >= 1: only the n = 0 term survives
        return float(rgamma(q))
    if method == "auto" and p == 1.0 and q > 0.0:
        # M^r_{1,q}(z) = 1F1(r; q; z) / Gamma(q)
        return float(hyp1f1(r, q, z)) * float(rgamma(q))

    total = float(rgamma(q))
    coeff = 1.0  # (r)_n z^n / n!
    largest = abs(total)
    tiny_run = 0
    for n in range(max_terms):
        coeff *= (r + n) * z / (n + 1.0)
        if math.isinf(coeff):
            raise MittagLefflerPrecisionError(
                f"series coefficients overflow for z={z!r}, p={p!r}, q={q!r}, r={r!r}"
            )
        term = coeff * float(rgamma(p * (n + 1) + q))
        total += term
        largest = max(largest, abs(term))
        # stop after the terms are decisively below tolerance three times in a
        # row (the sign pattern need not be alternating for general r)
        if abs(term) <= rel_tol * max(abs(total), 1e-300):
            tiny_run += 1
            if tiny_run >= 3:
                break
        else:
            tiny_run = 0
    else:
        raise MittagLefflerPrecisionError(
            f"series did not converge in {max_terms} terms for z={z!r}, p={p!r}, q={q!r}, r={r!r}"
        )
    if largest > _GUARD * max(abs(total), 1e-300):
        raise MittagLefflerPrecisionError(
            f"catastrophic cancellation: largest term {largest:.3e} vs sum {total:.3e} "
            f"for z={z!r}, p={p!r}, q={q!r}, r={r!r}"
        )
    return total
