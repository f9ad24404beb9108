"""Parameterization and exact calculus for mixed tempered stable subordinators.

A mixture is a finite collection of tempered stable components, each carrying a
stability index ``alpha`` in (0, 1), a tempering rate ``lam >= 0`` and a mixing
weight. The subordinator S(t) with these parameters has Laplace transform
``E exp(-s S(t)) = exp(-t phi(s))`` where

    phi(s) = sum_i c_i ((s + lam_i)**alpha_i - lam_i**alpha_i).

Everything in this module is closed-form or quadrature-exact: the exponent
itself (including its continuation to the branch cut on the negative axis),
cumulants and raw moments when all components are tempered, fractional moments
of any order in (0, 1), and the small/large argument asymptotes of the
potential density, the renewal function and the inverse-process moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

__all__ = [
    "ParameterError",
    "BranchCutError",
    "RegimeError",
    "MomentDivergenceError",
    "TemperedComponent",
    "MixtureParams",
    "AsymptoticRegime",
    "AsymptoteDiagnostic",
    "laplace_exponent",
    "mean_rate",
    "cumulant",
    "raw_moment",
    "fractional_moment",
    "asymptotic_fractional_moment",
    "potential_density_asymptote",
    "renewal_asymptote",
    "inverse_moment_asymptote",
    "tss_tail_asymptote",
]

_WEIGHT_TOL = 1e-9


class ParameterError(ValueError):
    """A component or mixture violates its domain constraints."""


class BranchCutError(ValueError):
    """Evaluation on the cut requested without choosing a side."""


class RegimeError(ValueError):
    """Asymptotic regime incompatible with the tempering pattern."""


class MomentDivergenceError(ValueError):
    """Requested moment is infinite for these parameters."""


@dataclass(frozen=True)
class TemperedComponent:
    """One tempered stable component: index ``alpha``, tempering ``lam``, weight."""

    alpha: float
    lam: float
    weight: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ParameterError(
                f"stability index must lie strictly in (0, 1), got alpha={self.alpha!r}"
            )
        if not (self.lam >= 0.0) or math.isinf(self.lam):
            raise ParameterError(f"tempering rate must be finite and >= 0, got lam={self.lam!r}")
        if not (self.weight >= 0.0) or math.isinf(self.weight):
            raise ParameterError(f"weight must be finite and >= 0, got weight={self.weight!r}")


@dataclass(frozen=True)
class MixtureParams:
    """Validated component list; weights must sum to one (never renormalized)."""

    components: tuple[TemperedComponent, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if len(comps) == 0:
            raise ParameterError("mixture needs at least one component")
        total = math.fsum(c.weight for c in comps)
        if abs(total - 1.0) > _WEIGHT_TOL:
            raise ParameterError(f"weights sum to {total:.6f}, expected 1")

    @classmethod
    def from_tuples(cls, triples) -> "MixtureParams":
        """Build from an iterable of (alpha, lam, weight) triples."""
        return cls(tuple(TemperedComponent(a, l, w) for a, l, w in triples))

    @property
    def n_components(self) -> int:
        return len(self.components)

    def active(self) -> tuple[TemperedComponent, ...]:
        """Components with strictly positive weight; zero-weight entries are inert."""
        return tuple(c for c in self.components if c.weight > 0.0)

    def arrays(self):
        """(alphas, lams, weights) over active components, as float arrays."""
        act = self.active()
        return (
            np.array([c.alpha for c in act]),
            np.array([c.lam for c in act]),
            np.array([c.weight for c in act]),
        )

    def as_tuples(self) -> list[tuple[float, float, float]]:
        return [(c.alpha, c.lam, c.weight) for c in self.components]

    def all_tempered(self) -> bool:
        return all(c.lam > 0.0 for c in self.active())

    def any_tempered(self) -> bool:
        return any(c.lam > 0.0 for c in self.active())


# ---------------------------------------------------------------------------
# Laplace exponent


def laplace_exponent(params: MixtureParams, s, branch_side: str | None = None):
    """Evaluate phi(s) = sum_i c_i ((s+lam_i)^alpha_i - lam_i^alpha_i).

    For real ``s`` with ``s + lam_i >= 0`` for every component the value is real
    (and nonnegative for s >= 0).  For real ``s`` that puts some ``s + lam_i``
    on the negative half-line the principal power is discontinuous and a side
    must be chosen: ``branch_side="above"`` evaluates the limit from the upper
    half-plane (arg = +pi), ``"below"`` from the lower (arg = -pi).  Complex
    ``s`` off the real axis uses the principal branch directly and
    ``branch_side`` must be left unset.
    """
    if branch_side not in (None, "above", "below"):
        raise ValueError(f"branch_side must be None, 'above' or 'below', got {branch_side!r}")
    sc = complex(s)
    if sc.imag != 0.0:
        if branch_side is not None:
            raise ValueError("branch_side applies only on the real axis")
        acc = 0j
        for c in params.active():
            acc += c.weight * ((sc + c.lam) ** c.alpha - c.lam**c.alpha)
        return acc

    x = sc.real
    shifts = [(c, x + c.lam) for c in params.active()]
    if all(sh >= 0.0 for _, sh in shifts):
        if branch_side is not None:
            raise ValueError("branch_side applies only below -min(lam_i)")
        return math.fsum(c.weight * (sh**c.alpha - c.lam**c.alpha) for c, sh in shifts)

    if branch_side is None:
        lam_min = min(c.lam for c in params.active())
        raise BranchCutError(
            f"s={x!r} lies on the branch cut (s < {-lam_min!r}); pass branch_side='above' or 'below'"
        )
    sign = 1.0 if branch_side == "above" else -1.0
    acc = 0j
    for c, sh in shifts:
        if sh >= 0.0:
            acc += c.weight * (sh**c.alpha - c.lam**c.alpha)
        else:
            r = (-sh) ** c.alpha
            ang = sign * math.pi * c.alpha
            acc += c.weight * (complex(r * math.cos(ang), r * math.sin(ang)) - c.lam**c.alpha)
    return acc


def _phi_real_grid(params: MixtureParams, s: np.ndarray) -> np.ndarray:
    """Vectorized phi over real s >= 0 (no cut handling)."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    for c in params.active():
        out += c.weight * ((s + c.lam) ** c.alpha - c.lam**c.alpha)
    return out


def _phi_cut_grid(params: MixtureParams, w: np.ndarray) -> np.ndarray:
    """phi(-w + i0) for w >= 0, i.e. the exponent on the upper lip of the cut.

    Components with lam_i >= w stay real; the rest pick up the phase
    exp(i pi alpha_i).  Im phi(-w+i0) >= 0 always.
    """
    w = np.asarray(w, dtype=float)
    out = np.zeros(w.shape, dtype=complex)
    for c in params.active():
        shift = c.lam - w
        pos = np.where(shift > 0.0, shift, 0.0) ** c.alpha
        neg = np.where(shift < 0.0, -shift, 0.0) ** c.alpha
        real = np.where(shift >= 0.0, pos, neg * math.cos(math.pi * c.alpha))
        imag = np.where(shift >= 0.0, 0.0, neg * math.sin(math.pi * c.alpha))
        out += c.weight * (real + 1j * imag - c.lam**c.alpha)
    return out


def _phi_complex_grid(params: MixtureParams, s: np.ndarray) -> np.ndarray:
    """Vectorized principal-branch phi for complex s (right half-plane use)."""
    s = np.asarray(s, dtype=complex)
    out = np.zeros(s.shape, dtype=complex)
    for c in params.active():
        out += c.weight * ((s + c.lam) ** c.alpha - c.lam**c.alpha)
    return out


def mean_rate(params: MixtureParams) -> float:
    """phi'(0+) = sum_i c_i alpha_i lam_i^(alpha_i - 1); infinite when untempered."""
    if not params.all_tempered():
        raise MomentDivergenceError("mean rate diverges: mixture has an untempered component")
    return math.fsum(c.weight * c.alpha * c.lam ** (c.alpha - 1.0) for c in params.active())


# ---------------------------------------------------------------------------
# Cumulants and moments


def cumulant(params: MixtureParams, n: int, t: float) -> float:
    """n-th cumulant of S(t); all cumulants of a tempered mixture are positive.

    k_n = (-1)^(n+1) t sum_i c_i alpha_i (alpha_i - 1) ... (alpha_i - n + 1)
          lam_i^(alpha_i - n).
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ParameterError(f"cumulant order must be an integer >= 1, got {n!r}")
    if not (t > 0.0):
        raise ParameterError(f"time must be positive, got t={t!r}")
    if not params.all_tempered():
        raise MomentDivergenceError("cumulants diverge: mixture has an untempered component")
    total = 0.0
    for c in params.active():
        falling = 1.0
        for j in range(n):
            falling *= c.alpha - j
        total += c.weight * falling * c.lam ** (c.alpha - n)
    return (-1.0) ** (n + 1) * t * total


def raw_moment(params: MixtureParams, n: int, t: float) -> float:
    """E[S(t)^n] assembled from cumulants through partial Bell polynomials.

    Uses the recurrence B(n, m) = sum_j C(n-1, j-1) k_j B(n-j, m-1) and
    E[S^n] = sum_{m=1}^{n} B(n, m).
    """
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ParameterError(f"moment order must be an integer >= 0, got {n!r}")
    if n == 0:
        return 1.0
    kappa = [0.0] + [cumulant(params, j, t) for j in range(1, n + 1)]
    bell = [[0.0] * (n + 1) for _ in range(n + 1)]
    bell[0][0] = 1.0
    for i in range(1, n + 1):
        for m in range(1, i + 1):
            acc = 0.0
            for j in range(1, i - m + 2):
                acc += math.comb(i - 1, j - 1) * kappa[j] * bell[i - j][m - 1]
            bell[i][m] = acc
    return math.fsum(bell[n][m] for m in range(1, n + 1))


def fractional_moment(params: MixtureParams, p: float, t: float) -> float:
    """E[S(t)^p] for p in (0, 1), quadrature-exact.

    Uses E X^p = p / Gamma(1-p) * int_0^inf s^(-p-1) (1 - e^(-t phi(s))) ds.
    For untempered components the moment exists only for p below the smallest
    untempered stability index.
    """
    if not (0.0 < p < 1.0):
        raise ParameterError(f"fractional order must lie in (0, 1), got p={p!r}")
    if not (t > 0.0):
        raise ParameterError(f"time must be positive, got t={t!r}")
    untempered = [c.alpha for c in params.active() if c.lam == 0.0]
    if untempered and p >= min(untempered):
        raise MomentDivergenceError(
            f"E[S^p] diverges for p={p} >= {min(untempered)} (smallest untempered index)"
        )

    def integrand(s):
        return -math.expm1(-t * float(_phi_real_grid(params, np.array([s]))[0])) * s ** (-p - 1.0)

    # Split where t*phi crosses 1: below, the integrand behaves like
    # t*phi(s)*s^(-p-1); above, like s^(-p-1).
    lo, hi = 1.0, 1.0
    while t * laplace_exponent(params, hi) < 1.0 and hi < 1e300:
        hi *= 4.0
    while t * laplace_exponent(params, lo) > 1.0 and lo > 1e-300:
        lo /= 4.0
    s_star = brentq(lambda s: t * laplace_exponent(params, s) - 1.0, lo, hi, rtol=1e-12)

    val1, err1 = quad(integrand, 0.0, s_star, limit=200)
    val2, err2 = quad(integrand, s_star, np.inf, limit=200)
    value = p / math.gamma(1.0 - p) * (val1 + val2)
    if err1 + err2 > 1e-8 * abs(val1 + val2) + 1e-300:
        raise RuntimeError(
            f"fractional moment quadrature did not converge (error estimate {err1 + err2:.3e})"
        )
    return value


def asymptotic_fractional_moment(params: MixtureParams, p: float, t: float) -> float:
    """Large-t asymptote E[S(t)^p] ~ (phi'(0) t)^p, valid for tempered mixtures."""
    if not (0.0 < p < 1.0):
        raise ParameterError(f"fractional order must lie in (0, 1), got p={p!r}")
    if not params.all_tempered():
        raise RegimeError("large-t moment asymptote requires every component tempered")
    return (mean_rate(params) * t) ** p


# ---------------------------------------------------------------------------
# Tauberian asymptotes


class AsymptoticRegime(Enum):
    SMALL_ARGUMENT = "small"
    LARGE_ARGUMENT_TEMPERED = "large-tempered"
    LARGE_ARGUMENT_UNTEMPERED = "large-untempered"


@dataclass(frozen=True)
class AsymptoteDiagnostic:
    """An asymptote value plus the easy-to-confuse variant.

    ``value`` evaluates the Tauberian constant with the stability index that
    actually dominates the requested regime.  ``alternate`` evaluates the same
    expression with the opposite extreme index of the mixture; the two only
    differ in the small-argument regime of a multi-index mixture, where the
    gamma factor is a common source of sign-off errors.  Downstream checks can
    compare both against an independent numerical evaluation.
    """

    value: float
    alternate: float
    dominant_index: float
    alternate_index: float


def _small_argument_front(params: MixtureParams):
    """(alpha_star, c_star, alpha_other): max index, its weight mass, min index."""
    act = params.active()
    a_star = max(c.alpha for c in act)
    c_star = math.fsum(c.weight for c in act if c.alpha == a_star)
    a_min = min(c.alpha for c in act)
    return a_star, c_star, a_min


def _large_untempered_front(params: MixtureParams):
    unt = [c for c in params.active() if c.lam == 0.0]
    if not unt:
        raise RegimeError("large-argument untempered regime requires a lam=0 component")
    a_dag = min(c.alpha for c in unt)
    c_dag = math.fsum(c.weight for c in unt if c.alpha == a_dag)
    return a_dag, c_dag


def _require_tempered(params: MixtureParams):
    if not params.all_tempered():
        raise RegimeError("large-argument tempered regime requires every component tempered")


def potential_density_asymptote(
    params: MixtureParams, x: float, regime: AsymptoticRegime, full: bool = False
):
    """Asymptote of the potential (renewal) density u(x).

    Small x:     u(x) ~ x^(a*-1) / (c* Gamma(a*)),  a* = max alpha.
    Large x, all tempered:    u(x) -> 1 / phi'(0).
    Large x, untempered part: u(x) ~ x^(a-1) / (c Gamma(a)), a = min untempered alpha.
    """
    if not (x > 0.0):
        raise ParameterError(f"x must be positive, got {x!r}")
    if regime is AsymptoticRegime.SMALL_ARGUMENT:
        a_star, c_star, a_min = _small_argument_front(params)
        value = x ** (a_star - 1.0) / (c_star * math.gamma(a_star))
        alternate = x ** (a_star - 1.0) / (c_star * math.gamma(a_min))
        diag = AsymptoteDiagnostic(value, alternate, a_star, a_min)
    elif regime is AsymptoticRegime.LARGE_ARGUMENT_TEMPERED:
        _require_tempered(params)
        value = 1.0 / mean_rate(params)
        diag = AsymptoteDiagnostic(value, value, 1.0, 1.0)
    elif regime is AsymptoticRegime.LARGE_ARGUMENT_UNTEMPERED:
        a_dag, c_dag = _large_untempered_front(params)
        value = x ** (a_dag - 1.0) / (c_dag * math.gamma(a_dag))
        diag = AsymptoteDiagnostic(value, value, a_dag, a_dag)
    else:
        raise ValueError(f"unknown regime {regime!r}")
    return diag if full else diag.value


def renewal_asymptote(
    params: MixtureParams, t: float, regime: AsymptoticRegime, full: bool = False
):
    """Asymptote of the renewal function U(t) = E[E(t)] of the inverse process.

    Small t:     U(t) ~ t^a* / (c* Gamma(1 + a*)).
    Large t, all tempered:    U(t) ~ t / phi'(0).
    Large t, untempered part: U(t) ~ t^a / (c Gamma(1 + a)), a = min untempered alpha.
    """
    if not (t > 0.0):
        raise ParameterError(f"t must be positive, got {t!r}")
    if regime is AsymptoticRegime.SMALL_ARGUMENT:
        a_star, c_star, a_min = _small_argument_front(params)
        value = t**a_star / (c_star * math.gamma(1.0 + a_star))
        alternate = t**a_star / (c_star * math.gamma(1.0 + a_min))
        diag = AsymptoteDiagnostic(value, alternate, a_star, a_min)
    elif regime is AsymptoticRegime.LARGE_ARGUMENT_TEMPERED:
        _require_tempered(params)
        value = t / mean_rate(params)
        diag = AsymptoteDiagnostic(value, value, 1.0, 1.0)
    elif regime is AsymptoticRegime.LARGE_ARGUMENT_UNTEMPERED:
        a_dag, c_dag = _large_untempered_front(params)
        value = t**a_dag / (c_dag * math.gamma(1.0 + a_dag))
        diag = AsymptoteDiagnostic(value, value, a_dag, a_dag)
    else:
        raise ValueError(f"unknown regime {regime!r}")
    return diag if full else diag.value


def inverse_moment_asymptote(
    params: MixtureParams, q: float, t: float, regime: AsymptoticRegime, full: bool = False
):
    """Asymptote of E[E(t)^q] for the inverse subordinator, q > 0.

    Small t:     Gamma(1+q) t^(q a*) / (c*^q Gamma(1 + q a*)).
    Large t, all tempered:    (t / phi'(0))^q.
    Large t, untempered part: Gamma(1+q) t^(q a) / (c^q Gamma(1 + q a)).
    """
    if not (q > 0.0):
        raise ParameterError(f"moment order must be positive, got q={q!r}")
    if not (t > 0.0):
        raise ParameterError(f"t must be positive, got {t!r}")
    if regime is AsymptoticRegime.SMALL_ARGUMENT:
        a_star, c_star, a_min = _small_argument_front(params)
        value = math.gamma(1.0 + q) * t ** (q * a_star) / (c_star**q * math.gamma(1.0 + q * a_star))
        alternate = (
            math.gamma(1.0 + q) * t ** (q * a_star) / (c_star**q * math.gamma(1.0 + q * a_min))
        )
        diag = AsymptoteDiagnostic(value, alternate, a_star, a_min)
    elif regime is AsymptoticRegime.LARGE_ARGUMENT_TEMPERED:
        _require_tempered(params)
        value = (t / mean_rate(params)) ** q
        diag = AsymptoteDiagnostic(value, value, 1.0, 1.0)
    elif regime is AsymptoticRegime.LARGE_ARGUMENT_UNTEMPERED:
        a_dag, c_dag = _large_untempered_front(params)
        value = math.gamma(1.0 + q) * t ** (q * a_dag) / (c_dag**q * math.gamma(1.0 + q * a_dag))
        diag = AsymptoteDiagnostic(value, value, a_dag, a_dag)
    else:
        raise ValueError(f"unknown regime {regime!r}")
    return diag if full else diag.value


def tss_tail_asymptote(alpha: float, lam: float, x: float, t: float) -> float:
    """Deep-tail envelope t e^(lam^alpha t - lam x) x^(-alpha) / Gamma(1-alpha).

    The prefactor equals (t/(alpha pi)) Gamma(1+alpha) sin(pi alpha)
    e^(lam^alpha t) by the reflection formula.  At lam = 0 this is the exact
    survival asymptote of the stable marginal, P(S(t) > x) ~ t x^(-alpha) /
    Gamma(1-alpha).  For lam > 0 the pointwise-tilted form returned here
    overstates the true survival: Watson's lemma applied to the tilted stable
    tail gives P(S(t) > x) = (alpha/(lam x)) times this value, up to a factor
    1 + O(1/(lam x)).  Callers needing calibrated tail probabilities should
    integrate the density; this closed form gives the decay shape and is a
    convenient upper envelope for regime checks.
    """
    comp = TemperedComponent(alpha, lam, 1.0)  # reuse the domain checks
    if not (x > 0.0) or not (t > 0.0):
        raise ParameterError("x and t must be positive")
    return (
        t
        * math.exp(comp.lam**comp.alpha * t - comp.lam * x)
        * x ** (-comp.alpha)
        / math.gamma(1.0 - comp.alpha)
    )
