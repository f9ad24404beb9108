import cmath
import math
from fractions import Fraction

import mpmath
import pytest

from mtss.laplace import (
    InversionError,
    _stehfest_weights,
    gaver_stehfest,
    inverse_laplace,
    inversion_cross_check,
    talbot,
)


def _exp_neg_sqrt(s):
    if isinstance(s, complex):
        return cmath.exp(-cmath.sqrt(s))
    if isinstance(s, (mpmath.mpf, mpmath.mpc)):
        return mpmath.exp(-mpmath.sqrt(s))
    return math.exp(-math.sqrt(s))


# (transform, original, rel tol of the order-14 scheme against the original).
# The truncation error of the accelerated Gaver sequence is scale-free for
# power-law originals but grows as the original decays, so each pair carries
# its own honestly attainable tolerance.
PAIRS = [
    (lambda s: 1.0 / s, lambda t: 1.0, 1e-7),
    (lambda s: 1.0 / (s + 1.0), lambda t: math.exp(-t), 2e-4),
    (lambda s: 1.0 / (s + 1.0) ** 2, lambda t: t * math.exp(-t), 2e-4),
    (lambda s: s**-0.5, lambda t: 1.0 / math.sqrt(math.pi * t), 1e-6),
    (
        lambda s: (s + 2.0) ** -0.4,
        lambda t: t**-0.6 * math.exp(-2.0 * t) / math.gamma(0.4),
        2e-4,
    ),
    (
        _exp_neg_sqrt,
        lambda t: t**-1.5 * math.exp(-0.25 / t) / (2.0 * math.sqrt(math.pi)),
        1e-3,
    ),
]


def test_stehfest_weight_identities_exact():
    for order in (8, 14):
        half = order // 2
        exact = []
        for k in range(1, order + 1):
            acc = Fraction(0)
            for j in range((k + 1) // 2, min(k, half) + 1):
                acc += (
                    Fraction(j**half * math.factorial(2 * j))
                    / math.factorial(half - j)
                    / math.factorial(j)
                    / math.factorial(j - 1)
                    / math.factorial(k - j)
                    / math.factorial(2 * j - k)
                )
            exact.append((-1) ** (half + k) * acc)
        assert sum(exact) == 0
        assert sum(v / k for k, v in enumerate(exact, start=1)) == 1
        assert list(_stehfest_weights(order)) == [float(v) for v in exact]


@pytest.mark.parametrize("t", [0.3, 1.0, 4.0])
def test_stehfest_matches_exact_arithmetic(t):
    # float64 evaluation against the same order-14 scheme carried out at 60
    # digits: isolates roundoff from the scheme's own truncation error
    for F, _, _ in PAIRS:
        with mpmath.workdps(60):
            want = float(mpmath.invertlaplace(F, t, method="stehfest", degree=14))
        assert gaver_stehfest(F, t) == pytest.approx(want, rel=1e-4, abs=1e-12)


@pytest.mark.parametrize("t", [0.3, 1.0])
def test_stehfest_recovers_originals(t):
    for F, f, rel in PAIRS:
        assert gaver_stehfest(F, t) == pytest.approx(f(t), rel=rel, abs=1e-12)


def test_stehfest_scale_free_pairs_at_large_t():
    for idx in (0, 3):
        F, f, rel = PAIRS[idx]
        assert gaver_stehfest(F, 4.0) == pytest.approx(f(4.0), rel=rel)


@pytest.mark.parametrize("t", [0.3, 1.0, 4.0])
def test_talbot_recovers_originals(t):
    for F, f, _ in PAIRS:
        assert talbot(F, t) == pytest.approx(f(t), rel=2e-6, abs=1e-12)


def test_against_mpmath_inversion():
    # a transform with no elementary original, refereed at 40 digits
    t = 1.3

    def F(s):
        return (s + 0.5) ** -0.3 / (s + 1.0)

    with mpmath.workdps(40):
        want = float(
            mpmath.invertlaplace(
                lambda s: (s + mpmath.mpf("0.5")) ** mpmath.mpf("-0.3") / (s + 1), t, method="talbot"
            )
        )
    assert gaver_stehfest(F, t) == pytest.approx(want, rel=1e-4)
    assert talbot(F, t) == pytest.approx(want, rel=1e-9)


def test_dispatcher_routes_methods():
    F = PAIRS[3][0]
    t = 0.9
    assert inverse_laplace(F, t, method="stehfest") == gaver_stehfest(F, t)
    assert inverse_laplace(F, t, method="talbot") == talbot(F, t)
    with pytest.raises(ValueError):
        inverse_laplace(F, t, method="weeks")


def test_cross_check_agreement_on_benign_transform():
    # both routes land within 1e-7 of each other here, well inside the gate
    t = 0.9
    val = inversion_cross_check(lambda s: s**-0.5, t)
    assert val == pytest.approx(1.0 / math.sqrt(math.pi * t), rel=1e-6)


def test_cross_check_raises_on_precision_loss():
    # oscillatory original: the real-node scheme cannot track it and the two
    # routes disagree far beyond the acceptance gate
    omega = 25.0

    def F(s):
        return omega / (s * s + omega * omega)

    with pytest.raises(InversionError):
        inversion_cross_check(F, 1.0)
