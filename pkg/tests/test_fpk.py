import json
import math

import numpy as np
import pytest
from scipy.special import gamma
from scipy.stats import poisson

from mtss.core import MixtureParams, ParameterError, cumulant, laplace_exponent
from mtss.density import QuadratureError, renewal_numeric
from mtss.fpk import (
    GridFunction,
    GridResolutionError,
    PmfVector,
    TruncationError,
    fpk_residual_imtss,
    fpk_residual_mtss,
    fpk_verification_report,
    imtss_source_terms,
    imtss_transform_identity,
    mtss_transform_identity,
    pgf_mtsfpp,
    pmf_mtsfpp,
    pmf_mttfpp,
    pmf_ode_residual_mtsfpp,
    shifted_fractional_derivative,
    tempering_halfrate_condition,
    tcbm_transform_check,
)
from mtss.simulate import sample_inverse_terminal, sample_poisson_mixture

MIX = MixtureParams.from_tuples([(0.6, 1.0, 0.5), (0.9, 2.0, 0.5)])
LOWA = MixtureParams.from_tuples([(0.45, 1.0, 0.5), (0.3, 2.0, 0.5)])
STABLE = MixtureParams.from_tuples([(0.5, 0.0, 1.0)])
SINGLE = MixtureParams.from_tuples([(0.6, 1.5, 1.0)])


def slopes(norms):
    return [math.log2(a / b) for a, b in zip(norms, norms[1:])]


# ---------------------------------------------------------------------------
# shifted fractional derivative: closed-form oracles


@pytest.mark.parametrize("alpha,p", [(0.5, 2.0), (0.7, 3.0), (0.3, 1.5)])
def test_derivative_power_function_oracle(alpha, p):
    # D^a x^p = Gamma(p+1)/Gamma(p+1-a) x^(p-a), first order in h
    h = 1e-3
    x = h * np.arange(2001)
    out = shifted_fractional_derivative(GridFunction(h, x**p), 0.0, alpha).values
    want = gamma(p + 1.0) / gamma(p + 1.0 - alpha) * x ** (p - alpha)
    k = x >= 0.5
    assert np.max(np.abs(out[k] - want[k]) / want[k]) < 1e-2


def test_derivative_alpha_one_is_backward_difference():
    h = 0.1
    vals = np.array([0.0, 1.0, 3.0, 2.5, 4.0, 1.0])
    out = shifted_fractional_derivative(GridFunction(h, vals), 0.0, 1.0).values
    want = np.diff(np.concatenate(([0.0], vals))) / h
    np.testing.assert_allclose(out, want, rtol=0, atol=1e-13)


def test_derivative_tempered_exponential_identity():
    # (lam + D)^a e^(-lam x) = e^(-lam x) x^(-a) / Gamma(1-a)
    lam, alpha, h = 1.5, 0.6, 1e-3
    x = h * np.arange(3001)
    out = shifted_fractional_derivative(GridFunction(h, np.exp(-lam * x)), lam, alpha).values
    want = np.exp(-lam * x[1:]) * x[1:] ** (-alpha) / gamma(1.0 - alpha)
    k = x[1:] >= 0.05
    assert np.max(np.abs(out[1:][k] - want[k]) / want[k]) < 1e-2


def test_derivative_matches_laplace_symbol():
    # f = x e^(-bx) vanishes at the terminal, so the operator's transform is
    # (lam + s)^a / (s + b)^2 with no boundary term
    lam, alpha, b, h = 0.7, 0.6, 1.0, 1e-3
    x = h * np.arange(12001)
    out = shifted_fractional_derivative(GridFunction(h, x * np.exp(-b * x)), lam, alpha).values
    for s in (1.0, 2.0):
        got = np.trapezoid(np.exp(-s * x) * out, dx=h)
        want = (lam + s) ** alpha / (s + b) ** 2
        assert abs(got - want) / want < 1e-2


def test_derivative_linearity():
    gen = np.random.default_rng(3)
    h = 0.01
    f = gen.standard_normal(64)
    g = gen.standard_normal(64)
    a, b = 1.7, -0.4
    lhs = shifted_fractional_derivative(GridFunction(h, a * f + b * g), 1.0, 0.6).values
    rhs = a * shifted_fractional_derivative(GridFunction(h, f), 1.0, 0.6).values + (
        b * shifted_fractional_derivative(GridFunction(h, g), 1.0, 0.6).values
    )
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-10)


def test_derivative_resolution_guard():
    # an 8-cycle sine on h = 0.05 is badly underresolved; the coarse-grid
    # comparison must notice, while a smooth function on h = 1e-3 sails through
    xr = 0.05 * np.arange(41)
    with pytest.raises(GridResolutionError):
        shifted_fractional_derivative(GridFunction(0.05, np.sin(8.0 * xr)), 0.5, 0.6, check_tol=1e-3)
    xs = 1e-3 * np.arange(2001)
    shifted_fractional_derivative(GridFunction(1e-3, xs**2 * np.exp(-xs)), 0.5, 0.6, check_tol=0.05)


def test_derivative_validation():
    f = GridFunction(0.1, np.ones(8))
    with pytest.raises(ParameterError):
        shifted_fractional_derivative(f, 0.5, 0.0)
    with pytest.raises(ParameterError):
        shifted_fractional_derivative(f, 0.5, 1.2)
    with pytest.raises(ParameterError):
        shifted_fractional_derivative(f, -1.0, 0.5)
    with pytest.raises(ParameterError):
        shifted_fractional_derivative(GridFunction(0.1, np.ones(8), x0=0.3), 0.5, 0.5)
    with pytest.raises(ParameterError):
        GridFunction(0.0, np.ones(8))
    with pytest.raises(ParameterError):
        GridFunction(0.1, np.ones(3))


# ---------------------------------------------------------------------------
# governing-equation residuals, forward process


def test_fpk_residual_mtss_refines_at_first_order():
    # window fixed in physical x across levels; three halvings
    mx = []
    h = 1.0 / 128.0
    for _ in range(3):
        rep = fpk_residual_mtss(LOWA, 1.0, h, int(round(2.0 / h)), window_lo=3.0 / 128.0)
        assert rep.meta["flagged_cells"] == 0
        mx.append(rep.max_norm)
        h /= 2.0
    assert all(s >= 0.8 for s in slopes(mx))
    # each halving cuts the max-norm by at least 1.5x
    assert all(a / b >= 1.5 for a, b in zip(mx, mx[1:]))


def test_fpk_residual_mtss_stable_component():
    mx = []
    h = 1.0 / 128.0
    for _ in range(3):
        rep = fpk_residual_mtss(STABLE, 1.0, h, int(round(2.0 / h)), window_lo=3.0 / 128.0)
        mx.append(rep.max_norm)
        h /= 2.0
    assert all(s >= 0.8 for s in slopes(mx))


def test_mtss_transform_identity_tight():
    assert mtss_transform_identity(MIX, 1.0) < 1e-8
    assert mtss_transform_identity(LOWA, 1.0) < 1e-8
    assert mtss_transform_identity(MIX, 0.7, s_values=[0.5, 2.0]) < 1e-8


# ---------------------------------------------------------------------------
# governing-equation residuals, inverse process


def test_fpk_residual_imtss_refines_in_time():
    mx = []
    n_t = 64
    for _ in range(3):
        rep = fpk_residual_imtss(LOWA, 1.0, 1.0 / 128.0, 96, n_t, window_lo=0.1)
        assert rep.meta["flagged_cells"] == 0
        mx.append(rep.max_norm)
        n_t *= 2
    assert all(s >= 0.8 for s in slopes(mx))


def test_fpk_residual_imtss_single_component():
    mx = []
    n_t = 64
    for _ in range(3):
        rep = fpk_residual_imtss(SINGLE, 1.0, 1.0 / 128.0, 96, n_t, window_lo=0.1)
        mx.append(rep.max_norm)
        n_t *= 2
    assert all(a / b >= 1.5 for a, b in zip(mx, mx[1:]))


def test_imtss_source_terms_closed_form():
    # the Prabhakar factor collapses: t^(-a) M^(1-a)_{1,1-a}(-lam t) = e^(-lam t) t^(-a) / Gamma(1-a)
    t = 0.8
    got = imtss_source_terms(SINGLE, t)
    want = math.exp(-1.5 * t) * t ** (-0.6) / gamma(0.4)
    assert got == pytest.approx([want], rel=1e-12)
    got0 = imtss_source_terms(STABLE, t)
    assert got0 == pytest.approx([t ** (-0.5) / gamma(0.5)], rel=1e-12)


def test_imtss_transform_identity_tight():
    assert imtss_transform_identity(MIX, 0.5) < 1e-8


# ---------------------------------------------------------------------------
# counts on the forward clock: PGF and PMF


def test_pgf_boundary_values():
    assert pgf_mtsfpp(MIX, 0.4, 1.0, 1.0) == pytest.approx(1.0, abs=1e-14)
    want = math.exp(-1.0 * laplace_exponent(MIX, 0.4))
    assert pgf_mtsfpp(MIX, 0.4, 0.0, 1.0) == pytest.approx(want, rel=1e-14)


def test_pgf_stable_closed_form():
    # single untempered component: exp(-t c mu^a (1-z)^a)
    mu, t, z = 0.7, 1.3, 0.3
    want = math.exp(-t * (mu * (1.0 - z)) ** 0.5)
    assert pgf_mtsfpp(STABLE, mu, z, t) == pytest.approx(want, rel=1e-14)


def test_pgf_array_shape_and_domain():
    z = np.array([[0.0, 0.5], [0.9, 1.0]])
    out = pgf_mtsfpp(MIX, 0.4, z, 1.0)
    assert out.shape == z.shape
    assert np.all(np.diff(out.ravel()) > 0)  # PGF increases in z
    with pytest.raises(ParameterError):
        pgf_mtsfpp(MIX, 0.4, 1.2, 1.0)
    with pytest.raises(ParameterError):
        pgf_mtsfpp(MIX, 0.0, 0.5, 1.0)
    with pytest.raises(ParameterError):
        pgf_mtsfpp(MIX, 0.4, 0.5, 0.0)


def test_pgf_zero_count_matches_monte_carlo():
    gen = np.random.default_rng(2024)
    x = sample_poisson_mixture(MIX, 0.4, 1.0, gen, size=1_000_000)
    p0 = pgf_mtsfpp(MIX, 0.4, 0.0, 1.0)
    se = math.sqrt(p0 * (1.0 - p0) / 1_000_000)
    assert abs(float(np.mean(x == 0)) - p0) < 3.0 * se


def test_pmf_normalizes_and_matches_mean():
    pv = pmf_mtsfpp(MIX, 0.4, 1.0)
    assert pv.defect < 1e-8
    assert pv.clipped < 1e-12
    want_mean = 0.4 * cumulant(MIX, 1, 1.0)
    assert pv.mean() == pytest.approx(want_mean, rel=1e-6)


def test_pmf_pgf_duality():
    pv = pmf_mtsfpp(MIX, 0.4, 1.0)
    ks = np.arange(pv.p.size)
    for z in (0.3, 0.7, 1.0):
        total = float(np.sum(pv.p * z**ks))
        assert abs(total - pgf_mtsfpp(MIX, 0.4, z, 1.0)) < 1e-7


def test_pmf_zero_entry_closed_form():
    pv = pmf_mtsfpp(MIX, 0.4, 1.0)
    assert pv.p[0] == pytest.approx(math.exp(-laplace_exponent(MIX, 0.4)), rel=1e-12)


def test_pmf_degenerate_clock_is_poisson():
    # huge tempering freezes the clock near its mean, so counts approach
    # Poisson(mu * k1(t))
    pdg = MixtureParams.from_tuples([(0.6, 400.0, 1.0)])
    pv = pmf_mtsfpp(pdg, 0.7, 1.0)
    ref = poisson.pmf(np.arange(pv.p.size), 0.7 * cumulant(pdg, 1, 1.0))
    mask = ref > 1e-12
    chi2 = float(np.sum((pv.p[mask] - ref[mask]) ** 2 / ref[mask]))
    tv = 0.5 * float(np.sum(np.abs(pv.p - ref))) + 0.5 * pv.defect
    assert chi2 < 1e-5
    assert tv < 2e-4


def test_pmf_untempered_needs_matched_defect():
    # polynomial count tail: the default 1e-8 target is unreachable
    with pytest.raises(TruncationError):
        pmf_mtsfpp(STABLE, 0.7, 1.0)
    pv = pmf_mtsfpp(STABLE, 0.7, 1.0, target_defect=1e-3)
    assert 0.0 < pv.defect < 1e-3


def test_pmf_vector_validation():
    with pytest.raises(ParameterError):
        PmfVector(np.array([0.5, -0.1]), 0.6)
    with pytest.raises(ParameterError):
        PmfVector(np.array([0.5, 0.3]), -0.1)
    with pytest.raises(ParameterError):
        PmfVector(np.array([0.5, 0.3]), 0.1)  # mass accounting off by 0.1


def test_halfrate_condition_reporting():
    rep = tempering_halfrate_condition(MIX, 0.4)
    assert rep["halfrate_ok"] is True
    rep = tempering_halfrate_condition(MIX, 0.8)
    assert rep["halfrate_ok"] is False  # 0.8 > 1.0 / 2


# ---------------------------------------------------------------------------
# governing ODE residual for the count PMF


def test_pmf_ode_residual_small():
    rep = pmf_ode_residual_mtsfpp(MIX, 0.4, 1.0, K=20)
    assert rep.route == "binomial"
    assert np.max(np.abs(rep.residual)) < 1e-4
    # far below tolerance in practice; catch silent degradation
    assert np.max(np.abs(rep.residual)) < 1e-9


def test_pmf_ode_residual_routes_agree():
    rb = pmf_ode_residual_mtsfpp(MIX, 0.4, 1.0, K=20, method="binomial")
    rp = pmf_ode_residual_mtsfpp(MIX, 0.4, 1.0, K=20, method="pgf")
    np.testing.assert_allclose(rb.residual, rp.residual, rtol=0, atol=1e-10)


def test_pmf_ode_residual_untempered_via_pgf():
    # lam = 0 collapses the symbol to the space-fractional generator, which
    # only the pgf route can evaluate (binomial needs mu < lam)
    rep = pmf_ode_residual_mtsfpp(STABLE, 0.7, 1.0, K=20)
    assert rep.route == "pgf"
    assert np.max(np.abs(rep.residual)) < 1e-5
    with pytest.raises(ParameterError):
        pmf_ode_residual_mtsfpp(STABLE, 0.7, 1.0, K=10, method="binomial")


def test_pmf_ode_residual_unknown_method():
    with pytest.raises(ValueError):
        pmf_ode_residual_mtsfpp(MIX, 0.4, 1.0, K=5, method="simpson")


# ---------------------------------------------------------------------------
# counts on the inverse clock


def test_mttfpp_normalizes_and_matches_mean():
    pv = pmf_mttfpp(MIX, 0.4, 1.5)
    assert pv.defect <= 1e-6
    want_mean = 0.4 * renewal_numeric(MIX, 1.5)
    assert pv.mean() == pytest.approx(want_mean, rel=1e-2)
    assert pv.mean() == pytest.approx(want_mean, rel=1e-8)  # regression band


def test_mttfpp_zero_count_matches_monte_carlo():
    # p_0 = E exp(-mu E(t)), estimated from exact inverse-clock draws
    mu, t = 0.4, 1.5
    pv = pmf_mttfpp(MIX, mu, t)
    gen = np.random.default_rng(11)
    e = sample_inverse_terminal(MIX, t, gen, du=0.005, size=60000)
    w = np.exp(-mu * e)
    se = float(w.std(ddof=1)) / math.sqrt(w.size)
    assert abs(pv.p[0] - float(w.mean())) < 3.0 * se


def test_mttfpp_mc_route():
    gen = np.random.default_rng(5)
    pv = pmf_mttfpp(MIX, 0.4, 1.5, K=40, method="mc", gen=gen, du=0.01, n_mc=20000, target_defect=1e-4)
    ref = pmf_mttfpp(MIX, 0.4, 1.5)
    assert pv.defect <= 1e-4
    assert abs(pv.p[0] - ref.p[0]) < 2e-3
    with pytest.raises(ParameterError):
        pmf_mttfpp(MIX, 0.4, 1.5, method="mc")  # no generator, no du


def test_mttfpp_explicit_k_too_small():
    with pytest.raises(TruncationError):
        pmf_mttfpp(MIX, 0.4, 1.5, K=2)


def test_mttfpp_contour_guard_far_horizon():
    # at very large t the contour shrinks until |mu/(mu+phi)| reaches 1
    with pytest.raises(QuadratureError):
        pmf_mttfpp(MIX, 0.3, 150.0, K=200, target_defect=1.0)


def test_mttfpp_unknown_method():
    with pytest.raises(ValueError):
        pmf_mttfpp(MIX, 0.4, 1.5, K=10, method="series")


# ---------------------------------------------------------------------------
# Brownian motion on either clock


def test_tcbm_mixture_clock():
    gen = np.random.default_rng(2024)
    rep = tcbm_transform_check(MIX, 1.3, clock="mixture", gen=gen, n_mc=100000)
    assert rep["mass_at_zero"] == pytest.approx(1.0, abs=1e-14)
    assert rep["identity_ok"]
    assert rep["variance"]["expected"] == pytest.approx(cumulant(MIX, 1, 1.3), rel=1e-14)
    assert abs(rep["variance"]["z_score"]) < 3.0


def test_tcbm_inverse_clock():
    gen = np.random.default_rng(2025)
    rep = tcbm_transform_check(MIX, 1.3, clock="inverse", gen=gen, n_mc=30000, du=0.01)
    assert rep["identity_ok"]
    assert rep["variance"]["expected"] == pytest.approx(renewal_numeric(MIX, 1.3), rel=1e-14)
    assert abs(rep["variance"]["z_score"]) < 3.0


def test_tcbm_unknown_clock():
    with pytest.raises(ValueError):
        tcbm_transform_check(MIX, 1.0, clock="gamma")


# ---------------------------------------------------------------------------
# assembled verification report


def test_verification_report_passes_and_serializes():
    rep = fpk_verification_report(LOWA)
    json.dumps(rep)  # must be JSON-clean as produced
    assert [r["check_name"] for r in rep] == ["fpk-mtss", "fpk-imtss"]
    for r in rep:
        assert r["pass"] is True
        assert len(r["norms"]["max"]) == 3
        assert len(r["refinement_slopes"]) == 2
        assert all(s >= 0.8 for s in r["refinement_slopes"])
        assert r["transform_identity_error"] < 1e-8
