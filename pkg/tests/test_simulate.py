"""Sampler tests: determinism, backend equivalence, and distributional checks.

Statistical assertions use fixed seeds, so they are deterministic regressions
rather than flaky coin flips; bands are 4-5 standard errors wide at the pinned
seed unless noted.
"""

import math
import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.integrate
import scipy.stats

from mtss.core import (
    MixtureParams,
    ParameterError,
    RegimeError,
    cumulant,
)
from mtss.density import pdf_tss, renewal_numeric
from mtss.simulate import (
    BACKEND,
    CountingPath,
    RngConfig,
    SamplePath,
    SimulationError,
    mixture_increment,
    sample_brownian,
    sample_inverse_path,
    sample_inverse_terminal,
    sample_path,
    sample_poisson_inverse,
    sample_poisson_mixture,
    sample_poisson_mixture_path,
    sample_terminal,
    stable_increment,
    tempered_increment,
)
from mtss.simulate import _fallback

MIX = MixtureParams.from_tuples([(0.6, 1.0, 0.5), (0.9, 2.0, 0.5)])


def _gen(seed=11, stream=0, substreams=8):
    return RngConfig(seed=seed, substream_count=substreams).generator(stream)


# ---------------------------------------------------------------------------
# RNG configuration


def test_rng_config_validation():
    with pytest.raises(ParameterError):
        RngConfig(seed=-1)
    with pytest.raises(ParameterError):
        RngConfig(seed=2**64)
    with pytest.raises(ParameterError):
        RngConfig(seed=3, substream_count=0)
    cfg = RngConfig(seed=3, substream_count=4)
    with pytest.raises(ParameterError):
        cfg.bit_generator(4)
    cfg.bit_generator(3)


def test_same_seed_same_stream_reproduces():
    a = sample_terminal(MIX, 1.2, _gen(seed=42), size=500)
    b = sample_terminal(MIX, 1.2, _gen(seed=42), size=500)
    assert np.array_equal(a, b)


def test_streams_and_seeds_decorrelate():
    base = sample_terminal(MIX, 1.2, _gen(seed=42, stream=0), size=500)
    other_stream = sample_terminal(MIX, 1.2, _gen(seed=42, stream=1), size=500)
    other_seed = sample_terminal(MIX, 1.2, _gen(seed=43, stream=0), size=500)
    assert not np.array_equal(base, other_stream)
    assert not np.array_equal(base, other_seed)


def test_substream_merge_matches_sequential():
    # Worker k draws its block from substream k; merging blocks by stream
    # index must be independent of scheduling, i.e. equal to the serial loop.
    cfg = RngConfig(seed=7, substream_count=4)
    serial = [sample_terminal(MIX, 0.9, cfg.generator(k), size=200) for k in range(4)]
    shuffled = {k: sample_terminal(MIX, 0.9, cfg.generator(k), size=200)
                for k in (2, 0, 3, 1)}
    merged = [shuffled[k] for k in range(4)]
    for a, b in zip(serial, merged):
        assert np.array_equal(a, b)


def test_stable_round_stream_consumption():
    # the primitive consumes exactly 2m doubles, so the generator state
    # afterwards matches a reference advanced by the same amount
    cfg = RngConfig(seed=5)
    bg = cfg.bit_generator(0)
    _fallback.stable_round(0.6, 0.5, 37, bg)
    tail = np.random.Generator(bg).random(8)
    ref = np.random.Generator(cfg.bit_generator(0))
    ref.random(2 * 37)
    assert np.array_equal(tail, ref.random(8))


def test_tss_round_stream_consumption():
    cfg = RngConfig(seed=5)
    bg = cfg.bit_generator(0)
    _fallback.tss_round(0.6, 1.5, 0.5, 41, bg)
    tail = np.random.Generator(bg).random(8)
    ref = np.random.Generator(cfg.bit_generator(0))
    ref.random(3 * 41)
    assert np.array_equal(tail, ref.random(8))


# ---------------------------------------------------------------------------
# backend equivalence


def test_backend_reports_mode():
    assert BACKEND in ("compiled", "fallback")


def test_forced_fallback_env(tmp_path):
    code = "from mtss.simulate import BACKEND; print(BACKEND)"
    env = dict(os.environ, MTSS_FORCE_FALLBACK="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "fallback"


class TestCompiledMatchesFallback:
    """Both backends consume the identical bit stream and apply the same
    formula term for term.  Values may differ by libm-vs-SIMD rounding; the
    spread is amplified near the u -> 1 and v -> 1 endpoints where sin(pi u)
    and log(v) are evaluated near a zero, so equality is asserted at
    rtol 1e-9 (measured worst case ~6e-11) while acceptance masks must be
    bitwise identical.
    """

    kernels = pytest.importorskip("mtss.simulate._kernels")

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.9])
    def test_stable_round_values(self, alpha):
        cfg = RngConfig(seed=2024)
        x_c = self.kernels.stable_round(alpha, 0.7, 100000, cfg.bit_generator(0))
        x_f = _fallback.stable_round(alpha, 0.7, 100000, cfg.bit_generator(0))
        assert np.allclose(x_c, x_f, rtol=1e-9, atol=0.0)
        assert np.mean(x_c == x_f) > 0.05  # large bitwise-equal fraction

    @pytest.mark.parametrize("alpha,lam", [(0.5, 1.0), (0.9, 2.0), (0.6, 0.3)])
    def test_tss_round_values_and_masks(self, alpha, lam):
        cfg = RngConfig(seed=77)
        x_c, a_c = self.kernels.tss_round(alpha, lam, 0.7, 100000, cfg.bit_generator(0))
        x_f, a_f = _fallback.tss_round(alpha, lam, 0.7, 100000, cfg.bit_generator(0))
        assert np.allclose(x_c, x_f, rtol=1e-9, atol=0.0)
        assert np.array_equal(a_c, a_f)
        # acceptance probability is exp(-lam^alpha dt)
        p = math.exp(-lam**alpha * 0.7)
        se = math.sqrt(p * (1 - p) / 100000)
        assert abs(a_c.mean() - p) < 5 * se


def test_zero_tempering_routes_to_stable():
    # lam=0 must reuse the stable primitive, draw for draw
    a = tempered_increment(_gen(seed=9), 0.7, 0.0, 0.4, size=256)
    b = stable_increment(_gen(seed=9), 0.7, 0.4, size=256)
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# parameter guards


def test_increment_validation():
    g = _gen()
    for bad in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(ParameterError):
            stable_increment(g, bad, 1.0)
    with pytest.raises(ParameterError):
        stable_increment(g, 0.5, 0.0)
    with pytest.raises(ParameterError):
        tempered_increment(g, 0.5, -1.0, 1.0)


def test_heavy_tempering_regime_guard():
    # lam^alpha * dt = 20 * 2 > 30: one-shot rejection is hopeless
    with pytest.raises(RegimeError):
        tempered_increment(_gen(), 0.5, 400.0, 2.0)


def test_round_budget_exhaustion():
    with pytest.raises(SimulationError):
        tempered_increment(_gen(seed=1), 0.5, 1.0, 1.0, size=400, max_rounds=1)


def test_terminal_auto_subdivision():
    # lam^alpha * t = 4^0.9 * 30 > 100 forces internal time splitting;
    # the sum of subdivided increments is still the exact law
    params = MixtureParams.from_tuples([(0.9, 4.0, 1.0)])
    x = sample_terminal(params, 30.0, _gen(seed=31), size=2000)
    k1 = cumulant(params, 1, 30.0)
    k2 = cumulant(params, 2, 30.0)
    assert abs(x.mean() - k1) < 4.5 * math.sqrt(k2 / 2000)


# ---------------------------------------------------------------------------
# distributional checks


def test_stable_increment_matches_levy_law():
    # alpha = 1/2 subordinator at time t is Levy(scale = t^2/2)
    t = 0.8
    x = stable_increment(_gen(seed=13), 0.5, t, size=200000)
    stat = scipy.stats.kstest(x, scipy.stats.levy(scale=t * t / 2).cdf)
    assert stat.pvalue > 1e-3


def test_tempered_acceptance_rate():
    cfg = RngConfig(seed=99)
    _, acc = _fallback.tss_round(0.5, 1.0, 1.0, 10**6, cfg.bit_generator(0))
    assert abs(acc.mean() - math.exp(-1.0)) < 2e-3


def test_tempered_tail_probability():
    # MC tail mass beyond x=5 against the integrated density
    alpha, lam, t = 0.7, 1.0, 1.0
    oracle, err = scipy.integrate.quad(lambda y: pdf_tss(alpha, lam, y, t), 5.0, 80.0)
    assert err < 1e-6 * oracle
    n = 4 * 10**6
    x = tempered_increment(_gen(seed=1234), alpha, lam, t, size=n)
    p_hat = np.mean(x > 5.0)
    se = math.sqrt(oracle * (1 - oracle) / n)
    assert abs(p_hat - oracle) < 5 * se
    # the closed-form envelope needs its alpha/(lam x) correction before it
    # can be compared to a tail mass; that calibration is pinned in the
    # density tests, so here the integrated pdf is the only oracle


def test_terminal_moments_match_cumulants():
    n, t = 10**5, 1.3
    x = sample_terminal(MIX, t, _gen(seed=2718), size=n)
    k1, k2, k4 = (cumulant(MIX, j, t) for j in (1, 2, 4))
    se_mean = math.sqrt(k2 / n)
    assert abs(x.mean() - k1) < 4 * se_mean
    var = x.var(ddof=1)
    se_var = math.sqrt((k4 + 2 * k2**2) / n)
    assert abs(var - k2) < 4 * se_var


def test_inverse_terminal_mean_matches_renewal():
    t = 2.0
    u_t = renewal_numeric(MIX, t)
    du = 0.01 * u_t
    n = 20000
    e = sample_inverse_terminal(MIX, t, _gen(seed=555), du, size=n)
    se = e.std(ddof=1) / math.sqrt(n)
    assert abs(e.mean() - u_t) < 4 * se + du * du
    # raw grid estimates overshoot by at most one cell
    assert np.all(e > 0)


def test_inverse_terminal_midpoint_bias_direction():
    # without the midpoint correction the estimator overshoots by ~du/2
    t, du, n = 2.0, 0.05, 8000
    raw = sample_inverse_terminal(MIX, t, _gen(seed=808), du, size=n, midpoint=False)
    mid = sample_inverse_terminal(MIX, t, _gen(seed=808), du, size=n, midpoint=True)
    assert np.allclose(raw - mid, du / 2)


# ---------------------------------------------------------------------------
# path containers


def test_sample_path_is_monotone():
    times = np.linspace(0.0, 3.0, 25)
    p = sample_path(MIX, times, _gen(seed=21))
    assert isinstance(p, SamplePath)
    assert p.value[0] == 0.0
    assert np.all(np.diff(p.value) >= 0)
    assert np.array_equal(p.t, times)


def test_sample_path_increment_law():
    # increments over disjoint windows at matched clocks agree with the
    # terminal law: S(t2) - S(t1) ~ S(t2 - t1)
    times = np.array([0.0, 0.7, 1.9])
    n = 30000
    inc = np.empty(n)
    gen = _gen(seed=4040)
    for i in range(n):
        inc[i] = mixture_increment(MIX, 1.2, gen)
    k1 = cumulant(MIX, 1, 1.2)
    k2 = cumulant(MIX, 2, 1.2)
    assert abs(inc.mean() - k1) < 4 * math.sqrt(k2 / n)


def test_inverse_path_nondecreasing_and_grid_valued():
    times = np.linspace(0.25, 3.0, 12)
    du = 0.02
    p = sample_inverse_path(MIX, times, _gen(seed=66), du)
    assert np.all(np.diff(p.value) >= 0)
    # midpoint-corrected values sit on the half-offset grid
    k = (p.value + du / 2) / du
    assert np.allclose(k, np.round(k))


def test_path_validation():
    with pytest.raises(ParameterError):
        SamplePath(t=np.array([0.0, 1.0]), value=np.array([1.0]))
    with pytest.raises(ParameterError):
        SamplePath(t=np.array([1.0, 0.5]), value=np.array([0.0, 1.0]))
    with pytest.raises(ParameterError):
        SamplePath(t=np.array([0.0, 1.0]), value=np.array([1.0, 0.5]))
    with pytest.raises(ParameterError):
        CountingPath(t=np.array([0.0, 1.0]), value=np.array([0.0, 1.0]))
    CountingPath(t=np.array([0.0, 1.0]), value=np.array([0, 3]))


def test_path_csv_roundtrip(tmp_path):
    p = SamplePath(t=np.array([0.0, 0.5, 2.0]), value=np.array([0.0, 0.25, 1.75]))
    out = tmp_path / "path.csv"
    p.to_csv(out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,value"
    back = np.loadtxt(lines[1:], delimiter=",")
    assert np.array_equal(back[:, 0], p.t)
    assert np.array_equal(back[:, 1], p.value)


def test_path_time_grid_validation():
    g = _gen()
    with pytest.raises(ParameterError):
        sample_path(MIX, np.array([0.0, 0.0, 1.0]), g)
    with pytest.raises(ParameterError):
        sample_inverse_path(MIX, np.array([0.0, 1.0]), g, 0.01)


# ---------------------------------------------------------------------------
# derived processes


def test_poisson_mixture_mean():
    mu, t, n = 0.4, 1.5, 60000
    k = sample_poisson_mixture(MIX, mu, t, _gen(seed=3333), size=n)
    assert k.dtype.kind in "iu"
    m1 = mu * cumulant(MIX, 1, t)
    var = mu * cumulant(MIX, 1, t) + mu**2 * cumulant(MIX, 2, t)
    assert abs(k.mean() - m1) < 4 * math.sqrt(var / n)
    assert abs(k.var(ddof=1) - var) / var < 0.05


def test_poisson_mixture_path_counts():
    times = np.linspace(0.0, 2.0, 9)
    p = sample_poisson_mixture_path(MIX, 0.4, times, _gen(seed=11))
    assert isinstance(p, CountingPath)
    assert p.value[0] == 0
    assert np.all(np.diff(p.value) >= 0)


def test_poisson_inverse_smoke():
    k = sample_poisson_inverse(MIX, 0.4, 1.5, _gen(seed=12), 0.01, size=4000)
    assert k.dtype.kind in "iu"
    m1 = 0.4 * renewal_numeric(MIX, 1.5)
    assert abs(k.mean() - m1) < 6 * math.sqrt(max(k.var(ddof=1), 1e-12) / 4000)


def test_brownian_mixture_clock_variance():
    t, n = 1.3, 10**5
    b = sample_brownian(MIX, t, _gen(seed=414), clock="mixture", size=n)
    k1 = cumulant(MIX, 1, t)
    assert abs(b.mean()) < 4 * math.sqrt(k1 / n)
    # Var B(S) = E S; SE of the sample variance from the sample's 4th moment
    var = b.var(ddof=1)
    se_var = math.sqrt((np.mean(b**4) - var**2) / n)
    assert abs(var - k1) < 4 * se_var


def test_brownian_inverse_clock_variance():
    t, n = 1.5, 30000
    u_t = renewal_numeric(MIX, t)
    b = sample_brownian(MIX, t, _gen(seed=515), clock="inverse",
                        du=0.01 * u_t, size=n)
    var = b.var(ddof=1)
    se_var = math.sqrt((np.mean(b**4) - var**2) / n)
    assert abs(var - u_t) < 4 * se_var + 0.01 * u_t


def test_brownian_clock_validation():
    with pytest.raises(ParameterError):
        sample_brownian(MIX, 1.0, _gen(), clock="inverse")  # du missing
    with pytest.raises(ValueError):
        sample_brownian(MIX, 1.0, _gen(), clock="nope")
