import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import logsumexp

from llrcorr.cgf import (
    NoSaddlepointError,
    cgf_empirical,
    cgf_gaussian,
    cgf_mismatched_llr,
    cgf_mixture,
    cgf_observation,
    cgf_sum,
    find_saddlepoint,
    newton_saddlepoint,
    observation_saddlepoint,
    saddle_seed_high_snr,
    saddle_seed_low_snr,
)
from llrcorr.llr import ChannelParams, sample_llrs

SNR_GRID = np.linspace(-5.0, 25.0, 20)
SIR_GRID = np.linspace(1.0, 20.0, 20)
GRID = [(snr, sir) for snr in SNR_GRID for sir in SIR_GRID]

channels = st.builds(
    lambda snr, sir: ChannelParams.from_db(snr, sir),
    st.floats(-10.0, 30.0),
    st.floats(0.5, 30.0),
)


def _bisect_observation_root(p):
    def kp(s):
        return -p.h + p.sigma2_z * s + p.g * math.tanh(p.g * s)

    lo, hi = 1e-3 * min(saddle_seed_high_snr(p), saddle_seed_low_snr(p)), p.h / p.sigma2_z
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if kp(mid) < 0 else (lo, mid)
    return 0.5 * (lo + hi)


def _sample_cgf(l, s):
    return float(logsumexp(s * l) - math.log(l.size))


def test_observation_cgf_examples(reference_channel):
    assert cgf_observation(reference_channel)(0.0) == 0.0
    assert cgf_observation(ChannelParams(1.0, 0.0, 0.5))(1.0) == pytest.approx(-0.75, rel=1e-14)

    p = reference_channel
    sd = math.sqrt(p.sigma2_z)

    def integrand(y, s):
        dens = 0.5 * sum(math.exp(-((y + p.h - p.g * d) ** 2) / (2 * p.sigma2_z)) for d in (-1, 1))
        return math.exp(s * y) * dens / math.sqrt(2 * math.pi * p.sigma2_z)

    mgf, _ = integrate.quad(integrand, -p.h - p.g - 40 * sd, 40 * sd, args=(2.0,), epsabs=0, epsrel=1e-13, limit=200)
    assert cgf_observation(p)(2.0) == pytest.approx(math.log(mgf), rel=1e-10)


def test_mismatched_cgf_is_rescaled_observation_cgf(reference_channel):
    ky, kl = cgf_observation(reference_channel), cgf_mismatched_llr(reference_channel)
    assert kl(0.0) == 0.0
    for s in np.arange(0.1, 1.0, 0.1):
        assert kl(s) == pytest.approx(ky(8.0 * s), rel=1e-14)


def test_no_interference_saddlepoint_is_half():
    res = find_saddlepoint(cgf_mismatched_llr(ChannelParams(1.0, 0.0, 0.5)))
    assert res.converged
    assert res.s_hat == pytest.approx(0.5, abs=1e-10)


@pytest.mark.parametrize("gamma", [0.1, 1.0, 7.5])
def test_matched_gaussian_saddlepoint_is_half(gamma):
    res = find_saddlepoint(cgf_gaussian(-4 * gamma, 8 * gamma))
    assert res.s_hat == pytest.approx(0.5, abs=1e-10)


@given(mu=st.floats(0.01, 100.0), var=st.floats(0.01, 100.0), seed=st.floats(-10.0, 10.0))
def test_gaussian_saddlepoint_one_newton_step(mu, var, seed):
    res = find_saddlepoint(cgf_gaussian(-mu, var), seed_s=seed)
    assert res.s_hat == pytest.approx(mu / var, rel=1e-12)
    assert res.iterations <= 1


def test_saddlepoint_matches_bisection(reference_channel):
    res = find_saddlepoint(cgf_observation(reference_channel))
    assert res.converged
    assert abs(res.s_hat - _bisect_observation_root(reference_channel)) < 1e-10


def test_seed_examples():
    assert saddle_seed_low_snr(ChannelParams(1.0, 0.0, 0.5)) == pytest.approx(2.0)
    assert saddle_seed_high_snr(ChannelParams(1.0, 0.0, 0.5)) == pytest.approx(2.0)
    assert saddle_seed_low_snr(ChannelParams(1.0, 0.5, 2.0)) == pytest.approx(1 / 2.25)
    assert saddle_seed_high_snr(ChannelParams(1.0, 0.5, 0.01)) == pytest.approx(50.0)
    with pytest.raises(ValueError):
        saddle_seed_high_snr(ChannelParams(1.0, 1.5, 0.01))


def test_seed_limits():
    low = ChannelParams(1.0, 0.5, 100.0)
    s = find_saddlepoint(cgf_observation(low)).s_hat
    assert abs(s - saddle_seed_low_snr(low)) / saddle_seed_low_snr(low) < 1e-3
    high = ChannelParams(1.0, 0.5, 1e-4)
    s = find_saddlepoint(cgf_observation(high)).s_hat
    assert abs(s - saddle_seed_high_snr(high)) / saddle_seed_high_snr(high) < 1e-3


def test_seed_ordering():
    # both seeds bound the root from below: tanh(x) <= x and tanh(x) <= 1
    for snr, sir in GRID:
        p = ChannelParams.from_db(snr, sir)
        s = find_saddlepoint(cgf_observation(p)).s_hat
        lower = max(saddle_seed_high_snr(p), saddle_seed_low_snr(p))
        assert lower * (1 - 1e-9) <= s <= p.h / p.sigma2_z


def test_seeds_bracket_from_below_only():
    p = ChannelParams.from_db(10.0, 6.0)
    s = find_saddlepoint(cgf_observation(p)).s_hat
    assert saddle_seed_low_snr(p) < s and saddle_seed_high_snr(p) < s


def test_two_newton_steps_suffice():
    worst = 0.0
    for snr, sir in GRID:
        p = ChannelParams.from_db(snr, sir)
        k = cgf_observation(p)
        exact = find_saddlepoint(k).s_hat
        approx = newton_saddlepoint(k, max(saddle_seed_high_snr(p), saddle_seed_low_snr(p)), 2)
        worst = max(worst, abs(approx - exact) / exact)
    assert worst < 0.01


def test_vectorized_solver_matches_scalar():
    ps = [ChannelParams.from_db(snr, sir) for snr, sir in GRID[::11]]
    got = observation_saddlepoint([p.h for p in ps], [p.g for p in ps], [p.sigma2_z for p in ps])
    want = [find_saddlepoint(cgf_observation(p)).s_hat for p in ps]
    np.testing.assert_allclose(got, want, rtol=1e-9)


def test_vectorized_solver_allows_strong_interference():
    s = observation_saddlepoint(1.0, 2.0, 0.1)
    assert abs(-1.0 + 0.1 * s + 2.0 * math.tanh(2.0 * s)) < 1e-10


@settings(deadline=None)
@given(p=channels, u=st.floats(-3.0, 3.0))
def test_derivatives_match_finite_differences(p, u):
    k = cgf_observation(p)
    # probe around the saddlepoint so every SNR sees the same region
    s = u * saddle_seed_low_snr(p)
    h = 1e-5 * (1 + abs(s))
    d1 = (k(s + h) - k(s - h)) / (2 * h)
    d2 = (k.d1(s + h) - k.d1(s - h)) / (2 * h)
    assert k.d1(s) == pytest.approx(d1, rel=1e-6, abs=1e-6 * k.scale)
    assert k.d2(s) == pytest.approx(d2, rel=1e-6)


@given(p=channels, s=st.floats(-5.0, 5.0))
def test_analytic_cgfs_are_convex_and_normalized(p, s):
    for k in (cgf_observation(p), cgf_mismatched_llr(p), cgf_mixture([-1.0, 2.0], [0.3, 0.7], 0.5)):
        assert k(0.0) == 0.0
        assert k.d2(s) > 0


def test_empirical_cgf_two_point():
    k = cgf_empirical(np.array([-1.0, 1.0] * 50))
    for s in (0.0, 0.3, -0.8, 1.5):
        assert k(s) == pytest.approx(math.log(math.cosh(s)), abs=1e-14)


def test_empirical_cgf_matches_analytic(reference_channel):
    b = sample_llrs(reference_channel, "mismatched", 1_000_000, seed=11)
    k = cgf_empirical(b)
    assert k(0.0) == 0.0
    rng = np.random.default_rng(0)
    boots = [_sample_cgf(rng.choice(b.samples, b.samples.size), 0.3) for _ in range(40)]
    se = float(np.std(boots, ddof=1))
    assert abs(k(0.3) - cgf_mismatched_llr(reference_channel)(0.3)) < 3 * se
    for s in np.linspace(*k.domain, 12)[1:-1]:
        assert k.d2(s) >= 0


@pytest.mark.parametrize("snr,sir", [(-5.0, 3.0), (0.0, 6.0), (3.0, 10.0)])
def test_true_llr_cgf_shifted_symmetry(snr, sir):
    b = sample_llrs(ChannelParams.from_db(snr, sir), "matched", 200_000, seed=21)
    rng = np.random.default_rng(1)
    resampled = [rng.choice(b.samples, b.samples.size) for _ in range(30)]
    k = cgf_empirical(b)
    checked = 0
    for s in (0.1, 0.3, 0.7, 0.9):
        if not (k.contains(s) and k.contains(1 - s)):
            continue
        se = float(np.std([_sample_cgf(r, s) - _sample_cgf(r, 1 - s) for r in resampled], ddof=1))
        assert abs(k(s) - k(1 - s)) < 5 * max(se, 1e-12)
        checked += 1
    assert checked == 4


def test_empirical_domain_shrinks_at_high_snr():
    lo = cgf_empirical(sample_llrs(ChannelParams.from_db(0.0, 6.0), "matched", 200_000, seed=2))
    hi = cgf_empirical(sample_llrs(ChannelParams.from_db(10.0, 12.0), "matched", 200_000, seed=2))
    assert lo.contains(0.95) and not hi.contains(0.9)


def test_empirical_domain_is_limited():
    l = np.random.default_rng(3).normal(-4.0, math.sqrt(8.0), 1000)
    k = cgf_empirical(l)
    assert math.isfinite(k.domain[0]) and math.isfinite(k.domain[1])
    assert k.domain[0] < 0 < k.domain[1]


def test_sum_cgf_and_no_saddlepoint():
    g = cgf_gaussian(-4.0, 8.0)
    total = cgf_sum([(g, 3), (g, 0)], [2.0, 1.0])
    assert total(0.7) == pytest.approx(3 * g(1.4))
    with pytest.raises(NoSaddlepointError):
        find_saddlepoint(cgf_empirical(np.abs(np.random.default_rng(0).normal(size=500)) + 1.0))
    with pytest.raises(ValueError):
        cgf_sum([(g, 0)])
