import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llrcorr.cgf import cgf_gaussian, cgf_mismatched_llr, find_saddlepoint
from llrcorr.correction import (
    CorrectionError,
    CorrectionEstimate,
    MixturePdf,
    alpha_gauss_moment,
    alpha_gmi,
    alpha_gmi_channel,
    alpha_gmi_mc,
    alpha_high_snr,
    alpha_low_snr,
    alpha_saddlepoint,
    alpha_saddlepoint_channel,
    alpha_wlsf,
)
from llrcorr.llr import ChannelParams, sample_llrs
from llrcorr.pep import alpha_grid_2sm

GRID = [ChannelParams.from_db(snr, sir) for snr in np.linspace(-5, 25, 20) for sir in np.linspace(1, 20, 20)]


def gaussian_pair_pdf(gamma, gamma_t):
    """Gaussian L-value with mean -4 gamma_t and variance 8 gamma_t^2 / gamma."""
    return MixturePdf.gaussian(-4 * gamma_t, 8 * gamma_t**2 / gamma)


gammas = st.floats(0.05, 5.0)


def test_matched_factors_are_one():
    pdf = gaussian_pair_pdf(1.3, 1.3)
    assert alpha_saddlepoint(cgf_gaussian(-4 * 1.3, 8 * 1.3)).alpha == pytest.approx(1.0, abs=1e-9)
    assert alpha_gmi(pdf).alpha == pytest.approx(1.0, abs=1e-6)
    assert alpha_wlsf(pdf).alpha == pytest.approx(1.0, abs=1e-9)
    assert alpha_gauss_moment(pdf).alpha == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(gamma=gammas, gamma_t=gammas)
def test_gaussian_pair_methods_agree(gamma, gamma_t):
    pdf = gaussian_pair_pdf(gamma, gamma_t)
    want = gamma / gamma_t
    assert alpha_saddlepoint(pdf.cgf()).alpha == pytest.approx(want, abs=1e-9)
    assert alpha_wlsf(pdf).alpha == pytest.approx(want, abs=1e-6)
    assert alpha_gauss_moment(pdf).alpha == pytest.approx(want, abs=1e-6)
    if want < 2:
        assert alpha_gmi(pdf).alpha == pytest.approx(want, abs=1e-6)


def test_saddlepoint_factor_matches_bisection(reference_channel):
    p = reference_channel
    lo, hi = 0.0, p.h / p.sigma2_z
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if -p.h + p.sigma2_z * mid + p.g * math.tanh(p.g * mid) < 0:
            lo = mid
        else:
            hi = mid
    s_y = 0.5 * (lo + hi)
    est = alpha_saddlepoint_channel(p)
    s_l = find_saddlepoint(cgf_mismatched_llr(p)).s_hat
    assert est.alpha == pytest.approx(p.sigma2_z * s_y / p.h, rel=1e-9)
    assert est.alpha == pytest.approx(2 * s_l, rel=1e-12)


def test_gmi_quadrature_is_stable(reference_channel):
    pdf = MixturePdf.mismatched(reference_channel)
    assert abs(alpha_gmi(pdf, 60).alpha - alpha_gmi(pdf, 100).alpha) < 1e-4


def test_gmi_quadrature_order_floor(reference_channel):
    with pytest.raises(ValueError):
        alpha_gmi(MixturePdf.mismatched(reference_channel), 10)


def test_gmi_monte_carlo(reference_channel):
    b = sample_llrs(reference_channel, "mismatched", 1_000_000, seed=8)
    est = alpha_gmi_mc(b).alpha
    rng = np.random.default_rng(2)
    boots = [alpha_gmi_mc(rng.choice(b.samples, 200_000)).alpha for _ in range(20)]
    # resamples of n/5 samples; scale their spread back to n
    se = float(np.std(boots, ddof=1)) / math.sqrt(5)
    assert abs(est - alpha_gmi(MixturePdf.mismatched(reference_channel)).alpha) < 3 * se


def test_gmi_monte_carlo_matched(reference_channel):
    b = sample_llrs(reference_channel, "matched", 200_000, seed=8)
    est = alpha_gmi_mc(b).alpha
    rng = np.random.default_rng(3)
    se = float(np.std([alpha_gmi_mc(rng.choice(b.samples, b.samples.size)).alpha for _ in range(20)], ddof=1))
    assert abs(est - 1.0) < 3 * se


def test_gmi_monte_carlo_rejects_tiny_batch(reference_channel):
    with pytest.raises(CorrectionError):
        alpha_gmi_mc(sample_llrs(reference_channel, "mismatched", 1000, seed=0))


def test_gmi_reports_missing_root():
    # positive-mean L-values have no stationary point with alpha > 0
    with pytest.raises(CorrectionError, match="sign change"):
        alpha_gmi(MixturePdf.gaussian(4.0, 8.0))


def test_gmi_channel_falls_back_above_cap():
    p = ChannelParams.from_db(25.0, 6.0)
    est = alpha_gmi_channel(p)
    assert est.diagnostics["fallback"] == "saddlepoint"
    assert est.alpha == alpha_saddlepoint_channel(p).alpha
    assert "fallback" not in alpha_gmi_channel(ChannelParams.from_db(5.0, 6.0)).diagnostics


def test_wlsf_near_pep_optimum_at_low_snr():
    p = ChannelParams.from_db(-5.0, 10.0)
    wlsf = alpha_wlsf(MixturePdf.mismatched(p)).alpha
    grid = alpha_grid_2sm(p, 4, 4).alpha
    assert abs(wlsf - grid) / grid < 0.05


def test_gauss_moment_equals_low_snr_factor():
    for p in GRID:
        assert alpha_gauss_moment(MixturePdf.mismatched(p)).alpha == pytest.approx(alpha_low_snr(p).alpha, rel=1e-12)


def test_gauss_moment_batch_matches_pdf(reference_channel):
    b = sample_llrs(reference_channel, "mismatched", 500_000, seed=4)
    rng = np.random.default_rng(5)
    se = float(np.std([alpha_gauss_moment(rng.choice(b.samples, b.samples.size)).alpha for _ in range(20)], ddof=1))
    want = alpha_gauss_moment(MixturePdf.mismatched(reference_channel)).alpha
    assert abs(alpha_gauss_moment(b).alpha - want) < 3 * se


def test_asymptotic_factor_examples():
    assert alpha_low_snr(ChannelParams(1.0, 0.0, 0.3)).alpha == 1.0
    assert alpha_low_snr(ChannelParams(1.0, 0.5, 0.25)).alpha == pytest.approx(0.5)
    assert alpha_low_snr(ChannelParams(1.0, 0.5, 2.0)).alpha == pytest.approx(8 / 9)
    assert alpha_high_snr(ChannelParams(1.0, 0.0, 0.3)).alpha == 1.0
    assert alpha_high_snr(ChannelParams.from_db(10, 6)).alpha == pytest.approx(1 - 10 ** (-6 / 20))
    assert alpha_high_snr(ChannelParams.from_db(10, 12)).alpha == pytest.approx(0.7488, abs=1e-4)
    with pytest.raises(ValueError):
        alpha_high_snr(ChannelParams(1.0, 1.0, 0.1))


def test_saddlepoint_factor_below_one():
    for p in GRID:
        assert alpha_saddlepoint_channel(p).alpha < 1.0
    assert alpha_saddlepoint_channel(ChannelParams.from_db(10.0, 80.0)).alpha == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("sir", [3.0, 6.0, 10.0, 12.0])
def test_saddlepoint_factor_limits(sir):
    hi = ChannelParams.from_db(40.0, sir)
    assert abs(alpha_saddlepoint_channel(hi).alpha - alpha_high_snr(hi).alpha) / alpha_high_snr(hi).alpha < 0.01
    lo = ChannelParams.from_db(-20.0, sir)
    assert abs(alpha_saddlepoint_channel(lo).alpha - alpha_low_snr(lo).alpha) < 0.01


def test_corrected_cgf_saddlepoint_is_half():
    for p in GRID[::3]:
        a = alpha_saddlepoint_channel(p).alpha
        res = find_saddlepoint(cgf_mismatched_llr(p).scaled(a))
        assert res.s_hat == pytest.approx(0.5, rel=1e-8)


@pytest.mark.parametrize("sir", [3.0, 6.0, 10.0, 12.0])
def test_gmi_close_to_saddlepoint(sir):
    for snr in np.arange(0.0, 15.5, 1.0):
        p = ChannelParams.from_db(snr, sir)
        assert abs(alpha_gmi(MixturePdf.mismatched(p)).alpha - alpha_saddlepoint_channel(p).alpha) <= 0.08


def test_mixture_pdf_normalization_and_correction():
    pdf = MixturePdf.mismatched(ChannelParams.from_db(3.0, 6.0))
    assert pdf.expect(lambda l: np.ones_like(l)) == pytest.approx(1.0, rel=1e-12)
    assert pdf.expect(lambda l: l) == pytest.approx(pdf.mean(), rel=1e-10)
    # for exact L-values the correction function is the identity
    matched = MixturePdf.matched_awgn(ChannelParams(1.0, 0.0, 0.4))
    l = np.linspace(-20, 20, 9)
    np.testing.assert_allclose(matched.correction_function(l), l, atol=1e-9)


def test_estimate_validation():
    with pytest.raises(CorrectionError):
        CorrectionEstimate(-0.1, "x")
    with pytest.raises(ValueError):
        MixturePdf((0.0, 1.0), (0.5, 0.6), 1.0)
