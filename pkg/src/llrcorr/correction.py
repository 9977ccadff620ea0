"""Linear correction factors for mismatched L-values.

All estimators return a :class:`CorrectionEstimate`; the corrected L-value is
``alpha * l``. Pdf-based estimators work on a :class:`MixturePdf` (the
conditioned-on-zero density of the L-value) and integrate with Gauss-Hermite
quadrature, one rule per Gaussian component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Sequence, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, logsumexp

from .cgf import Cgf, cgf_mismatched_llr, cgf_mixture, find_saddlepoint
from .llr import ChannelParams, LValueBatch

__all__ = [
    "CorrectionEstimate",
    "MixturePdf",
    "CorrectionError",
    "alpha_saddlepoint",
    "alpha_saddlepoint_channel",
    "alpha_gmi",
    "alpha_gmi_channel",
    "alpha_gmi_mc",
    "alpha_wlsf",
    "alpha_gauss_moment",
    "alpha_low_snr",
    "alpha_high_snr",
    "GMI_SNR_CAP_DB",
    "DEFAULT_QUAD_ORDER",
]

DEFAULT_QUAD_ORDER = 64
# above this instantaneous SNR the GMI quadrature is unreliable; the saddlepoint factor is used
GMI_SNR_CAP_DB = 15.0
GMI_BRACKET = (1e-3, 2.0)


class CorrectionError(ValueError):
    """An estimator could not produce a correction factor."""


@dataclass(frozen=True)
class CorrectionEstimate:
    alpha: float
    method: str
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.alpha > 0:
            raise CorrectionError(f"{self.method}: non-positive correction factor {self.alpha}")


@dataclass(frozen=True)
class MixturePdf:
    """Gaussian mixture ``sum_i w_i N(means_i, sigma2)`` of an L-value given a zero."""

    means: tuple[float, ...]
    weights: tuple[float, ...]
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "means", tuple(float(m) for m in self.means))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.means) != len(self.weights) or not self.means:
            raise ValueError("means and weights must be non-empty and of equal length")
        if any(w < 0 for w in self.weights) or not math.isclose(sum(self.weights), 1.0, abs_tol=1e-12):
            raise ValueError("weights must be non-negative and sum to 1")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    @classmethod
    def gaussian(cls, mean: float, var: float) -> "MixturePdf":
        return cls((mean,), (1.0,), var)

    @classmethod
    def mismatched(cls, p: ChannelParams) -> "MixturePdf":
        """Density of ``2 h y / sigma2_z`` on the interference channel."""
        scale = 2.0 * p.h / p.sigma2_z
        return cls((-scale * (p.h - p.g), -scale * (p.h + p.g)), (0.5, 0.5), 4.0 * p.h**2 / p.sigma2_z)

    @classmethod
    def matched_awgn(cls, p: ChannelParams) -> "MixturePdf":
        """Density of the exact L-value when no interference is present."""
        mu0 = 2.0 * p.h**2 / p.sigma2_z
        return cls((-mu0,), (1.0,), 2.0 * mu0)

    def mean(self) -> float:
        return float(np.dot(self.weights, self.means))

    def var(self) -> float:
        m = np.asarray(self.means)
        return float(self.sigma2 + np.dot(self.weights, (m - self.mean()) ** 2))

    def logpdf(self, l):
        l = np.asarray(l, dtype=float)[..., None]
        m = np.asarray(self.means)
        a = np.log(self.weights) - (l - m) ** 2 / (2 * self.sigma2)
        return logsumexp(a, axis=-1) - 0.5 * math.log(2 * math.pi * self.sigma2)

    def correction_function(self, l):
        """Exact correction ``log p(-l|0) / p(l|0)`` (the symmetry condition gives ``p(l|1) = p(-l|0)``)."""
        return self.logpdf(-np.asarray(l, dtype=float)) - self.logpdf(l)

    def cgf(self) -> Cgf:
        return cgf_mixture(self.means, self.weights, self.sigma2)

    def expect(self, fn: Callable[[np.ndarray], np.ndarray], order: int = DEFAULT_QUAD_ORDER) -> float:
        """``E[fn(L)]`` by Gauss-Hermite quadrature of each component."""
        x, w = _hermgauss(order)
        sd = math.sqrt(2.0 * self.sigma2)
        total = 0.0
        for m, wt in zip(self.means, self.weights):
            total += wt * float(np.dot(w, fn(m + sd * x)))
        return total / math.sqrt(math.pi)


    def expect_panels(self, fn: Callable[[np.ndarray], np.ndarray], order: int = DEFAULT_QUAD_ORDER,
                      width: float = math.inf, reach: float = 12.0) -> float:
        """``E[fn(L)]`` by composite Gauss-Legendre over ``mean +- reach * sd`` per component.

        Panels are at most ``width`` wide (and at most four standard
        deviations), which keeps the rule accurate for integrands with
        structure on a scale finer than the Gaussian, such as a steep sigmoid.
        """
        x, w = _leggauss(order)
        sd = math.sqrt(self.sigma2)
        step = min(4.0 * sd, width)
        n_panels = max(1, math.ceil(2.0 * reach * sd / step))
        total = 0.0
        for m, wt in zip(self.means, self.weights):
            edges = np.linspace(m - reach * sd, m + reach * sd, n_panels + 1)
            half = 0.5 * np.diff(edges)[:, None]
            nodes = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half * x
            dens = np.exp(-((nodes - m) ** 2) / (2.0 * self.sigma2)) / math.sqrt(2.0 * math.pi * self.sigma2)
            total += wt * float(np.sum(half * w * dens * fn(nodes)))
        return total


@lru_cache(maxsize=32)
def _hermgauss(order: int):
    return np.polynomial.hermite.hermgauss(order)


@lru_cache(maxsize=32)
def _leggauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def alpha_saddlepoint(cgf: Cgf, **solver_kw) -> CorrectionEstimate:
    """Twice the (absolute) saddlepoint of the L-value CGF."""
    res = find_saddlepoint(cgf, **solver_kw)
    if not res.converged:
        raise CorrectionError(f"saddlepoint solver did not converge (residual {res.residual:.3g})")
    return CorrectionEstimate(
        2.0 * abs(res.s_hat),
        "saddlepoint",
        {"s_hat": res.s_hat, "iterations": res.iterations, "residual": res.residual},
    )


def alpha_saddlepoint_channel(p: ChannelParams) -> CorrectionEstimate:
    return alpha_saddlepoint(cgf_mismatched_llr(p))


def _gmi_root(stationarity: Callable[[float], float], method: str, diagnostics: dict) -> CorrectionEstimate:
    lo, hi = GMI_BRACKET
    f_lo, f_hi = stationarity(lo), stationarity(hi)
    if not (f_lo < 0 < f_hi):
        raise CorrectionError(
            f"{method}: stationarity condition has no sign change on [{lo:g}, {hi:g}] "
            f"(endpoint values {f_lo:.6g}, {f_hi:.6g})"
        )
    alpha, info = brentq(stationarity, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, full_output=True)
    diagnostics.update(iterations=info.iterations)
    return CorrectionEstimate(alpha, method, diagnostics)


def alpha_gmi(pdf: MixturePdf, quad_order: int = DEFAULT_QUAD_ORDER) -> CorrectionEstimate:
    """Correction factor maximizing the GMI, from its stationarity condition.

    Solves ``E[L * sigmoid(alpha L)] = 0`` for ``alpha`` in ``(1e-3, 2]``.
    The sigmoid has poles at distance ``pi / alpha`` from the real axis, so a
    single Gauss-Hermite rule converges slowly once the L-value spread is
    large. The expectation uses ``quad_order``-point Gauss-Legendre panels
    sized so that the nearest pole lies outside the Bernstein ellipse of
    parameter ``exp(21 / quad_order)`` (error below about ``1e-18``).
    """
    if quad_order < 20:
        raise ValueError("quad_order must be at least 20")

    def stationarity(a):
        width = 2.0 * (math.pi / a) / math.sinh(21.0 / quad_order)
        return pdf.expect_panels(lambda l: l * expit(a * l), quad_order, width=width)

    return _gmi_root(stationarity, "gmi", {"quad_order": quad_order})


def alpha_gmi_channel(p: ChannelParams, quad_order: int = DEFAULT_QUAD_ORDER) -> CorrectionEstimate:
    """GMI factor for the interference channel, with the high-SNR fallback to the saddlepoint."""
    if p.snr_db > GMI_SNR_CAP_DB:
        est = alpha_saddlepoint_channel(p)
        return CorrectionEstimate(est.alpha, "gmi", {**est.diagnostics, "fallback": "saddlepoint"})
    return alpha_gmi(MixturePdf.mismatched(p), quad_order)


def alpha_gmi_mc(batch: LValueBatch | np.ndarray, min_size: int = 10_000) -> CorrectionEstimate:
    """Monte Carlo version of :func:`alpha_gmi` using sample means."""
    l = np.asarray(batch.samples if isinstance(batch, LValueBatch) else batch, dtype=float)
    if l.size < min_size:
        raise CorrectionError(f"gmi_mc: batch of {l.size} samples is below the minimum {min_size}")

    def stationarity(a):
        return float(np.mean(l * expit(a * l)))

    return _gmi_root(stationarity, "gmi_mc", {"n": int(l.size)})


def alpha_wlsf(pdf: MixturePdf, quad_order: int = DEFAULT_QUAD_ORDER) -> CorrectionEstimate:
    """Weighted least-squares fit of ``alpha * l`` to the exact correction function.

    The objective is quadratic in ``alpha``, so the minimizer is
    ``E[L f(L)] / E[L^2]``.
    """
    num = pdf.expect(lambda l: l * pdf.correction_function(l), quad_order)
    den = pdf.expect(lambda l: l * l, quad_order)
    return CorrectionEstimate(num / den, "wlsf", {"quad_order": quad_order})


def alpha_gauss_moment(source: Union[MixturePdf, LValueBatch, Sequence[float], np.ndarray]) -> CorrectionEstimate:
    """``2 * (-mean) / variance`` of the conditioned-on-zero L-value."""
    if isinstance(source, MixturePdf):
        mean, var, kind = source.mean(), source.var(), "pdf"
    else:
        l = np.asarray(source.samples if isinstance(source, LValueBatch) else source, dtype=float)
        mean, var, kind = float(l.mean()), float(l.var(ddof=1)) if l.size > 1 else 0.0, "batch"
    if not var > 0:
        raise CorrectionError("gauss_moment: zero variance")
    return CorrectionEstimate(-2.0 * mean / var, "gauss_moment", {"source": kind})


def alpha_low_snr(p: ChannelParams) -> CorrectionEstimate:
    """``sigma2_z / (sigma2_z + g^2)``: treat the interference as extra Gaussian noise."""
    return CorrectionEstimate(p.sigma2_z / p.sigma2_ni, "low_snr")


def alpha_high_snr(p: ChannelParams) -> CorrectionEstimate:
    """``1 - g/h``: the interference shrinks the effective signal amplitude."""
    p.require_weak_interference()
    return CorrectionEstimate(1.0 - p.g / p.h, "high_snr")
