"""Pairwise error probability of an ML decoder fed with corrected L-values.

Conditioned on the all-zeros codeword, an error event of Hamming weight
``d = d1 + d2`` happens when the sum of the ``d`` corrected L-values it
covers is positive (ties count as errors). ``d1`` of those L-values are
mismatched and scaled by ``alpha``; ``d2`` are matched and left alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
from scipy.special import comb, erfc, log_ndtr, logsumexp

from . import rng as _rng
from .cgf import Cgf, NoSaddlepointError, cgf_gaussian, cgf_mismatched_llr, cgf_sum, find_saddlepoint
from .correction import CorrectionEstimate
from .llr import ChannelParams

__all__ = [
    "PepQuery",
    "PepEstimate",
    "qfunc",
    "pep_exact_gauss",
    "pep_exact_2sm",
    "pep_2sm_curve",
    "log_pep_2sm_curve",
    "two_state_weights",
    "pep_bhattacharyya",
    "pep_spa",
    "pep_mc_oracle",
    "alpha_grid_2sm",
    "log_bhattacharyya",
    "two_state_terms",
    "pep_all",
]


@dataclass(frozen=True)
class PepQuery:
    d1: int
    d2: int
    alpha: float = 1.0

    def __post_init__(self):
        if self.d1 < 0 or self.d2 < 0 or self.d1 + self.d2 < 1:
            raise ValueError("need d1, d2 >= 0 and d1 + d2 >= 1")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class PepEstimate:
    value: float
    method: str
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def stderr(self) -> float:
        return float(self.meta.get("stderr", 0.0))


def qfunc(x):
    """Gaussian tail ``P(N(0,1) > x)``."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def pep_exact_gauss(q: PepQuery, gamma: float, gamma_tilde: float) -> PepEstimate:
    """PEP when matched L-values use SNR ``gamma`` and mismatched ones ``gamma_tilde``.

    Matched L-values are ``N(-4 gamma, 8 gamma)``, mismatched ones
    ``N(-4 gamma_tilde, 8 gamma_tilde^2 / gamma)``.
    """
    if not (gamma > 0 and gamma_tilde > 0):
        raise ValueError("gamma and gamma_tilde must be positive")
    a, d1, d2 = q.alpha, q.d1, q.d2
    arg = math.sqrt(2.0) * (a * d1 * gamma_tilde + d2 * gamma) / math.sqrt(
        a * a * d1 * gamma_tilde**2 / gamma + d2 * gamma
    )
    return PepEstimate(qfunc(arg), "exact_gauss")


def two_state_weights(d1: int) -> np.ndarray:
    """Binomial weights over how many mismatched L-values fall in the far component."""
    k = np.arange(d1 + 1)
    return comb(d1, k, exact=False) / 2.0**d1


def log_pep_2sm_curve(p: ChannelParams, d1: int, d2: int, alphas) -> np.ndarray:
    """Natural log of the two-state-mismatch PEP for an array of correction factors."""
    p.require_weak_interference()
    alphas = np.asarray(alphas, dtype=float)
    s2 = p.sigma2_z
    mu1 = 2.0 * p.h * (p.h - p.g) / s2
    mu2 = 2.0 * p.h * (p.h + p.g) / s2
    mu0 = 2.0 * p.h**2 / s2
    sigma = 2.0 * p.h / math.sqrt(s2)
    k = np.arange(d1 + 1)[:, None]
    a = alphas[None, :]
    num = (d1 - k) * a * mu1 + k * a * mu2 + d2 * mu0
    den = sigma * np.sqrt(d1 * a * a + d2)
    # Q(x) = Phi(-x)
    return logsumexp(log_ndtr(-num / den), b=two_state_weights(d1)[:, None], axis=0)


def pep_2sm_curve(p: ChannelParams, d1: int, d2: int, alphas) -> np.ndarray:
    """Two-state-mismatch PEP evaluated for an array of correction factors."""
    return np.exp(log_pep_2sm_curve(p, d1, d2, alphas))


def pep_exact_2sm(q: PepQuery, p: ChannelParams) -> PepEstimate:
    """Exact PEP when ``d1`` interfered and ``d2`` interference-free L-values meet."""
    value = float(pep_2sm_curve(p, q.d1, q.d2, [q.alpha])[0])
    return PepEstimate(value, "exact_2sm")


def two_state_terms(q: PepQuery, p: ChannelParams):
    """``(terms, alphas)`` for the composite CGF of the two-state error event.

    The ``d1`` interfered L-values are ``2 h y / sigma2_z`` scaled by ``alpha``;
    the ``d2`` interference-free ones are exact, ``N(-mu0, 2 mu0)``.
    """
    mu0 = 2.0 * p.h**2 / p.sigma2_z
    terms = [(cgf_mismatched_llr(p), q.d1), (cgf_gaussian(-mu0, 2.0 * mu0), q.d2)]
    return terms, [q.alpha, 1.0]


def pep_all(q: PepQuery, p: ChannelParams, n: int = 1_000_000, seed: int = 0, workers: int = 1) -> list[PepEstimate]:
    """Exact two-state PEP, Bhattacharyya bound, saddlepoint approximation and the oracle."""
    terms, alphas = two_state_terms(q, p)
    return [
        pep_exact_2sm(q, p),
        pep_bhattacharyya(terms, alphas),
        pep_spa(terms, alphas),
        pep_mc_oracle(q, p, n, seed, workers),
    ]


def _composite(cgfs: Sequence[tuple[Cgf, float]], alphas: Optional[Sequence[float]]):
    kappa = cgf_sum(cgfs, alphas)
    res = find_saddlepoint(kappa)
    if not res.converged:
        raise NoSaddlepointError(f"composite CGF saddlepoint did not converge (residual {res.residual:.3g})")
    return kappa, res


def log_bhattacharyya(cgfs: Sequence[tuple[Cgf, float]], alphas: Optional[Sequence[float]] = None) -> float:
    """Natural log of the Bhattacharyya bound, ``min_s kappa_sum(s)``."""
    kappa, res = _composite(cgfs, alphas)
    return kappa.value(res.s_hat)


def pep_bhattacharyya(cgfs: Sequence[tuple[Cgf, float]], alphas: Optional[Sequence[float]] = None) -> PepEstimate:
    """Upper bound ``exp(kappa_sum(s_hat))`` on the PEP.

    ``cgfs`` lists ``(cgf, multiplicity)`` pairs; ``alphas`` scales each term.
    """
    kappa, res = _composite(cgfs, alphas)
    return PepEstimate(math.exp(kappa.value(res.s_hat)), "bhattacharyya", {"s_hat": res.s_hat})


def pep_spa(cgfs: Sequence[tuple[Cgf, float]], alphas: Optional[Sequence[float]] = None) -> PepEstimate:
    """Saddlepoint approximation ``exp(kappa(s)) / (|s| sqrt(2 pi kappa''(s)))``."""
    kappa, res = _composite(cgfs, alphas)
    s = res.s_hat
    curv = kappa.d2(s)
    if not curv > 0:
        raise NoSaddlepointError(f"non-positive curvature {curv:g} at the saddlepoint")
    value = math.exp(kappa.value(s)) / (abs(s) * math.sqrt(2.0 * math.pi * curv))
    return PepEstimate(min(value, 1.0), "spa", {"s_hat": s, "curvature": curv})


def _oracle_block(q: PepQuery, p: ChannelParams, size: int, gen: np.random.Generator) -> int:
    h, g, s2 = p.h, p.g, p.sigma2_z
    sd = math.sqrt(s2)
    scale = 2.0 * h / s2
    total = np.zeros(size)
    if q.d1:
        d = 2.0 * gen.integers(0, 2, size=(size, q.d1)) - 1.0
        y = -h + gen.normal(0.0, sd, size=(size, q.d1)) + g * d
        total += q.alpha * scale * y.sum(axis=1)
    if q.d2:
        y = -h + gen.normal(0.0, sd, size=(size, q.d2))
        total += scale * y.sum(axis=1)
    return int(np.count_nonzero(total >= 0))


def pep_mc_oracle(q: PepQuery, p: ChannelParams, n: int = 1_000_000, seed: int = 0, workers: int = 1) -> PepEstimate:
    """Direct simulation of the two-state error event.

    Each trial draws channel outputs for ``d1`` interfered and ``d2``
    interference-free symbols carrying a zero, forms their L-values
    (``2 h y / sigma2_z``, the exact L-value when no interference is present),
    scales the interfered ones by ``alpha`` and counts non-negative sums.
    """
    if n < 100_000:
        raise ValueError("the oracle needs at least 1e5 trials")
    sizes = _rng.block_sizes(n)
    hits = sum(_rng.map_blocks(lambda i: _oracle_block(q, p, sizes[i], _rng.stream(seed, i)), len(sizes), workers))
    value = hits / n
    stderr = math.sqrt(max(value * (1.0 - value), 0.0) / n)
    return PepEstimate(value, "mc_oracle", {"n": n, "errors": hits, "stderr": stderr})


def alpha_grid_2sm(p: ChannelParams, d1: int, d2: int, resolution: float = 1e-3, alpha_max: float = 1.5) -> CorrectionEstimate:
    """Exhaustive grid minimization of the two-state PEP over ``alpha`` in ``(0, alpha_max]``.

    Ties go to the smaller ``alpha``. A flat objective (every term scaled
    alike, e.g. ``d2 = 0``) is reported with ``flag="alpha-independent"``.
    """
    if not 0 < resolution <= 1e-3:
        raise ValueError("grid resolution must be in (0, 1e-3]")
    grid = resolution * np.arange(1, int(round(alpha_max / resolution)) + 1)
    log_pep = log_pep_2sm_curve(p, d1, d2, grid)
    i = int(np.argmin(log_pep))
    diag: dict[str, Any] = {"d1": d1, "d2": d2, "pep": float(np.exp(log_pep[i])), "resolution": resolution}
    if float(log_pep.max() - log_pep.min()) <= 1e-9:
        diag["flag"] = "alpha-independent"
    return CorrectionEstimate(float(grid[i]), "grid_2sm", diag)
