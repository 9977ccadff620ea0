"""Cumulant generating functions and the saddlepoint solver.

A :class:`Cgf` bundles ``kappa(s) = log E[exp(s L)]`` with its first two
derivatives. Realizations provided here:

* :func:`cgf_observation` -- the received sample of the interference channel,
* :func:`cgf_mismatched_llr` -- the interference-ignorant L-value,
* :func:`cgf_gaussian` / :func:`cgf_mixture` -- Gaussian and Gaussian-mixture L-values,
* :func:`cgf_empirical` -- a sample-mean estimate from an :class:`~llrcorr.llr.LValueBatch`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .llr import ChannelParams, LValueBatch

__all__ = [
    "Cgf",
    "SaddlepointResult",
    "NoSaddlepointError",
    "cgf_observation",
    "cgf_mismatched_llr",
    "cgf_gaussian",
    "cgf_mixture",
    "cgf_empirical",
    "cgf_sum",
    "find_saddlepoint",
    "newton_saddlepoint",
    "saddle_seed_low_snr",
    "saddle_seed_high_snr",
    "observation_saddlepoint",
]

Fn = Callable[[float], float]


class NoSaddlepointError(ValueError):
    """The derivative of the CGF does not change sign on its domain."""


@dataclass(frozen=True)
class Cgf:
    """A convex CGF with analytic first and second derivatives.

    ``bracket`` optionally names an interval known to contain the saddlepoint
    (derivative negative at the left end, non-negative at the right end), and
    ``scale`` sets the magnitude used for the default solver tolerance.
    """

    value: Fn
    d1: Fn
    d2: Fn
    domain: tuple[float, float] = (-math.inf, math.inf)
    bracket: Optional[tuple[float, float]] = None
    seed: float = 0.0
    scale: float = 1.0
    name: str = ""

    def __call__(self, s: float) -> float:
        return self.value(s)

    def contains(self, s: float) -> bool:
        lo, hi = self.domain
        return lo < s < hi

    def scaled(self, a: float) -> "Cgf":
        """CGF of ``a * L``: ``s -> kappa(a s)``."""
        if a == 0:
            raise ValueError("scale factor must be nonzero")
        lo, hi = (x / a for x in self.domain)
        if a < 0:
            lo, hi = hi, lo
        bracket = None
        if self.bracket is not None and a > 0:
            bracket = (self.bracket[0] / a, self.bracket[1] / a)
        return Cgf(
            value=lambda s: self.value(a * s),
            d1=lambda s: a * self.d1(a * s),
            d2=lambda s: a * a * self.d2(a * s),
            domain=(lo, hi),
            bracket=bracket,
            seed=self.seed / a,
            scale=abs(a) * self.scale,
            name=f"{self.name}*{a:g}",
        )


@dataclass(frozen=True)
class SaddlepointResult:
    s_hat: float
    iterations: int
    converged: bool
    residual: float


def _logcosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def _sech2(x):
    e = np.exp(-2.0 * np.abs(x))
    return 4.0 * e / (1.0 + e) ** 2


def cgf_observation(p: ChannelParams) -> Cgf:
    """CGF of the received sample given a transmitted zero (symbol -h)."""
    h, g, s2 = p.h, p.g, p.sigma2_z
    return Cgf(
        value=lambda s: float(-h * s + 0.5 * s2 * s * s + _logcosh(g * s)),
        d1=lambda s: float(-h + s2 * s + g * math.tanh(g * s)),
        d2=lambda s: float(s2 + g * g * _sech2(g * s)),
        # d1(0) = -h < 0 and d1(h/s2) = g tanh(g h/s2) >= 0
        bracket=(0.0, h / s2),
        seed=max(saddle_seed_low_snr(p), (h - g) / s2),
        scale=h + s2,
        name="kappa_Y",
    )


def cgf_mismatched_llr(p: ChannelParams) -> Cgf:
    """CGF of ``2 h Y / sigma2_z``, obtained by rescaling :func:`cgf_observation`."""
    return cgf_observation(p).scaled(2.0 * p.h / p.sigma2_z)


def cgf_gaussian(mean: float, var: float) -> Cgf:
    """CGF ``mean*s + var*s^2/2`` of a Gaussian L-value."""
    if not var > 0:
        raise ValueError("variance must be positive")
    return Cgf(
        value=lambda s: mean * s + 0.5 * var * s * s,
        d1=lambda s: mean + var * s,
        d2=lambda s: var,
        seed=0.0,
        scale=abs(mean) + var,
        name="gauss",
    )


def cgf_mixture(means: Sequence[float], weights: Sequence[float], var: float) -> Cgf:
    """CGF of a Gaussian mixture sharing one variance."""
    m = np.asarray(means, dtype=float)
    logw = np.log(np.asarray(weights, dtype=float))

    def tilt(s):
        a = logw + m * s + 0.5 * var * s * s
        lz = logsumexp(a)
        return lz, np.exp(a - lz)

    def value(s):
        return 0.0 if s == 0 else float(tilt(s)[0])

    def d1(s):
        _, w = tilt(s)
        return float(np.dot(w, m) + var * s)

    def d2(s):
        _, w = tilt(s)
        mu = np.dot(w, m)
        return float(var + np.dot(w, (m - mu) ** 2))

    return Cgf(value=value, d1=d1, d2=d2, scale=float(np.max(np.abs(m))) + var, name="mixture")


def _ess_edge(l: np.ndarray, direction: float, min_ess: float) -> float:
    """Largest ``|s|`` in the given direction with tilted effective sample size >= ``min_ess``."""

    def ess(s):
        a = s * l
        return float(math.exp(2 * logsumexp(a) - logsumexp(2 * a)))

    step = 1.0 / max(float(np.std(l)), 1e-12)
    hi = step
    while ess(direction * hi) >= min_ess:
        hi *= 2.0
        if hi > 1e12:
            return math.inf
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if ess(direction * mid) >= min_ess:
            lo = mid
        else:
            hi = mid
    return lo


def cgf_empirical(batch: LValueBatch | np.ndarray, min_ess: float = 30.0) -> Cgf:
    """Sample-mean CGF ``log mean(exp(s l))`` with exponentially tilted moments.

    The domain is limited to the ``s`` where the tilted effective sample size
    ``(sum w)^2 / sum w^2`` with ``w = exp(s l)`` stays at or above ``min_ess``.
    """
    l = np.asarray(batch.samples if isinstance(batch, LValueBatch) else batch, dtype=float)
    if l.size == 0:
        raise ValueError("empty batch")
    log_n = math.log(l.size)

    def weights(s):
        a = s * l
        lz = logsumexp(a)
        return lz, np.exp(a - lz)

    def value(s):
        if s == 0:
            return 0.0
        return float(weights(s)[0] - log_n)

    def d1(s):
        return float(np.dot(weights(s)[1], l))

    def d2(s):
        w = weights(s)[1]
        mu = np.dot(w, l)
        return float(max(np.dot(w, (l - mu) ** 2), 0.0))

    if l.size >= min_ess and np.ptp(l) > 0:
        domain = (-_ess_edge(l, -1.0, min_ess), _ess_edge(l, 1.0, min_ess))
    else:
        domain = (0.0, 0.0)
    return Cgf(
        value=value,
        d1=d1,
        d2=d2,
        domain=domain,
        scale=float(np.mean(np.abs(l))) + float(np.var(l)),
        name="empirical",
    )


def cgf_sum(terms: Sequence[tuple[Cgf, float]], alphas: Optional[Sequence[float]] = None) -> Cgf:
    """CGF of ``sum_i sum_{m_i copies} alpha_i L_i``: ``s -> sum_i m_i kappa_i(alpha_i s)``."""
    if alphas is None:
        alphas = [1.0] * len(terms)
    if len(alphas) != len(terms):
        raise ValueError("one correction factor per term is required")
    parts = [(c.scaled(a), float(m)) for (c, m), a in zip(terms, alphas) if m]
    if not parts:
        raise ValueError("composite CGF needs at least one term with nonzero multiplicity")
    lo = max(c.domain[0] for c, _ in parts)
    hi = min(c.domain[1] for c, _ in parts)
    brackets = [c.bracket for c, _ in parts]
    bracket = None
    if all(b is not None for b in brackets):
        # every term is negative at its left end and non-negative at its right end
        bracket = (min(b[0] for b in brackets), max(b[1] for b in brackets))
    return Cgf(
        value=lambda s: sum(m * c.value(s) for c, m in parts),
        d1=lambda s: sum(m * c.d1(s) for c, m in parts),
        d2=lambda s: sum(m * c.d2(s) for c, m in parts),
        domain=(lo, hi),
        bracket=bracket,
        seed=max(c.seed for c, _ in parts),
        scale=sum(m * c.scale for c, m in parts),
        name="sum",
    )


def _find_bracket(cgf: Cgf, s0: float) -> tuple[float, float]:
    lo_dom, hi_dom = cgf.domain
    f0 = cgf.d1(s0)
    if f0 == 0:
        return s0, s0
    direction = 1.0 if f0 < 0 else -1.0
    step = 1.0 / math.sqrt(max(cgf.d2(s0), 1e-300))
    a = s0
    for _ in range(200):
        b = a + direction * step
        if not cgf.contains(b):
            edge = hi_dom if direction > 0 else lo_dom
            b = 0.5 * (a + edge) if math.isfinite(edge) else b
            if not cgf.contains(b) or abs(b - a) < 1e-15 * max(1.0, abs(a)):
                break
        fb = cgf.d1(b)
        if (fb >= 0) if direction > 0 else (fb <= 0):
            return (a, b) if direction > 0 else (b, a)
        a = b
        step *= 2.0
    raise NoSaddlepointError(
        f"derivative of {cgf.name or 'CGF'} keeps one sign on {cgf.domain} starting from {s0:g}"
    )


def find_saddlepoint(
    cgf: Cgf,
    seed_s: Optional[float] = None,
    tol: Optional[float] = None,
    max_iter: int = 100,
) -> SaddlepointResult:
    """Minimize a convex CGF by safeguarded Newton-Raphson.

    Newton steps are taken from ``seed_s`` (default ``cgf.seed``); whenever a
    step leaves the current sign-bracketing interval or does not reduce
    ``|kappa'|`` it is replaced by a bisection step. The default tolerance is
    ``1e-10 * cgf.scale``.

    Raises
    ------
    NoSaddlepointError
        If ``kappa'`` does not change sign on the CGF's domain.
    """
    if tol is None:
        tol = 1e-10 * cgf.scale
    if not tol > 0:
        raise ValueError("tol must be positive")
    s = cgf.seed if seed_s is None else float(seed_s)
    if not cgf.contains(s):
        lo_dom, hi_dom = cgf.domain
        if not lo_dom < hi_dom:
            raise NoSaddlepointError("empty CGF domain")
        s = min(max(s, lo_dom), hi_dom)
        s = 0.5 * (lo_dom + hi_dom) if not cgf.contains(s) else s

    f = cgf.d1(s)
    if abs(f) <= tol:
        return SaddlepointResult(s, 0, True, abs(f))

    if cgf.bracket is not None and cgf.d1(cgf.bracket[0]) < 0 <= cgf.d1(cgf.bracket[1]):
        a, b = cgf.bracket
    else:
        a, b = _find_bracket(cgf, s)
    for it in range(1, max_iter + 1):
        # the iterate may sit outside the bracket (a seed before bracketing); never widen it
        if f < 0:
            a = max(a, s)
        else:
            b = min(b, s)
        d2 = cgf.d2(s)
        cand = s - f / d2 if d2 > 0 else math.nan
        fc = cgf.d1(cand) if a <= cand <= b else math.nan
        if not abs(fc) < abs(f):
            cand = 0.5 * (a + b)
            fc = cgf.d1(cand)
        s, f = cand, fc
        if abs(f) <= tol:
            return SaddlepointResult(s, it, True, abs(f))
        if b - a <= 4 * np.finfo(float).eps * max(1.0, abs(s)):
            break
    return SaddlepointResult(s, max_iter, abs(f) <= tol, abs(f))


def newton_saddlepoint(cgf: Cgf, s0: float, iterations: int) -> float:
    """Plain Newton-Raphson with a fixed iteration count and no safeguards."""
    s = float(s0)
    for _ in range(iterations):
        s -= cgf.d1(s) / cgf.d2(s)
    return s


def saddle_seed_low_snr(p: ChannelParams) -> float:
    """Low-SNR saddlepoint ``h / (sigma2_z + g^2)`` from linearizing ``tanh``."""
    return p.h / p.sigma2_ni


def saddle_seed_high_snr(p: ChannelParams) -> float:
    """High-SNR saddlepoint ``(h - g) / sigma2_z`` from saturating ``tanh``."""
    p.require_weak_interference()
    return (p.h - p.g) / p.sigma2_z


def observation_saddlepoint(h, g, sigma2_z, tol: float = 1e-12, max_iter: int = 100) -> np.ndarray:
    """Vectorized saddlepoint of the observation CGF over arrays of channel states.

    ``kappa'`` is increasing and concave for ``s >= 0``, and the seed
    ``max(h/(sigma2_z+g^2), (h-g)/sigma2_z)`` never exceeds the root, so
    Newton iterates rise monotonically to the root without overshooting.
    ``g >= h`` is allowed.
    """
    h, g, s2 = np.broadcast_arrays(
        np.asarray(h, dtype=float), np.asarray(g, dtype=float), np.asarray(sigma2_z, dtype=float)
    )
    s = np.maximum(h / (s2 + g * g), (h - g) / s2)
    scale = h + s2
    for _ in range(max_iter):
        f = -h + s2 * s + g * np.tanh(g * s)
        if np.all(np.abs(f) <= tol * scale):
            break
        s = s - f / (s2 + g * g * _sech2(g * s))
    return s
