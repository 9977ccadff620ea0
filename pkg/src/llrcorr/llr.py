"""BPSK over a Gaussian channel with BPSK interference, and its L-values.

Observation model (one symbol)::

    y = h * x + z + g * d,   x = 2c - 1,   d uniform on {-1, +1},   z ~ N(0, sigma2_z)

L-values follow the convention ``l = log p(y | c=1) / p(y | c=0)``, so the
maximum-likelihood decoder maximizes ``sum(l * c)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import rng as _rng

__all__ = [
    "ChannelParams",
    "LValueKind",
    "LValueBatch",
    "BitConvention",
    "true_llr",
    "interference_llr",
    "mismatched_llr",
    "sample_llrs",
    "empirical_consistency_check",
]


@dataclass(frozen=True)
class ChannelParams:
    """Channel gain ``h``, interference gain ``g`` and noise variance ``sigma2_z = N0/2``.

    ``g < h`` is not enforced here: under fading the instantaneous interference
    can exceed the signal. Operations that need ``g < h`` check it themselves.
    """

    h: float
    g: float
    sigma2_z: float

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"h must be positive and finite, got {self.h}")
        if not (self.g >= 0 and math.isfinite(self.g)):
            raise ValueError(f"g must be non-negative and finite, got {self.g}")
        if not (self.sigma2_z > 0 and math.isfinite(self.sigma2_z)):
            raise ValueError(f"sigma2_z must be positive and finite, got {self.sigma2_z}")

    @classmethod
    def from_db(cls, snr_db: float, sir_db: float, h: float = 1.0) -> "ChannelParams":
        """Build from SNR = h^2/N0 and SIR = h^2/g^2 in dB (``sir_db=inf`` gives g=0)."""
        snr = 10.0 ** (snr_db / 10.0)
        g = 0.0 if math.isinf(sir_db) and sir_db > 0 else h * 10.0 ** (-sir_db / 20.0)
        return cls(h=h, g=g, sigma2_z=h * h / (2.0 * snr))

    @property
    def n0(self) -> float:
        return 2.0 * self.sigma2_z

    @property
    def snr(self) -> float:
        return self.h**2 / self.n0

    @property
    def sir(self) -> float:
        return math.inf if self.g == 0 else self.h**2 / self.g**2

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr)

    @property
    def sir_db(self) -> float:
        return math.inf if self.g == 0 else 10.0 * math.log10(self.sir)

    @property
    def sigma2_ni(self) -> float:
        """Variance of noise plus interference."""
        return self.sigma2_z + self.g**2

    def require_weak_interference(self) -> None:
        if not self.g < self.h:
            raise ValueError(f"operation requires g < h (got g={self.g}, h={self.h})")


class LValueKind(str, Enum):
    MATCHED = "matched"
    MISMATCHED = "mismatched"
    CORRECTED = "corrected"


class BitConvention:
    """Bits c in {0, 1} map to symbols ``2c - 1``; decoders maximize ``sum(l * c)``."""

    @staticmethod
    def to_symbols(bits):
        return 2 * np.asarray(bits, dtype=np.int8) - 1

    @staticmethod
    def metric(llrs, bits) -> float:
        return float(np.dot(np.asarray(llrs, dtype=float), np.asarray(bits, dtype=float)))


@dataclass
class LValueBatch:
    """L-values conditioned on a transmitted zero (after scrambling sign-flip).

    ``bits`` keeps the scrambled bit drawn for each sample, so the two halves
    of the batch can be compared.
    """

    samples: np.ndarray
    kind: LValueKind
    params: ChannelParams
    bits: Optional[np.ndarray] = field(default=None, repr=False)
    alpha: float = 1.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")
        self.kind = LValueKind(self.kind)

    def __len__(self) -> int:
        return self.samples.size

    def mean(self) -> float:
        return float(self.samples.mean())

    def stderr(self) -> float:
        return float(self.samples.std(ddof=1) / math.sqrt(len(self)))


def _logcosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - math.log(2.0)


def interference_llr(y, h, g, sigma2_z, method: str = "logcosh"):
    """Exact L-value for arrays of observations and per-symbol gains.

    ``method="sumexp"`` evaluates the ratio of two-term likelihood sums as a
    difference of pairwise log-sum-exps. ``method="logcosh"`` (default) uses
    the algebraically equal ``2hy/s2 + logcosh(g(y-h)/s2) - logcosh(g(y+h)/s2)``,
    which is cheaper. Neither overflows for large ``|y|``.
    """
    y = np.asarray(y, dtype=float)
    s2 = np.asarray(sigma2_z, dtype=float)
    if method == "logcosh":
        return 2.0 * h * y / s2 + _logcosh(g * (y - h) / s2) - _logcosh(g * (y + h) / s2)
    if method != "sumexp":
        raise ValueError(f"unknown method {method!r}")
    two_s2 = 2.0 * s2
    num = np.logaddexp(-((y - h - g) ** 2) / two_s2, -((y - h + g) ** 2) / two_s2)
    den = np.logaddexp(-((y + h - g) ** 2) / two_s2, -((y + h + g) ** 2) / two_s2)
    return num - den


def true_llr(y, p: ChannelParams, method: str = "logcosh"):
    """Exact L-value of the interference channel (two-term mixture likelihoods).

    Both evaluation forms of :func:`interference_llr` are overflow-free; the
    default ``logcosh`` form also reduces exactly to ``2 h y / sigma2_z`` when
    ``g = 0``.
    """
    out = interference_llr(y, p.h, p.g, p.sigma2_z, method)
    return float(out) if np.ndim(out) == 0 else out


def mismatched_llr(y, p: ChannelParams):
    """L-value computed as if the interference were absent: ``2 h y / sigma2_z``."""
    y = np.asarray(y, dtype=float)
    out = 2.0 * p.h * y / p.sigma2_z
    return float(out) if out.ndim == 0 else out


def _draw_block(p: ChannelParams, kind: LValueKind, alpha: float, size: int, gen: np.random.Generator):
    c = gen.integers(0, 2, size=size, dtype=np.int8)
    d = 2.0 * gen.integers(0, 2, size=size) - 1.0
    z = gen.normal(0.0, math.sqrt(p.sigma2_z), size=size)
    y = p.h * (2.0 * c - 1.0) + z + p.g * d
    if kind is LValueKind.MATCHED:
        l = true_llr(y, p)
    else:
        l = mismatched_llr(y, p)
        if kind is LValueKind.CORRECTED:
            l = alpha * l
    # scrambling: the sign is flipped wherever a one was sent
    l = np.where(c == 1, -l, l)
    return l, c


def sample_llrs(
    p: ChannelParams,
    kind: LValueKind | str,
    n: int,
    seed: int,
    alpha: Optional[float] = None,
    workers: int = 1,
) -> LValueBatch:
    """Draw ``n`` L-values of the requested kind, conditioned on a transmitted zero.

    Draws are made in fixed-size blocks, each from its own counter-keyed
    stream, so the batch does not depend on ``workers``.

    For ``kind="corrected"`` the mismatched L-values are scaled by ``alpha``;
    when ``alpha`` is omitted the saddlepoint correction factor is used.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    kind = LValueKind(kind)
    if kind is LValueKind.CORRECTED:
        if alpha is None:
            from .correction import alpha_saddlepoint_channel

            alpha = alpha_saddlepoint_channel(p).alpha
    else:
        alpha = 1.0
    sizes = _rng.block_sizes(n)

    def work(i):
        return _draw_block(p, kind, alpha, sizes[i], _rng.stream(seed, i))

    parts = _rng.map_blocks(work, len(sizes), workers)
    samples = np.concatenate([l for l, _ in parts])
    bits = np.concatenate([c for _, c in parts])
    return LValueBatch(samples=samples, kind=kind, params=p, bits=bits, alpha=alpha)


def empirical_consistency_check(
    batch: LValueBatch,
    bins: int = 40,
    min_count: int = 100,
    span: Optional[float] = None,
) -> float:
    """Largest violation of the consistency-symmetry condition seen in a histogram.

    Bins are equal-width and symmetric about zero, covering ``+-span``
    (default six times the root-mean-square of the samples). For every bin
    ``B`` whose mirror ``-B`` is also populated by at least ``min_count``
    samples, the log count ratio ``log n(-B)/n(B)`` is compared with
    ``log mean_{l in B} exp(l)``, which is what the ratio converges to when
    ``p(-l|0) = exp(l) p(l|0)``; the maximum absolute gap is returned.

    Raises
    ------
    ValueError
        If ``bins < 10`` or no mirrored bin pair is populated enough.
    """
    if bins < 10:
        raise ValueError("bins must be at least 10")
    l = batch.samples
    if span is None:
        span = 6.0 * float(np.sqrt(np.mean(l**2)))
    if not span > 0:
        raise ValueError("degenerate batch: zero spread")
    edges = np.linspace(-span, span, 2 * bins + 1)
    inside = (l >= -span) & (l < span)
    idx = np.searchsorted(edges, l[inside], side="right") - 1
    idx = np.clip(idx, 0, 2 * bins - 1)
    counts = np.bincount(idx, minlength=2 * bins)
    # log of the per-bin mean of exp(l), accumulated stably
    shift = np.full(2 * bins, -np.inf)
    np.maximum.at(shift, idx, l[inside])
    safe = np.where(np.isfinite(shift), shift, 0.0)
    acc = np.bincount(idx, weights=np.exp(l[inside] - safe[idx]), minlength=2 * bins)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_tilt = safe + np.log(acc) - np.log(counts)

    mirror = counts[::-1]
    # each pair is scored from its more populated member, where the tilted mean is steadier
    dense = ok = (counts >= min_count) & (mirror >= min_count) & (counts >= mirror)
    if not np.any(ok):
        raise ValueError("no mirrored bin pair holds enough samples")
    gap = np.log(mirror[dense] / counts[dense]) - log_tilt[dense]
    return float(np.max(np.abs(gap)))
