"""Run harnesses: correction-factor sweeps, the GMI lookup table and coded BER.

Conventions shared by the harnesses:

* sweeps use ``h = 1``, ``sigma2_z = 1 / (2 SNR)`` and ``g = 10^(-SIR/20)``;
* BER runs use Rayleigh ``h_n`` with ``E[h^2] = 1`` so the average SNR is
  ``1/N0``; the interference gain is set by ``interference`` (see
  :class:`BerConfig`).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Iterable, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import rng as _rng
from .cgf import observation_saddlepoint
from .correction import (
    DEFAULT_QUAD_ORDER,
    GMI_SNR_CAP_DB,
    CorrectionEstimate,
    MixturePdf,
    alpha_gauss_moment,
    alpha_gmi,
    alpha_gmi_channel,
    alpha_high_snr,
    alpha_low_snr,
    alpha_saddlepoint_channel,
    alpha_wlsf,
)
from .fec import ConvCodeSpec, conv_encode, viterbi_soft_batch
from .llr import ChannelParams, interference_llr
from .pep import alpha_grid_2sm

__all__ = [
    "SweepConfig",
    "BerConfig",
    "BerRow",
    "BerResult",
    "GmiTable",
    "METHODS",
    "LLR_MODES",
    "alpha_by_method",
    "run_alpha_sweep",
    "build_gmi_table",
    "default_gmi_table",
    "run_ber",
    "format_number",
    "write_csv",
]

METHODS = ("saddlepoint", "gmi", "wlsf", "gauss_moment", "low_snr", "high_snr", "grid_2sm")
LLR_MODES = ("uncorrected", "saddlepoint", "gmi_table", "gauss0", "true")
INTERFERENCE_MODES = ("fixed", "proportional", "rayleigh")


def format_number(x: Any) -> str:
    """CSV rendering: integers as-is, reals with 10 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.10g}"
    return "" if x is None else str(x)


def write_csv(rows: Iterable[dict], columns: Sequence[str], out: Optional[io.TextIOBase] = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_number(row.get(c)) for c in columns])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


# --------------------------------------------------------------------------- sweeps


@dataclass
class SweepConfig:
    snr_db_grid: list[float]
    sir_db_grid: list[float]
    methods: list[str] = field(default_factory=lambda: ["saddlepoint", "gmi", "wlsf"])
    quad_order: int = DEFAULT_QUAD_ORDER
    seed: int = 0
    d1: int = 4
    d2: int = 4
    gmi_fallback: bool = False

    def __post_init__(self):
        if not self.snr_db_grid or not self.sir_db_grid:
            raise ValueError("SNR and SIR grids must be non-empty")
        if not self.methods:
            raise ValueError("at least one method is required")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")


def alpha_by_method(p: ChannelParams, method: str, quad_order: int = DEFAULT_QUAD_ORDER,
                    d1: int = 4, d2: int = 4, gmi_fallback: bool = False) -> CorrectionEstimate:
    if method == "saddlepoint":
        return alpha_saddlepoint_channel(p)
    if method == "gmi":
        if gmi_fallback:
            return alpha_gmi_channel(p, quad_order)
        return alpha_gmi(MixturePdf.mismatched(p), quad_order)
    if method == "wlsf":
        return alpha_wlsf(MixturePdf.mismatched(p), quad_order)
    if method == "gauss_moment":
        return alpha_gauss_moment(MixturePdf.mismatched(p))
    if method == "low_snr":
        return alpha_low_snr(p)
    if method == "high_snr":
        return alpha_high_snr(p)
    if method == "grid_2sm":
        return alpha_grid_2sm(p, d1, d2)
    raise ValueError(f"unknown method {method!r}")


def run_alpha_sweep(cfg: SweepConfig) -> list[dict]:
    """One row per (SNR, SIR, method); estimator failures become rows with ``flag='error: ...'``."""
    rows = []
    for sir_db in cfg.sir_db_grid:
        for snr_db in cfg.snr_db_grid:
            p = ChannelParams.from_db(snr_db, sir_db)
            for method in cfg.methods:
                row = {"snr_db": snr_db, "sir_db": sir_db, "method": method, "alpha": math.nan, "flag": ""}
                try:
                    est = alpha_by_method(p, method, cfg.quad_order, cfg.d1, cfg.d2, cfg.gmi_fallback)
                except (ValueError, ArithmeticError) as exc:
                    row["flag"] = f"error: {exc}"
                else:
                    row["alpha"] = est.alpha
                    flags = [str(est.diagnostics[k]) for k in ("flag", "fallback") if k in est.diagnostics]
                    row["flag"] = ";".join(flags)
                rows.append(row)
    return rows


SWEEP_COLUMNS = ("snr_db", "sir_db", "method", "alpha", "flag")


# --------------------------------------------------------------------------- GMI table


@dataclass
class GmiTable:
    """Bilinear lookup of the GMI correction factor over (instantaneous SNR, SIR) in dB.

    Queries above ``snr_cap_db`` or outside the grid get the saddlepoint
    factor instead.
    """

    snr_db: np.ndarray
    sir_db: np.ndarray
    values: np.ndarray
    flags: np.ndarray
    snr_cap_db: float = GMI_SNR_CAP_DB

    def __post_init__(self):
        self._interp = RegularGridInterpolator((self.snr_db, self.sir_db), self.values, method="linear")

    def __call__(self, snr_db, sir_db) -> np.ndarray:
        snr_db, sir_db = np.broadcast_arrays(np.asarray(snr_db, dtype=float), np.asarray(sir_db, dtype=float))
        inside = (
            (snr_db >= self.snr_db[0]) & (snr_db <= min(self.snr_db[-1], self.snr_cap_db))
            & (sir_db >= self.sir_db[0]) & (sir_db <= self.sir_db[-1])
        )
        out = np.empty(snr_db.shape)
        if np.any(inside):
            out[inside] = self._interp(np.stack([snr_db[inside], sir_db[inside]], axis=-1))
        if np.any(~inside):
            # unit signal gain: sigma2_z = 1/(2 snr), g = 10^(-sir/20)
            s2 = 0.5 * 10.0 ** (-snr_db[~inside] / 10.0)
            g = 10.0 ** (-sir_db[~inside] / 20.0)
            out[~inside] = s2 * observation_saddlepoint(1.0, g, s2)
        return out

    def coverage(self, snr_db, sir_db) -> float:
        """Fraction of queries answered from the table rather than the fallback."""
        snr_db, sir_db = np.asarray(snr_db), np.asarray(sir_db)
        inside = (
            (snr_db >= self.snr_db[0]) & (snr_db <= min(self.snr_db[-1], self.snr_cap_db))
            & (sir_db >= self.sir_db[0]) & (sir_db <= self.sir_db[-1])
        )
        return float(np.mean(inside))


def build_gmi_table(snr_db_grid: Sequence[float], sir_db_grid: Sequence[float],
                    quad_order: int = DEFAULT_QUAD_ORDER) -> GmiTable:
    """Tabulate the GMI factor; failed nodes hold the saddlepoint factor and ``flags=True``."""
    snr = np.asarray(snr_db_grid, dtype=float)
    sir = np.asarray(sir_db_grid, dtype=float)
    if snr.size < 2 or sir.size < 2:
        raise ValueError("table grids need at least two points per axis")
    values = np.empty((snr.size, sir.size))
    flags = np.zeros((snr.size, sir.size), dtype=bool)
    for i, snr_db in enumerate(snr):
        for j, sir_db in enumerate(sir):
            p = ChannelParams.from_db(snr_db, sir_db)
            try:
                values[i, j] = alpha_gmi(MixturePdf.mismatched(p), quad_order).alpha
            except ValueError:
                values[i, j] = alpha_saddlepoint_channel(p).alpha
                flags[i, j] = True
    return GmiTable(snr, sir, values, flags)


@lru_cache(maxsize=4)
def default_gmi_table(step_db: float = 0.5, quad_order: int = DEFAULT_QUAD_ORDER) -> GmiTable:
    """Table over SNR in [-20, 15] dB and SIR in [-10, 40] dB."""
    snr = np.arange(-20.0, GMI_SNR_CAP_DB + step_db / 2, step_db)
    sir = np.arange(-10.0, 40.0 + step_db / 2, step_db)
    return build_gmi_table(snr, sir, quad_order)


# --------------------------------------------------------------------------- BER


@dataclass
class BerConfig:
    """Coded BER run over Rayleigh fading with BPSK interference.

    ``interference`` selects how the interference gain relates to the
    average SIR ``s``: ``fixed`` uses ``g = 10^(-s/20)`` for every symbol,
    ``proportional`` uses ``g_n = h_n 10^(-s/20)`` (constant instantaneous
    SIR), ``rayleigh`` draws ``g_n`` as an independent Rayleigh amplitude with
    ``E[g^2] = 10^(-s/10)``.
    """

    snr_db_grid: list[float]
    llr_mode: str = "saddlepoint"
    seed: int = 0
    sir_db: float = 6.0
    block_info_bits: int = 1000
    generators: tuple[int, ...] = (0o15, 0o17)
    constraint_length: int = 4
    min_errors: int = 200
    max_blocks: int = 100_000
    chunk_blocks: int = 100
    interference: str = "fixed"
    gmi_step_db: float = 0.5
    quad_order: int = DEFAULT_QUAD_ORDER

    def __post_init__(self):
        self.generators = tuple(int(g) for g in self.generators)
        if not self.snr_db_grid:
            raise ValueError("snr_db_grid must be non-empty")
        if self.llr_mode not in LLR_MODES:
            raise ValueError(f"llr_mode must be one of {LLR_MODES}")
        if self.interference not in INTERFERENCE_MODES:
            raise ValueError(f"interference must be one of {INTERFERENCE_MODES}")
        if self.block_info_bits < 1 or self.max_blocks < 1 or self.chunk_blocks < 1:
            raise ValueError("block size, max_blocks and chunk_blocks must be positive")
        if self.min_errors < 1:
            raise ValueError("min_errors must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        ConvCodeSpec(self.generators, self.constraint_length)

    @property
    def code(self) -> ConvCodeSpec:
        return ConvCodeSpec(self.generators, self.constraint_length)


@dataclass(frozen=True)
class BerRow:
    snr_db: float
    mode: str
    blocks: int
    bit_errors: int
    bits: int
    error_sq: Optional[int] = None

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else math.nan

    @property
    def stderr(self) -> float:
        """Standard error of :attr:`ber`.

        With ``error_sq`` (sum over blocks of squared bit-error counts) the
        blocks are treated as the independent units, which accounts for the
        burst structure of decoder errors. Without it the binomial formula
        for independent bits is used.
        """
        if not self.bits:
            return math.nan
        if self.error_sq is None or self.blocks < 2:
            b = self.ber
            return math.sqrt(b * (1.0 - b) / self.bits)
        var = (self.error_sq - self.bit_errors**2 / self.blocks) / (self.blocks - 1)
        return math.sqrt(max(var, 0.0) / self.blocks) * self.blocks / self.bits

    @property
    def reportable(self) -> bool:
        return self.bit_errors >= 50

    def as_dict(self) -> dict:
        return {"snr_db": self.snr_db, "mode": self.mode, "blocks": self.blocks,
                "bit_errors": self.bit_errors, "ber": self.ber, "stderr": self.stderr}


@dataclass
class BerResult:
    rows: list[BerRow]
    config: BerConfig

    def row(self, snr_db: float) -> BerRow:
        for r in self.rows:
            if r.snr_db == snr_db:
                return r
        raise KeyError(snr_db)


BER_COLUMNS = ("snr_db", "mode", "blocks", "bit_errors", "ber", "stderr")


def _draw_channel(cfg: BerConfig, n_sym: int, snr_idx: int, block: int):
    gen = _rng.stream(cfg.seed, snr_idx, block)
    bits = gen.integers(0, 2, size=cfg.block_info_bits + n_sym, dtype=np.int8)
    u, d = bits[: cfg.block_info_bits], 2.0 * bits[cfg.block_info_bits :] - 1.0
    w = gen.normal(size=(3, n_sym))
    h = np.sqrt(0.5 * (w[0] ** 2 + w[1] ** 2))
    z = w[2]
    rho = 10.0 ** (-cfg.sir_db / 20.0)
    if cfg.interference == "fixed":
        g = np.full(n_sym, rho)
    elif cfg.interference == "proportional":
        g = h * rho
    else:
        gc = gen.normal(size=(2, n_sym))
        g = rho * np.sqrt(0.5 * (gc[0] ** 2 + gc[1] ** 2))
    return u, h, g, d, z


def _llrs(cfg: BerConfig, y, h, g, s2, table: Optional[GmiTable]):
    l_mm = 2.0 * h * y / s2
    mode = cfg.llr_mode
    if mode == "uncorrected":
        return l_mm
    if mode == "gauss0":
        return l_mm * s2 / (s2 + g * g)
    if mode == "saddlepoint":
        return 2.0 * observation_saddlepoint(h, g, s2) * y
    if mode == "gmi_table":
        snr_db = 10.0 * np.log10(h * h / (2.0 * s2))
        with np.errstate(divide="ignore"):
            sir_db = np.where(g > 0, 20.0 * np.log10(h / np.where(g > 0, g, 1.0)), np.inf)
        return table(snr_db, sir_db) * l_mm
    return interference_llr(y, h, g, s2)


def _simulate_blocks(cfg: BerConfig, snr_idx: int, snr_db: float, blocks: range,
                     table: Optional[GmiTable]) -> tuple[int, int]:
    spec = cfg.code
    n_sym = spec.codeword_length(cfg.block_info_bits)
    s2 = 0.5 * 10.0 ** (-snr_db / 10.0)
    draws = [_draw_channel(cfg, n_sym, snr_idx, b) for b in blocks]
    u = np.stack([d[0] for d in draws])
    h, g, dd, z = (np.stack([d[k] for d in draws]) for k in (1, 2, 3, 4))
    x = 2.0 * conv_encode(u, spec) - 1.0
    y = h * x + math.sqrt(s2) * z + g * dd
    l = _llrs(cfg, y, h, g, s2, table)
    bits, _ = viterbi_soft_batch(l, spec)
    per_block = np.count_nonzero(bits != u, axis=1).astype(np.int64)
    return int(per_block.sum()), int((per_block**2).sum())


def run_ber(cfg: BerConfig, workers: int = 1) -> BerResult:
    """Simulate each SNR point until ``min_errors`` bit errors or ``max_blocks`` blocks.

    Blocks are processed in chunks that start at ``cfg.chunk_blocks`` and grow
    with the blocks already simulated (up to 20x); the stopping rule is
    checked between chunks. Each block's randomness is keyed by
    ``(seed, snr index, block index)``, so the output does not depend on
    ``workers`` and the channel draws are shared across LLR modes.
    """
    table = default_gmi_table(cfg.gmi_step_db, cfg.quad_order) if cfg.llr_mode == "gmi_table" else None
    rows = []
    for snr_idx, snr_db in enumerate(cfg.snr_db_grid):
        errors = error_sq = blocks = 0
        while errors < cfg.min_errors and blocks < cfg.max_blocks:
            # chunks grow with the blocks already simulated, up to 20x the base size
            n = min(max(cfg.chunk_blocks, min(blocks, 20 * cfg.chunk_blocks)), cfg.max_blocks - blocks)
            sub = max(1, math.ceil(n / max(workers, 1)))
            pieces = [range(blocks + i, blocks + min(i + sub, n)) for i in range(0, n, sub)]
            for e, e2 in _rng.map_blocks(
                    lambda k: _simulate_blocks(cfg, snr_idx, snr_db, pieces[k], table), len(pieces), workers):
                errors += e
                error_sq += e2
            blocks += n
        rows.append(BerRow(float(snr_db), cfg.llr_mode, blocks, errors, blocks * cfg.block_info_bits, error_sq))
    return BerResult(rows, cfg)
