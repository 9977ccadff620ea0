"""Feed-forward convolutional codes and a soft-input Viterbi decoder.

Generators are octal, most significant tap on the current input bit, e.g.
``(0o15, 0o17)`` for the rate-1/2, constraint-length-4 code. The decoder
finds the codeword maximizing ``sum(l * c)`` over the terminated trellis.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

__all__ = ["ConvCodeSpec", "TrellisPath", "conv_encode", "viterbi_soft", "viterbi_soft_batch"]


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


@dataclass(frozen=True)
class ConvCodeSpec:
    generators: tuple[int, ...] = (0o15, 0o17)
    constraint_length: int = 4

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(int(g) for g in self.generators))
        if self.constraint_length < 2:
            raise ValueError("constraint length must be at least 2")
        if not self.generators:
            raise ValueError("at least one generator is required")
        for g in self.generators:
            if not 0 < g < (1 << self.constraint_length):
                raise ValueError(f"generator {g:o} does not fit in constraint length {self.constraint_length}")

    @classmethod
    def from_octal(cls, generators: str, constraint_length: int) -> "ConvCodeSpec":
        return cls(tuple(int(g, 8) for g in generators.split(",")), constraint_length)

    @property
    def rate(self) -> Fraction:
        return Fraction(1, len(self.generators))

    @property
    def n_out(self) -> int:
        return len(self.generators)

    @property
    def memory(self) -> int:
        return self.constraint_length - 1

    @property
    def n_states(self) -> int:
        return 1 << self.memory

    @cached_property
    def trellis(self):
        """Transition tables indexed by state and input bit.

        The state holds the previous ``K-1`` inputs, newest in the most
        significant position.
        """
        m, S = self.memory, self.n_states
        next_state = np.zeros((S, 2), dtype=np.int64)
        outputs = np.zeros((S, 2, self.n_out), dtype=np.int8)
        for s in range(S):
            for u in (0, 1):
                reg = (u << m) | s
                next_state[s, u] = reg >> 1
                outputs[s, u] = [_parity(reg & g) for g in self.generators]
        return next_state, outputs

    def codeword_length(self, n_info: int, terminated: bool = True) -> int:
        return (n_info + (self.memory if terminated else 0)) * self.n_out


@dataclass
class TrellisPath:
    bits: np.ndarray
    metric: float


def conv_encode(bits, spec: ConvCodeSpec = ConvCodeSpec(), terminated: bool = True) -> np.ndarray:
    """Encode a bit sequence; ``terminated`` appends ``K-1`` zero tail bits.

    Accepts a 1-D sequence or a 2-D array of messages (one per row).
    """
    u = np.asarray(bits, dtype=np.int8)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    if terminated:
        u = np.concatenate([u, np.zeros((u.shape[0], spec.memory), dtype=np.int8)], axis=1)
    B, T = u.shape
    padded = np.concatenate([np.zeros((B, spec.memory), dtype=np.int8), u], axis=1)
    out = np.empty((B, T, spec.n_out), dtype=np.int8)
    K = spec.constraint_length
    for j, g in enumerate(spec.generators):
        acc = np.zeros((B, T), dtype=np.int8)
        for tap in range(K):
            if (g >> (K - 1 - tap)) & 1:
                # tap 0 is the current input, tap i the input i steps back
                acc ^= padded[:, spec.memory - tap : spec.memory - tap + T]
        out[:, :, j] = acc
    cw = out.reshape(B, T * spec.n_out)
    return cw[0] if single else cw


def viterbi_soft_batch(llrs, spec: ConvCodeSpec = ConvCodeSpec(), terminated: bool = True):
    """Decode a batch of L-value rows; returns ``(bits, metrics)``.

    Equal path metrics are resolved in favour of the lower-numbered
    predecessor state.
    """
    L = np.asarray(llrs, dtype=float)
    if L.ndim != 2:
        raise ValueError("llrs must be 2-D (blocks x codeword length)")
    B, N = L.shape
    if N % spec.n_out:
        raise ValueError(f"L-value count {N} is not a multiple of {spec.n_out}")
    T = N // spec.n_out
    n_info = T - (spec.memory if terminated else 0)
    if n_info < 1:
        raise ValueError("codeword too short for the trellis termination")

    next_state, outputs = spec.trellis
    S, m, n = spec.n_states, spec.memory, spec.n_out
    # predecessor p in {0, 1} of state ns: prev = ((ns << 1) & mask) | p, input = ns >> (m-1)
    mask = S - 1
    ns = np.arange(S)
    prev = np.stack([((ns << 1) & mask) | p for p in (0, 1)], axis=1)
    u_in = ns >> (m - 1)
    # label each transition prev -> ns by its output word, read as a binary number
    words = outputs[prev, u_in[:, None]] @ (1 << np.arange(n - 1, -1, -1))
    combos = (np.arange(1 << n)[:, None] >> np.arange(n - 1, -1, -1)) & 1
    # gains[t, b, w] = sum_j l[b, t, j] * bit_j(w), time-major for contiguous steps
    gains = np.ascontiguousarray(L.reshape(B, T, n).transpose(1, 0, 2)) @ combos.T.astype(float)
    prev0, prev1 = prev[:, 0], prev[:, 1]
    w0, w1 = words[:, 0], words[:, 1]

    metric = np.full((B, S), -np.inf)
    metric[:, 0] = 0.0
    decisions = np.empty((T, B, S), dtype=bool)
    for t in range(T):
        g = gains[t]
        c0 = metric[:, prev0] + g[:, w0]
        c1 = metric[:, prev1] + g[:, w1]
        # strict comparison: ties keep the lower predecessor
        np.greater(c1, c0, out=decisions[t])
        metric = np.maximum(c0, c1)

    if terminated:
        state = np.zeros(B, dtype=np.int64)
        final = metric[:, 0]
    else:
        state = np.argmax(metric, axis=1)
        final = metric[np.arange(B), state]
    bits = np.empty((B, T), dtype=np.int8)
    rows = np.arange(B)
    for t in range(T - 1, -1, -1):
        bits[:, t] = state >> (m - 1)
        p = decisions[t, rows, state]
        state = ((state << 1) & mask) | p
    return bits[:, :n_info], final


def viterbi_soft(llrs, spec: ConvCodeSpec = ConvCodeSpec(), terminated: bool = True) -> TrellisPath:
    """Maximum-likelihood sequence decoding of one block of L-values."""
    llrs = np.asarray(llrs, dtype=float)
    if llrs.ndim != 1:
        raise ValueError("llrs must be 1-D")
    bits, metric = viterbi_soft_batch(llrs[None, :], spec, terminated)
    return TrellisPath(bits[0], float(metric[0]))
