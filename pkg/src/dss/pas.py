"""Probabilistic amplitude shaping framing around the ESS matcher.

4D mapping convention: amplitudes ``a[4j:4j+4]`` go to (I1, Q1, I2, Q2) of
4D symbol ``j``; sign bit 0 means ``+``, 1 means ``-``.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .core import DualPolSymbolBlock
from .ess import EnergyTrellis, amplitude_distribution, empirical_amplitude_distribution, entropy_bits

# bits per real dimension for 8-PAM (one sign bit + two amplitude bits)
BITS_PER_DIM = 3


@dataclass(frozen=True)
class DmChainConfig:
    """``n`` cascaded ESS matchers of block length ``l``, each with ``nu`` flipping bits."""

    n: int
    nu: int
    trellis: EnergyTrellis

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.nu <= self.trellis.k:
            raise ValueError("nu must lie in [0, k]")
        if (self.l * self.n) % 4:
            raise ValueError("l * n must be a multiple of 4")

    @property
    def l(self) -> int:
        return self.trellis.l

    @property
    def k(self) -> int:
        return self.trellis.k

    @property
    def n_amplitudes(self) -> int:
        return self.l * self.n

    @property
    def n_symbols(self) -> int:
        return self.l * self.n // 4

    @property
    def info_bits_per_dm(self) -> int:
        return self.k - self.nu

    @property
    def n_candidates(self) -> int:
        return 1 << (self.nu * self.n)


def bits_to_int(bits) -> int:
    """Big-endian bit vector to a Python integer."""
    v = 0
    for b in np.asarray(bits, dtype=np.uint8).tolist():
        v = (v << 1) | int(b)
    return v


def int_to_bits(v: int, width: int) -> np.ndarray:
    if v < 0 or v >> width:
        raise ValueError(f"{v} does not fit in {width} bits")
    return np.array([(v >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def assemble_dm_input(info_bits, flip_value: int, nu: int) -> int:
    """DM index with the ``nu`` flipping bits in the most significant positions."""
    info_bits = np.asarray(info_bits, dtype=np.uint8)
    if not 0 <= flip_value < (1 << nu):
        raise ValueError(f"flip value {flip_value} needs more than {nu} bits")
    return (int(flip_value) << info_bits.size) | bits_to_int(info_bits)


def split_dm_index(index: int, k: int, nu: int) -> tuple[int, np.ndarray]:
    """Inverse of :func:`assemble_dm_input`: ``(flip_value, info_bits)``."""
    payload = k - nu
    return index >> payload, int_to_bits(index & ((1 << payload) - 1), payload)


def map_4d(amplitudes, sign_bits) -> DualPolSymbolBlock:
    amplitudes = np.asarray(amplitudes)
    sign_bits = np.asarray(sign_bits)
    if amplitudes.shape != sign_bits.shape or amplitudes.ndim != 1:
        raise ValueError("amplitudes and sign bits must be equally long vectors")
    if amplitudes.size % 4 or amplitudes.size == 0:
        raise ValueError("number of amplitudes must be a positive multiple of 4")
    x = (amplitudes * (1 - 2 * sign_bits.astype(np.int64))).astype(float).reshape(-1, 4)
    return DualPolSymbolBlock(x[:, 0] + 1j * x[:, 1], x[:, 2] + 1j * x[:, 3])


def demap_4d(block: DualPolSymbolBlock, alphabet=(1, 3, 5, 7)) -> tuple[np.ndarray, np.ndarray]:
    """Recover ``(amplitudes, sign_bits)`` from on-grid 4D symbols."""
    x = np.stack([block.pol1.real, block.pol1.imag, block.pol2.real, block.pol2.imag], axis=1).ravel()
    mag = np.abs(x)
    amps = np.rint(mag).astype(np.int64)
    if not (np.allclose(mag, amps, rtol=0, atol=1e-9) and np.isin(amps, alphabet).all()):
        raise ValueError("not a constellation point")
    return amps, (x < 0).astype(np.uint8)


def rate_loss(trellis: EnergyTrellis, nu: int, n_samples: int | None = None, seed: int = 0) -> float:
    """``H(P_a) - (k - nu) / l`` in bits per real dimension.

    ``H(P_a)`` uses the exact amplitude marginal of the used codebook unless
    ``n_samples`` is given, in which case it is estimated by sampling.
    """
    if not 0 <= nu <= trellis.k:
        raise ValueError("nu must lie in [0, k]")
    if n_samples is None:
        p = amplitude_distribution(trellis)
    else:
        p = empirical_amplitude_distribution(trellis, n_samples, seed)
    return entropy_bits(p) - (trellis.k - nu) / trellis.l


def default_sign_info_fraction(code_rate: float = 5 / 6, bits_per_dim: int = BITS_PER_DIM) -> float:
    """Share of sign bits carrying information in a rate-``code_rate`` PAS frame.

    Parity takes ``bits_per_dim * (1 - code_rate)`` bits per real dimension
    and all of it lands on sign positions.
    """
    frac = 1.0 - bits_per_dim * (1.0 - code_rate)
    if not 0.0 <= frac <= 1.0:
        raise ValueError("code rate too low for parity to fit in the sign bits")
    return frac


def n_sign_info_bits(total: int, info_fraction: float) -> int:
    return int(round(total * info_fraction))


def _digest_seed(seed: int, prev_block_bits) -> int:
    h = hashlib.blake2b(digest_size=16)
    h.update(int(seed).to_bytes(8, "little", signed=True))
    if prev_block_bits is not None and len(prev_block_bits):
        h.update(np.packbits(np.asarray(prev_block_bits, dtype=np.uint8)).tobytes())
        h.update(len(prev_block_bits).to_bytes(8, "little"))
    return int.from_bytes(h.digest(), "little")


def parity_stub(prev_block_bits, n_bits: int, seed: int = 0) -> np.ndarray:
    """Deterministic pseudo-random stand-in for the FEC parity of the previous block."""
    rng = np.random.default_rng(_digest_seed(seed, prev_block_bits))
    return rng.integers(0, 2, size=n_bits, dtype=np.uint8)


def sign_bit_source(prev_block_bits, s_bits, total: int, seed: int = 0) -> np.ndarray:
    """Sign bits ``s || c``: current-block information, then stub parity.

    ``c`` is keyed on a digest of ``prev_block_bits`` (empty or ``None`` for
    the first block) and on ``seed``.
    """
    s_bits = np.asarray(s_bits, dtype=np.uint8)
    if s_bits.size > total:
        raise ValueError("more information sign bits than sign positions")
    c_bits = parity_stub(prev_block_bits, total - s_bits.size, seed)
    return np.concatenate([s_bits, c_bits])


def amplitude_label_bits(amplitudes, alphabet=(1, 3, 5, 7)) -> np.ndarray:
    """Binary-reflected Gray label of each amplitude's alphabet position."""
    amplitudes = np.asarray(amplitudes)
    lut = {a: p ^ (p >> 1) for p, a in enumerate(alphabet)}
    width = max(1, (len(alphabet) - 1).bit_length())
    labels = np.array([lut[int(a)] for a in amplitudes.ravel()], dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1)
    return ((labels[:, None] >> shifts) & 1).astype(np.uint8).ravel()
