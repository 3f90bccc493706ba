"""Candidate generation with flipping bits and metric-based sequence selection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import LinkPlan, _ssfm_fields, rrc_spectrum
from .core import DualPolSymbolBlock, dbm_to_mw, dispersion_phase
from .ess import ess_encode
from .metrics import DispersionSchedule, d_edi, edi
from .pas import DmChainConfig, assemble_dm_input, map_4d


@dataclass(frozen=True)
class Candidate:
    flips: tuple[int, ...]
    amplitudes: np.ndarray
    block: DualPolSymbolBlock


def flip_vector_value(flips: Sequence[int], nu: int) -> int:
    """Flip vector read as one integer, first DM most significant."""
    v = 0
    for f in flips:
        v = (v << nu) | int(f)
    return v


@dataclass(frozen=True)
class CandidateSet:
    candidates: tuple[Candidate, ...]
    nu: int
    subsample_size: int | None = None
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.candidates)

    def stacked(self) -> np.ndarray:
        """All candidate blocks as a ``(C, 2, L_s)`` array."""
        return np.stack([c.block.as_array() for c in self.candidates])

    def keys(self) -> list[int]:
        return [flip_vector_value(c.flips, self.nu) for c in self.candidates]


def _flip_vectors(n: int, nu: int, subsample: tuple[int, int] | None) -> list[tuple[int, ...]]:
    total = 1 << (nu * n)
    if subsample is None:
        chosen = range(total)
    else:
        size, seed = subsample
        if size > total:
            raise ValueError(f"cannot draw {size} of {total} candidates")
        if size < 1:
            raise ValueError("subsample size must be >= 1")
        rng = np.random.default_rng(seed)
        others = rng.choice(np.arange(1, total), size=size - 1, replace=False) if size > 1 else []
        chosen = sorted([0, *map(int, others)])
    mask = (1 << nu) - 1
    return [tuple((v >> (nu * (n - 1 - d))) & mask for d in range(n)) for v in chosen]


def enumerate_candidates(info_bits, chain: DmChainConfig, signs, subsample: tuple[int, int] | None = None,
                         encode_cache: dict | None = None) -> CandidateSet:
    """All (or a seeded random subset of) candidate sequences for one block.

    ``info_bits`` holds ``n * (k - nu)`` bits, split evenly over the DMs.
    Every candidate uses the same ``signs``. Flip vector 0 is always kept.
    """
    info_bits = np.asarray(info_bits, dtype=np.uint8)
    per_dm = chain.info_bits_per_dm
    if info_bits.size != chain.n * per_dm:
        raise ValueError(f"expected {chain.n * per_dm} information bits, got {info_bits.size}")
    signs = np.asarray(signs, dtype=np.uint8)
    if signs.size != chain.n_amplitudes:
        raise ValueError(f"expected {chain.n_amplitudes} sign bits, got {signs.size}")
    cache = {} if encode_cache is None else encode_cache
    flips = _flip_vectors(chain.n, chain.nu, subsample)
    dm_bits = [info_bits[d * per_dm : (d + 1) * per_dm] for d in range(chain.n)]
    out = []
    for fv in flips:
        parts = []
        for d, f in enumerate(fv):
            key = (d, f)
            if key not in cache:
                idx = assemble_dm_input(dm_bits[d], f, chain.nu)
                cache[key] = np.asarray(ess_encode(idx, chain.trellis).values, dtype=np.int64)
            parts.append(cache[key])
        amps = np.concatenate(parts)
        out.append(Candidate(fv, amps, map_4d(amps, signs)))
    return CandidateSet(tuple(out), chain.nu, None if subsample is None else subsample[0],
                        None if subsample is None else subsample[1])


@dataclass(frozen=True)
class OracleConfig:
    """Noiseless single-carrier link used to score candidates by simulated NLI."""

    link: LinkPlan
    symbol_rate_gbaud: float
    power_dBm: float
    rolloff: float = 0.1
    sps: int = 2
    # mean 4D symbol energy mapped to the launch power; None uses the batch mean
    ref_energy: float | None = None

    @property
    def total_length(self) -> float:
        return self.link.total_length


@dataclass(frozen=True)
class SelectorKind:
    """One of ``none``, ``edi``, ``d_edi`` or ``ssfm``."""

    kind: str = "none"
    w: int = 2
    schedule: DispersionSchedule | None = None
    symbol_rate_gbaud: float | None = None
    oracle: OracleConfig | None = None

    def __post_init__(self):
        if self.kind not in ("none", "edi", "d_edi", "ssfm"):
            raise ValueError(f"unknown selector {self.kind!r}")
        if self.kind == "d_edi" and (self.schedule is None or self.symbol_rate_gbaud is None):
            raise ValueError("d_edi selector needs a schedule and a symbol rate")
        if self.kind == "ssfm" and self.oracle is None:
            raise ValueError("ssfm selector needs an oracle configuration")

    def evaluate(self, blocks: np.ndarray) -> np.ndarray:
        """Metric of every block in a ``(C, 2, L_s)`` array."""
        if self.kind == "none":
            return np.zeros(blocks.shape[0])
        if self.kind == "edi":
            return np.atleast_1d(edi(blocks, self.w))
        if self.kind == "d_edi":
            return np.atleast_1d(d_edi(blocks, self.w, self.schedule, self.symbol_rate_gbaud))
        return ssfm_nli_batch(blocks, self.oracle)


class SelectionError(RuntimeError):
    pass


def select_min(cset: CandidateSet, selector: SelectorKind) -> tuple[int, np.ndarray]:
    """Index of the candidate with the smallest metric, and all metric values.

    Ties go to the smallest flip vector.
    """
    if len(cset) == 0:
        raise ValueError("empty candidate set")
    try:
        values = selector.evaluate(cset.stacked())
    except Exception as exc:
        for c in cset.candidates:
            try:
                selector.evaluate(c.block.as_array()[None])
            except Exception as inner:
                raise SelectionError(f"metric failed on candidate {c.flips}: {inner}") from inner
        raise SelectionError(str(exc)) from exc
    keys = np.asarray(cset.keys())
    order = np.lexsort((keys, values))
    return int(order[0]), values


def argmin_with_ties(values: Sequence[float], keys: Sequence[int]) -> int:
    return int(np.lexsort((np.asarray(keys), np.asarray(values)))[0])


def n_s_108(n: int, nu: int) -> int:
    """Candidate sequences tested per 4 DMs (108 4D symbols at ``l = 108``)."""
    if n not in (1, 2, 4):
        raise ValueError("n must divide 4")
    return (4 // n) * (1 << (nu * n))


def ssfm_nli_batch(blocks: np.ndarray, cfg: OracleConfig) -> np.ndarray:
    """Residual NLI power of each block after noiseless propagation, ideal CDC and matched filtering."""
    blocks = np.asarray(blocks, dtype=np.complex128)
    c, _, n_sym = blocks.shape
    sps = cfg.sps
    rs = cfg.symbol_rate_gbaud * 1e9
    fs = rs * sps
    n = n_sym * sps
    f = np.fft.fftfreq(n, d=1 / fs)
    h = rrc_spectrum(f, rs, cfg.rolloff)
    up = np.zeros((c, 2, n), dtype=np.complex128)
    up[..., ::sps] = blocks
    wave = np.fft.ifft(np.fft.fft(up, axis=-1) * h, axis=-1)
    # one common scale for all candidates, so that heavier sequences launch more power
    e_ref = cfg.ref_energy if cfg.ref_energy is not None else float(np.mean(np.abs(blocks) ** 2) * 2)
    wave *= np.sqrt(dbm_to_mw(cfg.power_dBm) * sps / e_ref)
    a1, a2 = wave[:, 0], wave[:, 1]
    for fiber, amp in cfg.link.spans:
        a1, a2 = _ssfm_fields(a1, a2, fs, fiber, cfg.link.step_km)
        gain = fiber.loss_dB if amp.gain_dB is None else amp.gain_dB
        g = 10 ** (gain / 20)
        a1, a2 = a1 * g, a2 * g
    fib = cfg.link.fiber
    cd = np.exp(1j * dispersion_phase(f, fib.D, fib.wavelength_nm, -cfg.total_length))
    rx = np.fft.ifft(np.fft.fft(np.stack([a1, a2], axis=1), axis=-1) * (cd * h * sps), axis=-1)[..., ::sps]
    out = np.empty(c)
    for i in range(c):
        y = rx[i].ravel()
        x = blocks[i].ravel()
        a = np.vdot(y, x) / np.vdot(y, y).real
        out[i] = np.mean(np.abs(x - a * y) ** 2) * 2
    return out


def ssfm_nli_oracle(block: DualPolSymbolBlock, cfg: OracleConfig) -> float:
    """NLI power (mean residual 4D energy, in symbol units) of one block."""
    return float(ssfm_nli_batch(block.as_array()[None], cfg)[0])
