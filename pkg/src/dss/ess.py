"""Enumerative sphere shaping (ESS) distribution matcher.

The codebook is the set of length-``l`` sequences over an odd-integer PAM
alphabet whose total energy ``sum(a_i**2)`` does not exceed ``E_max``. The
sequences are ranked lexicographically (ascending amplitude order) and the
first ``2**k`` of them are used, ``k = floor(log2(|codebook|))``.

Counts are exact Python integers. Because every odd square is ``1 mod 8``,
the accumulated energy after ``i`` amplitudes is always ``i + 8 j`` for some
integer ``j``; each trellis level is stored as a dense list over ``j`` only,
which keeps the table small even for ``l = 300``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class PamAlphabet:
    """Ascending, distinct, positive odd amplitudes (``(1, 3, 5, 7)`` for 64-QAM)."""

    amplitudes: tuple[int, ...] = (1, 3, 5, 7)

    def __post_init__(self):
        amps = tuple(int(a) for a in self.amplitudes)
        if not amps:
            raise ValueError("alphabet must be nonempty")
        if any(a <= 0 or a % 2 == 0 for a in amps):
            raise ValueError("amplitudes must be positive odd integers")
        if any(b <= a for a, b in zip(amps, amps[1:])):
            raise ValueError("amplitudes must be strictly ascending")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def energies(self) -> tuple[int, ...]:
        return tuple(a * a for a in self.amplitudes)

    def __len__(self) -> int:
        return len(self.amplitudes)

    def index_of(self, a: int) -> int:
        try:
            return self.amplitudes.index(int(a))
        except ValueError:
            raise ValueError(f"amplitude {a} not in alphabet {self.amplitudes}") from None


@dataclass(frozen=True)
class AmplitudeSequence:
    values: tuple[int, ...]

    @property
    def total_energy(self) -> int:
        return sum(v * v for v in self.values)

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class EnergyTrellis:
    """Bounded-energy enumeration table.

    ``levels[i][j]`` is the number of length-``(l - i)`` suffixes that keep
    the total energy within ``E_max`` when the first ``i`` amplitudes have
    already used energy ``i + 8 j``. Use :func:`build_trellis` to construct.
    """

    l: int
    alphabet: PamAlphabet
    E_max: int
    levels: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def size(self) -> int:
        """Number of sequences within the energy bound, ``T(0, E_max)``."""
        return self.levels[0][0]

    @property
    def k(self) -> int:
        return self.size.bit_length() - 1

    @property
    def n_used(self) -> int:
        return 1 << self.k

    @property
    def _shifts(self) -> tuple[int, ...]:
        return tuple((e - 1) // 8 for e in self.alphabet.energies)

    def count(self, i: int, e: int) -> int:
        """``T(i, e)``: suffixes of length ``l - i`` with energy at most ``e``.

        Defined for remaining budgets reachable from ``E_max``, i.e.
        ``e = E_max - s`` with ``s`` an energy that ``i`` odd squares can sum
        to; other budgets raise ``ValueError``.
        """
        if not 0 <= i <= self.l:
            raise ValueError("level out of range")
        s = self.E_max - e
        if s < i or (s - i) % 8:
            raise ValueError(f"budget {e} not reachable at level {i}")
        j = (s - i) // 8
        lvl = self.levels[i]
        return lvl[j] if j < len(lvl) else 0

    def _child(self, i: int, j: int, shift: int) -> int:
        lvl = self.levels[i + 1]
        jj = j + shift
        return lvl[jj] if jj < len(lvl) else 0


def _level_len(E_eff: int, i: int) -> int:
    return (E_eff - i) // 8 + 1 if E_eff >= i else 0


def build_trellis(l: int, alphabet: PamAlphabet | Sequence[int], E_max: int) -> EnergyTrellis:
    """Build the exact ESS counting trellis for block length ``l``."""
    if not isinstance(alphabet, PamAlphabet):
        alphabet = PamAlphabet(tuple(alphabet))
    l = int(l)
    E_max = int(E_max)
    if l < 1:
        raise ValueError("block length must be >= 1")
    # sequence energies are congruent to l mod 8, so round the bound down
    E_eff = E_max - ((E_max - l) % 8)
    shifts = [(e - 1) // 8 for e in alphabet.energies]
    levels: list[list[int]] = [[] for _ in range(l + 1)]
    levels[l] = [1] * _level_len(E_eff, l)
    for i in range(l - 1, -1, -1):
        nxt = levels[i + 1]
        n_next = len(nxt)
        cur = [0] * _level_len(E_eff, i)
        for sh in shifts:
            # cur[j] += nxt[j + sh] for all valid j
            for j in range(min(len(cur), n_next - sh)):
                cur[j] += nxt[j + sh]
        levels[i] = cur
    if not levels[0] or levels[0][0] == 0:
        raise ValueError("infeasible energy bound")
    return EnergyTrellis(l, alphabet, E_max, tuple(tuple(v) for v in levels))


def ess_encode(index: int, trellis: EnergyTrellis) -> AmplitudeSequence:
    """Map ``index`` in ``[0, 2**k)`` to the index-th sequence in lexicographic order."""
    index = int(index)
    if not 0 <= index < trellis.n_used:
        raise ValueError(f"index {index} outside [0, 2**{trellis.k})")
    amps = trellis.alphabet.amplitudes
    shifts = trellis._shifts
    levels = trellis.levels
    out = []
    j = 0
    for i in range(trellis.l):
        nxt = levels[i + 1]
        n_next = len(nxt)
        for a, sh in zip(amps, shifts):
            jj = j + sh
            c = nxt[jj] if jj < n_next else 0
            if index < c:
                out.append(a)
                j = jj
                break
            index -= c
        else:  # pragma: no cover - guarded by the range check above
            raise RuntimeError("trellis walk fell off the codebook")
    return AmplitudeSequence(tuple(out))


def ess_decode(seq: AmplitudeSequence | Sequence[int], trellis: EnergyTrellis) -> int:
    """Inverse of :func:`ess_encode`."""
    values = seq.values if isinstance(seq, AmplitudeSequence) else tuple(int(v) for v in seq)
    if len(values) != trellis.l:
        raise ValueError(f"expected {trellis.l} amplitudes, got {len(values)}")
    pos = [trellis.alphabet.index_of(v) for v in values]
    if sum(v * v for v in values) > trellis.E_max:
        raise ValueError("sequence violates the energy bound")
    shifts = trellis._shifts
    levels = trellis.levels
    rank = 0
    j = 0
    for i, p in enumerate(pos):
        nxt = levels[i + 1]
        n_next = len(nxt)
        for sh in shifts[:p]:
            jj = j + sh
            if jj < n_next:
                rank += nxt[jj]
        j += shifts[p]
    if rank >= trellis.n_used:
        raise ValueError("unused codeword")
    return rank


def ess_encode_many(indices: Sequence[int], trellis: EnergyTrellis) -> np.ndarray:
    """Vectorized :func:`ess_encode`; returns an ``(len(indices), l)`` int array."""
    idx = np.empty(len(indices), dtype=object)
    idx[:] = [int(v) for v in indices]
    if idx.size and (min(idx) < 0 or max(idx) >= trellis.n_used):
        raise ValueError("index out of range")
    amps = trellis.alphabet.amplitudes
    shifts = trellis._shifts
    pad = max(shifts) + 1
    out = np.empty((idx.size, trellis.l), dtype=np.int64)
    j = np.zeros(idx.size, dtype=np.int64)
    for i in range(trellis.l):
        nxt = np.zeros(len(trellis.levels[i + 1]) + pad, dtype=object)
        nxt[: len(trellis.levels[i + 1])] = trellis.levels[i + 1]
        chosen = np.full(idx.size, -1, dtype=np.int64)
        for p, sh in enumerate(shifts):
            open_ = chosen < 0
            c = nxt[j + sh]
            take = open_ & (idx < c)
            chosen[take] = p
            rest = open_ & ~take
            idx[rest] = idx[rest] - c[rest]
        j = j + np.asarray(shifts)[chosen]
        out[:, i] = np.asarray(amps)[chosen]
    return out


def empirical_amplitude_distribution(trellis: EnergyTrellis, n_samples: int, seed: int) -> np.ndarray:
    """Histogram of amplitudes over ``n_samples`` uniformly drawn codewords."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    indices = [_uniform_below(rng, trellis.n_used) for _ in range(n_samples)]
    seqs = ess_encode_many(indices, trellis)
    amps = np.asarray(trellis.alphabet.amplitudes)
    counts = (seqs.reshape(-1, 1) == amps).sum(axis=0).astype(float)
    return counts / counts.sum()


def _uniform_below(rng: np.random.Generator, n: int) -> int:
    """Uniform integer in ``[0, n)`` for arbitrarily large ``n``."""
    if n <= 2**62:
        return int(rng.integers(0, n))
    nbytes = (n.bit_length() + 7) // 8
    extra = nbytes * 8 - n.bit_length()
    while True:
        v = int.from_bytes(rng.bytes(nbytes), "little") >> extra
        if v < n:
            return v


def random_indices(rng: np.random.Generator, n_bits: int, count: int) -> list[int]:
    """``count`` uniform ``n_bits``-bit integers."""
    return [_uniform_below(rng, 1 << n_bits) for _ in range(count)]


def amplitude_distribution(trellis: EnergyTrellis) -> np.ndarray:
    """Exact amplitude marginal over the ``2**k`` used codewords.

    This is the ``n_samples -> inf`` limit of
    :func:`empirical_amplitude_distribution`, computed by splitting the used
    index range into complete subtrees of the trellis.
    """
    return _exact_marginal(trellis)


@lru_cache(maxsize=64)
def _exact_marginal(trellis: EnergyTrellis) -> np.ndarray:
    m = len(trellis.alphabet)
    shifts = trellis._shifts
    levels = trellis.levels
    l = trellis.l
    # occ[i][j][p]: occurrences of amplitude p within all completions from (i, j)
    occ_next = [[0] * m for _ in levels[l]]
    occ = [None] * (l + 1)
    occ[l] = occ_next
    for i in range(l - 1, -1, -1):
        nxt_t = levels[i + 1]
        nxt_o = occ[i + 1]
        cur = []
        for j in range(len(levels[i])):
            row = [0] * m
            for p, sh in enumerate(shifts):
                jj = j + sh
                if jj < len(nxt_t):
                    o = nxt_o[jj]
                    for q in range(m):
                        row[q] += o[q]
                    row[p] += nxt_t[jj]
            cur.append(row)
        occ[i] = cur

    total = [0] * m
    prefix = [0] * m
    remaining = trellis.n_used
    j = 0
    for i in range(l):
        if remaining == 0:
            break
        nxt_t = levels[i + 1]
        for p, sh in enumerate(shifts):
            jj = j + sh
            c = nxt_t[jj] if jj < len(nxt_t) else 0
            if c == 0:
                continue
            if remaining >= c:
                sub = occ[i + 1][jj]
                for q in range(m):
                    total[q] += c * prefix[q] + sub[q]
                total[p] += c
                remaining -= c
            else:
                prefix[p] += 1
                j = jj
                break
            if remaining == 0:
                break
    denom = l * trellis.n_used
    return np.array([t / denom for t in total])


def energy_spectrum(l: int, alphabet: PamAlphabet | Sequence[int]) -> dict[int, int]:
    """Number of length-``l`` sequences with each exact total energy."""
    if not isinstance(alphabet, PamAlphabet):
        alphabet = PamAlphabet(tuple(alphabet))
    return dict(_energy_spectrum(int(l), alphabet))


@lru_cache(maxsize=32)
def _energy_spectrum(l: int, alphabet: PamAlphabet) -> tuple[tuple[int, int], ...]:
    shifts = [(e - 1) // 8 for e in alphabet.energies]
    poly = [1]
    for _ in range(l):
        new = [0] * (len(poly) + max(shifts))
        for sh in shifts:
            for t, v in enumerate(poly):
                if v:
                    new[t + sh] += v
        poly = new
    return tuple((l + 8 * t, v) for t, v in enumerate(poly) if v)


def emax_for_bits(l: int, alphabet: PamAlphabet | Sequence[int], k_target: int) -> int:
    """Smallest ``E_max`` whose codebook supports at least ``k_target`` bits."""
    if not isinstance(alphabet, PamAlphabet):
        alphabet = PamAlphabet(tuple(alphabet))
    need = 1 << int(k_target)
    acc = 0
    for e, v in _energy_spectrum(int(l), alphabet):
        acc += v
        if acc >= need:
            return e
    raise ValueError(f"{k_target} bits exceed the unconstrained codebook of length {l}")


def entropy_bits(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())
