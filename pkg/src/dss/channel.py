"""Transmitter waveform synthesis and fiber channel model.

All filtering is done with FFTs over the full record, so every waveform is
treated as one period of a periodic signal.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    H_PLANCK,
    DualPolSymbolBlock,
    SampledWaveform,
    alpha_per_km,
    carrier_frequency,
    dispersion_phase,
)

MANAKOV_FACTOR = 8.0 / 9.0


@dataclass(frozen=True)
class FiberParams:
    """Standard single-mode fiber by default."""

    length: float = 80.0
    alpha_dB: float = 0.2
    D: float = 17.0
    gamma: float = 1.3
    pmd: float = 0.04
    wavelength_nm: float = 1550.0

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("fiber length must be positive")
        if self.alpha_dB < 0:
            raise ValueError("attenuation must be nonnegative")

    @property
    def loss_dB(self) -> float:
        return self.alpha_dB * self.length


@dataclass(frozen=True)
class EdfaParams:
    """``gain_dB=None`` makes the amplifier transparent to the preceding span loss."""

    gain_dB: float | None = None
    noise_figure_dB: float = 5.0
    ase_on: bool = True


@dataclass(frozen=True)
class LinkPlan:
    spans: tuple[tuple[FiberParams, EdfaParams], ...]
    step_km: float = 0.1
    pmd_on: bool = False

    def __post_init__(self):
        if not self.spans:
            raise ValueError("link needs at least one span")
        if self.step_km <= 0:
            raise ValueError("step_km must be positive")

    @classmethod
    def uniform(cls, n_spans: int, fiber: FiberParams, edfa: EdfaParams = EdfaParams(),
                step_km: float = 0.1, pmd_on: bool = False) -> "LinkPlan":
        return cls(tuple((fiber, edfa) for _ in range(int(n_spans))), step_km, pmd_on)

    @property
    def total_length(self) -> float:
        return float(sum(f.length for f, _ in self.spans))

    @property
    def fiber(self) -> FiberParams:
        return self.spans[0][0]

    def without_ase(self) -> "LinkPlan":
        spans = tuple((f, EdfaParams(e.gain_dB, e.noise_figure_dB, False)) for f, e in self.spans)
        return LinkPlan(spans, self.step_km, self.pmd_on)


@dataclass(frozen=True)
class GridPlan:
    """WDM channels, each split into digital subcarriers, on one simulation grid.

    ``samples_per_symbol`` is counted per subcarrier symbol, so the grid
    sample rate is ``samples_per_symbol * per_subcarrier_baud``.
    """

    n_wdm: int = 1
    wdm_spacing: float = 55.0
    n_subcarriers: int = 1
    per_subcarrier_baud: float = 50.0
    rolloff: float = 0.1
    samples_per_symbol: int = 4
    subcarrier_spacing: float | None = None

    def __post_init__(self):
        if self.n_wdm < 1 or self.n_subcarriers < 1:
            raise ValueError("need at least one channel and one subcarrier")
        if not 0 <= self.rolloff < 1:
            raise ValueError("rolloff must lie in [0, 1)")
        if self.samples_per_symbol < 2:
            raise ValueError("samples_per_symbol must be >= 2")
        if self.sample_rate_ghz < self.occupied_bandwidth_ghz:
            raise ValueError(
                f"grid of {self.sample_rate_ghz} GHz cannot hold {self.occupied_bandwidth_ghz} GHz of signal"
            )

    @property
    def sc_spacing(self) -> float:
        if self.subcarrier_spacing is not None:
            return self.subcarrier_spacing
        return self.per_subcarrier_baud * (1 + self.rolloff)

    @property
    def channel_baud(self) -> float:
        return self.per_subcarrier_baud * self.n_subcarriers

    @property
    def sample_rate_ghz(self) -> float:
        return self.samples_per_symbol * self.per_subcarrier_baud

    def offsets_ghz(self) -> list[tuple[int, int, float]]:
        """``(channel, subcarrier, offset)`` for every band, channels centred on 0."""
        out = []
        for c in range(self.n_wdm):
            f_ch = (c - (self.n_wdm - 1) / 2) * self.wdm_spacing
            for s in range(self.n_subcarriers):
                f_sc = (s - (self.n_subcarriers - 1) / 2) * self.sc_spacing
                out.append((c, s, f_ch + f_sc))
        return out

    @property
    def occupied_bandwidth_ghz(self) -> float:
        offs = [o for _, _, o in self.offsets_ghz()]
        return max(offs) - min(offs) + self.per_subcarrier_baud * (1 + self.rolloff)

    @property
    def center_channel(self) -> int:
        return (self.n_wdm - 1) // 2

    @property
    def center_subcarrier(self) -> int:
        return (self.n_subcarriers - 1) // 2


def rrc_spectrum(freqs: np.ndarray, symbol_rate: float, rolloff: float) -> np.ndarray:
    """Root-raised-cosine amplitude response with unit passband gain."""
    f = np.abs(np.asarray(freqs, dtype=float))
    half = symbol_rate / 2
    h = np.zeros_like(f)
    if rolloff == 0:
        h[f < half] = 1.0
        h[np.isclose(f, half, rtol=1e-12, atol=0)] = np.sqrt(0.5)
        return h
    f1 = (1 - rolloff) * half
    f2 = (1 + rolloff) * half
    h[f <= f1] = 1.0
    tr = (f > f1) & (f <= f2)
    h[tr] = np.sqrt(0.5 * (1 + np.cos(np.pi / (rolloff * symbol_rate) * (f[tr] - f1))))
    return h


def rrc_shape(block: DualPolSymbolBlock, rolloff: float, sps: int, symbol_rate_gbaud: float = 1.0) -> SampledWaveform:
    """Upsample by ``sps`` and apply the RRC filter in the frequency domain.

    Symbol ``k`` is centred on sample ``k * sps``.
    """
    if sps < 2:
        raise ValueError("sps must be >= 2")
    if not 0 <= rolloff < 1:
        raise ValueError("rolloff must lie in [0, 1)")
    rs = symbol_rate_gbaud * 1e9
    n = block.n_symbols * sps
    up = np.zeros((2, n), dtype=np.complex128)
    up[:, ::sps] = block.as_array()
    h = rrc_spectrum(np.fft.fftfreq(n, d=1 / (rs * sps)), rs, rolloff)
    y = np.fft.ifft(np.fft.fft(up, axis=-1) * h, axis=-1)
    return SampledWaveform(y[0], y[1], rs * sps, sps)


def _band_edge(w: SampledWaveform, rel_floor: float = 1e-12) -> float:
    n = len(w)
    spec = np.abs(np.fft.fft(w.pol1)) ** 2 + np.abs(np.fft.fft(w.pol2)) ** 2
    f = np.abs(np.fft.fftfreq(n, d=1 / w.sample_rate))
    sig = spec > rel_floor * spec.max() if spec.max() > 0 else np.zeros(n, bool)
    return float(f[sig].max()) if sig.any() else 0.0


def frequency_mux(waveforms: Sequence[SampledWaveform], offsets_GHz: Sequence[float]) -> SampledWaveform:
    """Sum of the waveforms, each shifted by its offset.

    Offsets must fall on the FFT bin grid so the record stays periodic.
    """
    if not waveforms or len(waveforms) != len(offsets_GHz):
        raise ValueError("need one offset per waveform")
    n = len(waveforms[0])
    fs = waveforms[0].sample_rate
    for w in waveforms:
        if len(w) != n or w.sample_rate != fs:
            raise ValueError("waveforms must share length and sample rate")
    df = fs / n
    t = np.arange(n)
    p1 = np.zeros(n, dtype=np.complex128)
    p2 = np.zeros(n, dtype=np.complex128)
    for w, off in zip(waveforms, offsets_GHz):
        f0 = off * 1e9
        if abs(f0) + _band_edge(w) > fs / 2 * (1 + 1e-12):
            raise ValueError(f"offset {off} GHz aliases beyond the {fs / 2e9:g} GHz Nyquist limit")
        bins = f0 / df
        if abs(bins - round(bins)) > 1e-6:
            raise ValueError(f"offset {off} GHz is not on the {df / 1e9:g} GHz bin grid")
        rot = np.exp(2j * np.pi * round(bins) * t / n)
        p1 += w.pol1 * rot
        p2 += w.pol2 * rot
    return SampledWaveform(p1, p2, fs, waveforms[0].samples_per_symbol)


def _haar_unitary(rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def _ssfm_fields(a1: np.ndarray, a2: np.ndarray, fs: float, fiber: FiberParams, step_km: float,
                 rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric split-step Manakov integration on arrays whose last axis is time."""
    n = a1.shape[-1]
    n_steps = max(1, int(np.ceil(fiber.length / step_km - 1e-9)))
    h = fiber.length / n_steps
    f = np.fft.fftfreq(n, d=1 / fs)
    a = alpha_per_km(fiber.alpha_dB)
    half = np.exp(-a / 4 * h + 1j * dispersion_phase(f, fiber.D, fiber.wavelength_nm, h / 2))
    full = half * half
    delta = h if a == 0 else 2.0 / a * np.sinh(a * h / 2)
    # gamma in 1/(W km), powers in mW
    k_nl = MANAKOV_FACTOR * fiber.gamma * 1e-3 * delta

    pmd_tau = None
    if rng is not None and fiber.pmd > 0:
        # per-section DGD so that the mean accumulated DGD is pmd * sqrt(L)
        pmd_tau = fiber.pmd * 1e-12 * np.sqrt(h) * np.sqrt(3 * np.pi / 8)
        dgd = np.exp(1j * np.pi * f * pmd_tau)

    # polarizations stacked on axis -2
    s = np.fft.fft(np.stack([a1, a2], axis=-2), axis=-1) * half
    for step in range(n_steps):
        u = np.fft.ifft(s, axis=-1)
        if fiber.gamma:
            p = u.real**2 + u.imag**2
            u *= np.exp(1j * k_nl * (p[..., 0, :] + p[..., 1, :]))[..., None, :]
        s = np.fft.fft(u, axis=-1)
        if pmd_tau is not None:
            m = _haar_unitary(rng)
            s = np.einsum("ij,...jn->...in", m, s)
            s[..., 0, :] *= dgd
            s[..., 1, :] *= np.conj(dgd)
        s *= half if step == n_steps - 1 else full
    u = np.fft.ifft(s, axis=-1)
    return u[..., 0, :], u[..., 1, :]


def ssfm_propagate(w: SampledWaveform, fiber: FiberParams, step_km: float, seed: int | None = None,
                   pmd_on: bool = False) -> SampledWaveform:
    """Propagate ``w`` through one fiber span.

    ``pmd_on`` adds a random waveplate (unitary rotation plus DGD) after
    every step, drawn from ``seed``.
    """
    if step_km <= 0:
        raise ValueError("step_km must be positive")
    rng = np.random.default_rng(seed) if pmd_on else None
    p1, p2 = _ssfm_fields(w.pol1, w.pol2, w.sample_rate, fiber, step_km, rng)
    return w.replace(p1, p2)


def ase_variance_mw(gain_dB: float, nf_dB: float, bandwidth_hz: float, wavelength_nm: float = 1550.0) -> float:
    """ASE power per polarization (mW) over ``bandwidth_hz``."""
    g = 10 ** (gain_dB / 10)
    nsp = 10 ** (nf_dB / 10) / 2
    return (g - 1) * nsp * H_PLANCK * carrier_frequency(wavelength_nm) * bandwidth_hz * 1e3


def edfa(w: SampledWaveform, gain_dB: float, nf_dB: float = 5.0, ase_on: bool = True, seed: int | None = None,
         wavelength_nm: float = 1550.0) -> SampledWaveform:
    """Amplify by ``gain_dB`` and optionally add white ASE over the whole grid."""
    if gain_dB < 0:
        raise ValueError("gain must be nonnegative")
    g = 10 ** (gain_dB / 20)
    p1 = w.pol1 * g
    p2 = w.pol2 * g
    if ase_on and gain_dB > 0:
        var = ase_variance_mw(gain_dB, nf_dB, w.sample_rate, wavelength_nm)
        rng = np.random.default_rng(seed)
        sd = np.sqrt(var / 2)
        noise = rng.standard_normal((4, len(w))) * sd
        p1 = p1 + noise[0] + 1j * noise[1]
        p2 = p2 + noise[2] + 1j * noise[3]
    return w.replace(p1, p2)


def propagate_link(w: SampledWaveform, link: LinkPlan, seed: int = 0) -> SampledWaveform:
    """Fiber span then amplifier, for every span; noise drawn per span from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(2 * len(link.spans))
    for s, (fiber, amp) in enumerate(link.spans):
        pmd_seed = int(children[2 * s].generate_state(1)[0])
        ase_seed = int(children[2 * s + 1].generate_state(1)[0])
        w = ssfm_propagate(w, fiber, link.step_km, pmd_seed, link.pmd_on)
        gain = fiber.loss_dB if amp.gain_dB is None else amp.gain_dB
        w = edfa(w, gain, amp.noise_figure_dB, amp.ase_on, ase_seed, fiber.wavelength_nm)
    return w


def linear_dispersion(w: SampledWaveform, D: float, wavelength_nm: float, z_km: float) -> SampledWaveform:
    """Closed-form all-pass dispersion on a sampled waveform."""
    f = np.fft.fftfreq(len(w), d=1 / w.sample_rate)
    h = np.exp(1j * dispersion_phase(f, D, wavelength_nm, z_km))
    return w.replace(np.fft.ifft(np.fft.fft(w.pol1) * h), np.fft.ifft(np.fft.fft(w.pol2) * h))
