"""Shared signal containers, unit conventions and power helpers.

Units used throughout the package:

* lengths in km, dispersion ``D`` in ps/(nm km), attenuation in dB/km,
  ``beta2`` in ps^2/km, ``gamma`` in 1/(W km)
* symbol rates in GBaud, frequencies in GHz at configuration level and Hz
  inside sampled waveforms
* optical power in dBm at interfaces and mW internally, so complex field
  samples carry units of sqrt(mW)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

C_KM_S = 299792.458
C_M_S = C_KM_S * 1e3
H_PLANCK = 6.62607015e-34


@dataclass(frozen=True)
class DualPolSymbolBlock:
    """Two equally long complex rows, one per polarization."""

    pol1: np.ndarray
    pol2: np.ndarray

    def __post_init__(self):
        p1 = np.asarray(self.pol1, dtype=np.complex128)
        p2 = np.asarray(self.pol2, dtype=np.complex128)
        if p1.ndim != 1 or p2.ndim != 1:
            raise ValueError("polarization rows must be one-dimensional")
        if p1.shape != p2.shape or p1.size < 1:
            raise ValueError("pol1 and pol2 must share one nonzero length")
        object.__setattr__(self, "pol1", p1)
        object.__setattr__(self, "pol2", p2)

    @property
    def n_symbols(self) -> int:
        return self.pol1.size

    def __len__(self) -> int:
        return self.pol1.size

    def as_array(self) -> np.ndarray:
        """Return the 2 x L_s matrix with one polarization per row."""
        return np.vstack([self.pol1, self.pol2])

    @classmethod
    def from_array(cls, x: np.ndarray) -> "DualPolSymbolBlock":
        x = np.asarray(x)
        if x.ndim != 2 or x.shape[0] != 2:
            raise ValueError(f"expected a 2 x L_s array, got shape {x.shape}")
        return cls(x[0], x[1])

    def energies(self) -> np.ndarray:
        """Per-symbol 4D energy |pol1|^2 + |pol2|^2."""
        return self.pol1.real**2 + self.pol1.imag**2 + self.pol2.real**2 + self.pol2.imag**2


@dataclass(frozen=True)
class SampledWaveform:
    """Dual-polarization baseband signal on a uniform time grid.

    ``sample_rate`` is in Hz. ``center_freq_offset`` records where the
    content sits relative to the simulation grid center (Hz).
    """

    pol1: np.ndarray
    pol2: np.ndarray
    sample_rate: float
    samples_per_symbol: int = 1
    center_freq_offset: float = 0.0

    def __post_init__(self):
        p1 = np.asarray(self.pol1, dtype=np.complex128)
        p2 = np.asarray(self.pol2, dtype=np.complex128)
        if p1.shape != p2.shape or p1.ndim != 1:
            raise ValueError("both polarizations must share one 1-D length")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if int(self.samples_per_symbol) < 1:
            raise ValueError("samples_per_symbol must be a positive integer")
        object.__setattr__(self, "pol1", p1)
        object.__setattr__(self, "pol2", p2)
        object.__setattr__(self, "samples_per_symbol", int(self.samples_per_symbol))

    def __len__(self) -> int:
        return self.pol1.size

    @property
    def symbol_rate(self) -> float:
        return self.sample_rate / self.samples_per_symbol

    def replace(self, pol1=None, pol2=None, **kw) -> "SampledWaveform":
        return SampledWaveform(
            self.pol1 if pol1 is None else pol1,
            self.pol2 if pol2 is None else pol2,
            kw.get("sample_rate", self.sample_rate),
            kw.get("samples_per_symbol", self.samples_per_symbol),
            kw.get("center_freq_offset", self.center_freq_offset),
        )


def mean_power(w) -> float:
    """Mean per-sample power summed over both polarizations (mW)."""
    return float(np.mean(np.abs(w.pol1) ** 2) + np.mean(np.abs(w.pol2) ** 2))


def normalize_power(w: SampledWaveform, target_mW: float) -> SampledWaveform:
    """Scale ``w`` by one positive real factor so its mean power is ``target_mW``."""
    if target_mW <= 0:
        raise ValueError("target power must be positive")
    if len(w) == 0:
        raise ValueError("empty waveform")
    p = mean_power(w)
    if p == 0:
        raise ValueError("zero-power signal")
    scale = np.sqrt(target_mW / p)
    if scale == 1.0:
        return w
    return w.replace(w.pol1 * scale, w.pol2 * scale)


def dbm_to_mw(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0)


def mw_to_dbm(p_mw: float) -> float:
    return 10.0 * np.log10(p_mw)


def beta2_from_D(D: float, wavelength_nm: float) -> float:
    """Group-velocity dispersion in ps^2/km for ``D`` in ps/(nm km).

    >>> round(beta2_from_D(17.0, 1550.0), 2)
    -21.68
    """
    if wavelength_nm <= 0:
        raise ValueError("wavelength must be positive")
    # 1 km/s == 1 nm/ps, so the result is directly in ps^2/km
    return -D * wavelength_nm**2 / (2.0 * np.pi * C_KM_S)


def carrier_frequency(wavelength_nm: float) -> float:
    """Optical carrier frequency in Hz."""
    return C_M_S / (wavelength_nm * 1e-9)


def alpha_per_km(alpha_dB: float) -> float:
    """Power attenuation coefficient in 1/km from dB/km."""
    return alpha_dB * np.log(10.0) / 10.0


def effective_length(alpha_dB: float, length_km: float) -> float:
    """Nonlinear effective length (1 - exp(-alpha L)) / alpha in km."""
    a = alpha_per_km(alpha_dB)
    if a == 0:
        return float(length_km)
    return float(-np.expm1(-a * length_km) / a)


def dispersion_phase(freqs_hz: np.ndarray, D: float, wavelength_nm: float, z_km: float) -> np.ndarray:
    """Phase of the all-pass chromatic dispersion filter on ``freqs_hz``.

    The filter is ``exp(1j * phase)`` applied to a numpy forward FFT. Its
    sign matches fiber propagation with the focusing Kerr term
    ``exp(+1j * gamma |A|^2 z)`` used by the channel model.
    """
    lam = wavelength_nm * 1e-9
    d_si = D * 1e-6  # ps/(nm km) -> s/m^2
    return -(d_si * lam**2 * np.pi * freqs_hz**2 * (z_km * 1e3)) / C_M_S
