import numpy as np
import pytest

from conftest import random_block
from dss.core import H_PLANCK, C_M_S, SampledWaveform, mean_power, normalize_power
from dss.channel import (
    EdfaParams,
    FiberParams,
    GridPlan,
    LinkPlan,
    ase_variance_mw,
    edfa,
    frequency_mux,
    linear_dispersion,
    propagate_link,
    rrc_shape,
    rrc_spectrum,
    ssfm_propagate,
)
from dss.rx import decimate, extract_and_match, matched_filter


def test_rrc_impulse_peak_centre():
    from dss.core import DualPolSymbolBlock

    sym = np.zeros(64, complex)
    sym[32] = 1
    w = rrc_shape(DualPolSymbolBlock(sym, np.zeros(64, complex)), 0.1, 4)
    assert np.argmax(np.abs(w.pol1)) == 128
    np.testing.assert_allclose(w.pol1[129:160], w.pol1[127:96:-1], atol=1e-14)


def test_rrc_cascade_is_nyquist(rng):
    b = random_block(rng, 256)
    w = rrc_shape(b, 0.1, 4, 50.0)
    out = decimate(matched_filter(w, 0.0, 50.0, 0.1, out_sps=2))
    np.testing.assert_allclose(out.as_array(), b.as_array(), rtol=0, atol=1e-10 * 7)


def test_rrc_rolloff_zero_is_brickwall(rng):
    b = random_block(rng, 128)
    w = rrc_shape(b, 0.0, 4, 1.0)
    spec = np.abs(np.fft.fft(w.pol1))
    f = np.fft.fftfreq(len(w), 1 / w.sample_rate)
    assert spec[np.abs(f) > 0.5e9].max() < 1e-9
    h = rrc_spectrum(np.array([0.0, 0.3, 0.6]), 1.0, 0.0)
    np.testing.assert_array_equal(h, [1, 1, 0])


def test_rrc_spectrum_power_complementary():
    f = np.linspace(0, 0.55, 200)
    h = rrc_spectrum(f, 1.0, 0.1)
    np.testing.assert_allclose(h**2 + rrc_spectrum(1.0 - f, 1.0, 0.1) ** 2, 1.0, atol=1e-12)


def test_mux_identity_and_power(rng):
    a = normalize_power(rrc_shape(random_block(rng, 200), 0.1, 8, 50.0), 1.0)
    np.testing.assert_array_equal(frequency_mux([a], [0.0]).pol1, a.pol1)
    b = normalize_power(rrc_shape(random_block(rng, 200), 0.1, 8, 50.0), 1.0)
    m = frequency_mux([a, b], [-55.0, 55.0])
    assert mean_power(m) == pytest.approx(2.0, rel=1e-6)
    with pytest.raises(ValueError):
        frequency_mux([a], [190.0])
    with pytest.raises(ValueError):
        frequency_mux([a], [0.1])


def test_extract_two_channels(rng):
    b1, b2 = random_block(rng, 200), random_block(rng, 200)
    waves = [rrc_shape(b, 0.1, 8, 50.0) for b in (b1, b2)]
    m = frequency_mux(waves, [-27.5, 27.5])
    out = extract_and_match(m, 27.5, 50.0, 0.1)
    np.testing.assert_allclose(out.as_array(), b2.as_array(), atol=1e-6)


def test_grid_plan():
    g = GridPlan(n_wdm=5, samples_per_symbol=8)
    assert [o for _, _, o in g.offsets_ghz()] == [-110, -55, 0, 55, 110]
    assert g.center_channel == 2
    d = GridPlan(n_subcarriers=8, per_subcarrier_baud=13.75, samples_per_symbol=12)
    assert d.sc_spacing == pytest.approx(15.125)
    assert d.center_subcarrier == 3
    with pytest.raises(ValueError):
        GridPlan(n_wdm=5, samples_per_symbol=4)


def _wave(rng, n_sym=256, sps=4, baud=50.0, p_mw=1.0):
    return normalize_power(rrc_shape(random_block(rng, n_sym), 0.1, sps, baud), p_mw)


def test_ssfm_linear_matches_closed_form(rng):
    w = _wave(rng)
    fib = FiberParams(length=50.0, alpha_dB=0.0, gamma=0.0)
    out = ssfm_propagate(w, fib, 1.0)
    ref = linear_dispersion(w, fib.D, fib.wavelength_nm, fib.length)
    err = np.linalg.norm(out.pol1 - ref.pol1) / np.linalg.norm(ref.pol1)
    assert err < 1e-10


def test_ssfm_pure_spm_phase():
    n = 64
    p = 5.0
    w = SampledWaveform(np.full(n, np.sqrt(p), complex), np.zeros(n, complex), 100e9, 2)
    fib = FiberParams(length=80.0, alpha_dB=0.0, D=0.0, gamma=1.3, pmd=0.0)
    out = ssfm_propagate(w, fib, 0.5)
    expected = 1.3e-3 * (8 / 9) * p * 80.0
    np.testing.assert_allclose(np.angle(out.pol1), expected, atol=1e-9)


def test_ssfm_attenuation(rng):
    w = _wave(rng, p_mw=2.0)
    out = ssfm_propagate(w, FiberParams(length=80.0, gamma=0.0), 1.0)
    assert mean_power(out) == pytest.approx(2.0 * 10 ** (-1.6), rel=1e-9)


def test_ssfm_lossless_energy_conservation(rng):
    w = _wave(rng, p_mw=20.0)
    out = ssfm_propagate(w, FiberParams(length=40.0, alpha_dB=0.0), 0.5)
    assert mean_power(out) == pytest.approx(mean_power(w), rel=1e-9)


def test_ssfm_step_halving_convergence(rng):
    w = _wave(rng, n_sym=512, p_mw=dbm(8.0))
    fib = FiberParams(length=40.0)
    ref = ssfm_propagate(w, fib, 0.05)
    e1 = np.mean(np.abs(ssfm_propagate(w, fib, 2.0).pol1 - ref.pol1) ** 2)
    e2 = np.mean(np.abs(ssfm_propagate(w, fib, 1.0).pol1 - ref.pol1) ** 2)
    assert e1 / e2 >= 3


def dbm(p):
    return 10 ** (p / 10)


def test_ssfm_pmd_deterministic_and_lossless(rng):
    w = _wave(rng, p_mw=1.0)
    fib = FiberParams(length=20.0, alpha_dB=0.0, gamma=0.0, pmd=0.1)
    a = ssfm_propagate(w, fib, 1.0, seed=3, pmd_on=True)
    b = ssfm_propagate(w, fib, 1.0, seed=3, pmd_on=True)
    np.testing.assert_array_equal(a.pol1, b.pol1)
    assert mean_power(a) == pytest.approx(1.0, rel=1e-12)
    c = ssfm_propagate(w, fib, 1.0, seed=4, pmd_on=True)
    assert not np.allclose(a.pol1, c.pol1)


def test_edfa_gain_and_identity(rng):
    w = _wave(rng)
    np.testing.assert_array_equal(edfa(w, 0.0, ase_on=False).pol1, w.pol1)
    assert mean_power(edfa(w, 16.0, ase_on=False)) == pytest.approx(mean_power(w) * 10**1.6, rel=1e-12)
    with pytest.raises(ValueError):
        edfa(w, -1.0)


def test_ase_power_monte_carlo():
    n = 1_000_000
    fs = 13.75e9
    w = SampledWaveform(np.zeros(n, complex), np.zeros(n, complex), fs, 1)
    out = edfa(w, 16.0, 5.0, ase_on=True, seed=11)
    nu = C_M_S / 1550e-9
    expected = (10**1.6 - 1) * (10**0.5 / 2) * H_PLANCK * nu * fs * 1e3
    assert ase_variance_mw(16.0, 5.0, fs) == pytest.approx(expected, rel=1e-12)
    for p in (out.pol1, out.pol2):
        assert np.mean(np.abs(p) ** 2) == pytest.approx(expected, rel=0.02)


def test_propagate_link_deterministic(rng):
    w = _wave(rng, n_sym=128)
    link = LinkPlan.uniform(2, FiberParams(length=40.0), EdfaParams(), step_km=2.0)
    a = propagate_link(w, link, seed=5)
    b = propagate_link(w, link, seed=5)
    np.testing.assert_array_equal(a.pol1, b.pol1)
    quiet = propagate_link(w, link.without_ase(), seed=5)
    # transparent amplifiers restore the launch power
    assert mean_power(quiet) == pytest.approx(mean_power(w), rel=1e-9)
    assert link.total_length == 80.0
