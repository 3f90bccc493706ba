import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dss.ess import build_trellis, ess_decode, ess_encode, random_indices
from dss.pas import (
    DmChainConfig,
    amplitude_label_bits,
    assemble_dm_input,
    bits_to_int,
    default_sign_info_fraction,
    demap_4d,
    int_to_bits,
    map_4d,
    rate_loss,
    sign_bit_source,
    split_dm_index,
)
from dss.core import DualPolSymbolBlock


def test_assemble_examples():
    assert assemble_dm_input([0, 1, 1], 1, 1) == 0b1011
    assert assemble_dm_input([0, 1, 1, 0], 0, 0) == 6
    with pytest.raises(ValueError):
        assemble_dm_input([0, 1, 1], 2, 1)


def test_split_inverts_assemble():
    bits = np.array([1, 0, 0, 1, 1], np.uint8)
    flip, info = split_dm_index(assemble_dm_input(bits, 3, 2), 7, 2)
    assert flip == 3
    np.testing.assert_array_equal(info, bits)


def test_bits_int_round_trip():
    assert bits_to_int([1, 0, 1]) == 5
    np.testing.assert_array_equal(int_to_bits(5, 4), [0, 1, 0, 1])
    with pytest.raises(ValueError):
        int_to_bits(16, 4)


def test_map_examples():
    b = map_4d([1, 1, 1, 1], [0, 0, 0, 0])
    assert b.pol1[0] == 1 + 1j and b.pol2[0] == 1 + 1j
    b = map_4d([3, 1, 5, 7], [1, 0, 0, 1])
    assert b.pol1[0] == -3 + 1j and b.pol2[0] == 5 - 7j
    assert len(map_4d(np.ones(108, int), np.zeros(108, int))) == 27


def test_demap_examples():
    amps, signs = demap_4d(DualPolSymbolBlock([-3 + 1j], [5 - 7j]))
    np.testing.assert_array_equal(amps, [3, 1, 5, 7])
    np.testing.assert_array_equal(signs, [1, 0, 0, 1])
    with pytest.raises(ValueError, match="not a constellation point"):
        demap_4d(DualPolSymbolBlock([2 + 1j], [1 + 1j]))


@given(st.integers(1, 30), st.integers(0, 2**31))
def test_map_demap_round_trip(n4, seed):
    rng = np.random.default_rng(seed)
    amps = rng.choice([1, 3, 5, 7], size=4 * n4)
    signs = rng.integers(0, 2, size=4 * n4)
    a2, s2 = demap_4d(map_4d(amps, signs))
    np.testing.assert_array_equal(a2, amps)
    np.testing.assert_array_equal(s2, signs)


def test_rate_loss_examples():
    t = build_trellis(2, (1, 3), 18)
    assert rate_loss(t, 0) == pytest.approx(0.0, abs=1e-15)
    assert rate_loss(t, 1) == pytest.approx(0.5, abs=1e-15)


def test_rate_loss_paper_preset():
    t = build_trellis(108, (1, 3, 5, 7), 908)
    assert t.k == 166
    assert 4 * rate_loss(t, 4) == pytest.approx(0.26, abs=0.03)


def test_rate_loss_empirical_close_to_exact():
    t = build_trellis(20, (1, 3, 5, 7), 260)
    assert rate_loss(t, 0, n_samples=4000, seed=3) == pytest.approx(rate_loss(t, 0), abs=0.02)


@pytest.mark.parametrize("nu", [1, 2, 4, 7])
def test_rate_loss_grows_by_nu_over_l(nu):
    t = build_trellis(108, (1, 3, 5, 7), 908)
    assert rate_loss(t, nu) - rate_loss(t, 0) == pytest.approx(nu / 108, abs=1e-15)


def test_rate_loss_decreases_with_block_length():
    from dss.config import DmConfig

    losses = [rate_loss(DmConfig(l=l, nu=0).trellis(), 0) for l in (60, 108, 200, 300)]
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_default_sign_fraction():
    assert default_sign_info_fraction(5 / 6) == pytest.approx(0.5)
    assert default_sign_info_fraction(1.0) == 1.0
    with pytest.raises(ValueError):
        default_sign_info_fraction(0.5)


def test_sign_bit_source_determinism():
    s = np.array([1, 0, 1], np.uint8)
    a = sign_bit_source(None, s, 20, seed=4)
    b = sign_bit_source([], s, 20, seed=4)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a[:3], s)
    assert a.size == 20
    prev = np.ones(50, np.uint8)
    np.testing.assert_array_equal(sign_bit_source(prev, s, 20, 4), sign_bit_source(prev.copy(), s, 20, 4))
    with pytest.raises(ValueError):
        sign_bit_source(None, np.zeros(30, np.uint8), 20)


def test_sign_bit_source_avalanche():
    rng = np.random.default_rng(0)
    prev = rng.integers(0, 2, 200, dtype=np.uint8)
    other = prev.copy()
    other[17] ^= 1
    n = 10_000
    a = sign_bit_source(prev, [], n, seed=1)
    b = sign_bit_source(other, [], n, seed=1)
    assert abs(np.mean(a != b) - 0.5) < 0.05


def test_amplitude_labels_gray():
    bits = amplitude_label_bits([1, 3, 5, 7]).reshape(4, 2)
    np.testing.assert_array_equal(bits, [[0, 0], [0, 1], [1, 1], [1, 0]])


@pytest.mark.parametrize("n,nu", [(1, 0), (1, 4), (2, 2), (4, 1)])
def test_frame_round_trip(n, nu):
    t = build_trellis(108, (1, 3, 5, 7), 908 if nu else 884)
    chain = DmChainConfig(n, nu, t)
    rng = np.random.default_rng(n * 10 + nu)
    for _ in range(200 if n * nu else 100):
        info = rng.integers(0, 2, size=(n, chain.info_bits_per_dm), dtype=np.uint8)
        flips = rng.integers(0, 1 << nu, size=n) if nu else np.zeros(n, int)
        amps = np.concatenate([ess_encode(assemble_dm_input(info[d], int(flips[d]), nu), t).values for d in range(n)])
        signs = rng.integers(0, 2, size=amps.size)
        a2, _ = demap_4d(map_4d(amps, signs))
        for d in range(n):
            idx = ess_decode(a2[d * 108 : (d + 1) * 108], t)
            flip, bits = split_dm_index(idx, t.k, nu)
            assert flip == flips[d]
            np.testing.assert_array_equal(bits, info[d])


def test_chain_config():
    t = build_trellis(108, (1, 3, 5, 7), 908)
    c = DmChainConfig(4, 1, t)
    assert c.n_symbols == 108 and c.n_candidates == 16 and c.info_bits_per_dm == 165
    with pytest.raises(ValueError):
        DmChainConfig(0, 1, t)
    with pytest.raises(ValueError):
        DmChainConfig(1, 1, build_trellis(6, (1, 3), 60))


def test_flip_candidates_distinct():
    t = build_trellis(108, (1, 3, 5, 7), 908)
    info = random_indices(np.random.default_rng(2), t.k - 3, 1)[0]
    bits = int_to_bits(info, t.k - 3)
    seqs = {ess_encode(assemble_dm_input(bits, f, 3), t).values for f in range(8)}
    assert len(seqs) == 8
