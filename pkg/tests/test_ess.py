import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dss.ess import (
    AmplitudeSequence,
    PamAlphabet,
    amplitude_distribution,
    build_trellis,
    emax_for_bits,
    empirical_amplitude_distribution,
    energy_spectrum,
    ess_decode,
    ess_encode,
    ess_encode_many,
    random_indices,
)


def brute_codebook(l, alphabet, e_max):
    """All sequences within the energy bound, in lexicographic order."""
    return [s for s in itertools.product(sorted(alphabet), repeat=l) if sum(a * a for a in s) <= e_max]


ALPHABETS = [(1,), (1, 3), (1, 3, 5), (1, 3, 5, 7), (3, 7), (1, 5, 7)]


def test_small_example():
    t = build_trellis(2, (1, 3), 10)
    assert t.size == 3
    assert t.k == 1
    assert ess_encode(0, t).values == (1, 1)
    assert ess_encode(1, t).values == (1, 3)
    assert ess_decode((1, 1), t) == 0


def test_unconstrained_cube():
    t = build_trellis(3, (1, 3), 27)
    assert t.size == 8 and t.k == 3
    assert build_trellis(3, (1, 3), 1000).size == 8


def test_infeasible_bound():
    with pytest.raises(ValueError, match="infeasible energy bound"):
        build_trellis(1, (1, 3), 0)


def test_encode_range_and_energy_errors():
    t = build_trellis(2, (1, 3), 10)
    with pytest.raises(ValueError):
        ess_encode(1 << t.k, t)
    with pytest.raises(ValueError):
        ess_encode(-1, t)
    with pytest.raises(ValueError):
        ess_decode((3, 3), t)


def test_index_zero_is_all_ones():
    t = build_trellis(108, (1, 3, 5, 7), 908)
    assert ess_encode(0, t).values == (1,) * 108


@pytest.mark.parametrize("alphabet", ALPHABETS)
@pytest.mark.parametrize("l", [1, 2, 3, 4, 5, 6])
def test_brute_force_equivalence(l, alphabet):
    rng = np.random.default_rng(l * 100 + len(alphabet))
    amax = max(alphabet) ** 2 * l
    bounds = sorted({l * min(alphabet) ** 2, amax, min(amax, 300), *rng.integers(l, 301, size=4).tolist()})
    for e_max in bounds:
        if e_max > 300 and e_max != amax:
            continue
        book = brute_codebook(l, alphabet, e_max)
        if not book:
            with pytest.raises(ValueError):
                build_trellis(l, alphabet, e_max)
            continue
        t = build_trellis(l, alphabet, e_max)
        assert t.size == len(book)
        assert t.k == int(np.floor(np.log2(len(book))))
        used = book[: 1 << t.k]
        for i, seq in enumerate(used):
            assert ess_encode(i, t).values == seq
            assert ess_decode(seq, t) == i


@pytest.mark.parametrize("l,e_max", [(60, 548), (108, 908), (200, 1600), (300, 2364)])
def test_round_trip_long_blocks(l, e_max):
    t = build_trellis(l, (1, 3, 5, 7), e_max)
    rng = np.random.default_rng(l)
    n = 10_000 if l <= 108 else 2_000
    idx = random_indices(rng, t.k, n)
    for i in idx:
        seq = ess_encode(i, t)
        assert seq.total_energy <= e_max
        assert ess_decode(seq, t) == i


def test_encode_many_matches_scalar():
    t = build_trellis(20, (1, 3, 5, 7), 200)
    idx = random_indices(np.random.default_rng(0), t.k, 50)
    arr = ess_encode_many(idx, t)
    for row, i in zip(arr, idx):
        assert tuple(row) == ess_encode(i, t).values


@given(st.integers(2, 12), st.sampled_from(ALPHABETS[1:]), st.integers(0, 400), st.integers(0, 60))
def test_monotone_k(l, alphabet, e_max, de):
    lo = l * min(alphabet) ** 2 + e_max
    assert build_trellis(l, alphabet, lo + de).k >= build_trellis(l, alphabet, lo).k


@given(st.integers(1, 40), st.integers(0, 2**30))
def test_bijectivity_property(l, seed):
    t = build_trellis(l, (1, 3, 5, 7), 9 * l + 8)
    rng = np.random.default_rng(seed)
    for i in random_indices(rng, t.k, 5):
        assert ess_decode(ess_encode(i, t), t) == i


def test_energy_spectrum_matches_brute_force():
    spec = energy_spectrum(4, (1, 3, 5))
    counts = {}
    for s in itertools.product((1, 3, 5), repeat=4):
        e = sum(a * a for a in s)
        counts[e] = counts.get(e, 0) + 1
    assert spec == counts


def test_emax_for_bits_is_smallest():
    for l, k in [(12, 18), (30, 47), (108, 166)]:
        e = emax_for_bits(l, (1, 3, 5, 7), k)
        assert build_trellis(l, (1, 3, 5, 7), e).k >= k
        assert build_trellis(l, (1, 3, 5, 7), e - 8).k < k


def test_emax_paper_preset():
    assert emax_for_bits(108, (1, 3, 5, 7), 166) == 908


def test_exact_marginal_matches_brute_force():
    for l, alphabet, e_max in [(4, (1, 3, 5, 7), 60), (5, (1, 3, 5), 70), (3, (1, 3), 20)]:
        t = build_trellis(l, alphabet, e_max)
        used = brute_codebook(l, alphabet, e_max)[: 1 << t.k]
        counts = np.array([sum(s.count(a) for s in used) for a in alphabet], float)
        np.testing.assert_allclose(amplitude_distribution(t), counts / counts.sum(), rtol=1e-12)


def test_empirical_distribution_uniform_cube():
    t = build_trellis(2, (1, 3), 18)
    n = 20_000
    p = empirical_amplitude_distribution(t, n, seed=7)
    sigma = np.sqrt(0.25 / (2 * n))
    assert abs(p[0] - 0.5) <= 3 * sigma
    np.testing.assert_array_equal(p, empirical_amplitude_distribution(t, n, seed=7))


def test_empirical_distribution_singleton():
    t = build_trellis(2, (1, 3), 2)
    np.testing.assert_array_equal(empirical_amplitude_distribution(t, 100, seed=1), [1.0, 0.0])


def test_alphabet_validation():
    with pytest.raises(ValueError):
        PamAlphabet((2, 4))
    with pytest.raises(ValueError):
        PamAlphabet((3, 1))
    assert AmplitudeSequence((1, 3)).total_energy == 10
