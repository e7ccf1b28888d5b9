from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdslab.errors import TailOverflow
from rdslab.noise import (MAX_PHASE, NoisePath, _mix64, bits_to_phase, derive_seed, prf_bits, shift,
                          split_duration, xi_at, xi_matrix, xi_window)

MASK = (1 << 64) - 1


def splitmix_next(state):
    """Reference SplitMix64 step in plain Python integers."""
    state = (state + 0x9E3779B97F4A7C15) & MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return state, z ^ (z >> 31)


def phase_oracle(bits: int) -> int:
    # k = j  iff  U = v / 2**53 lies in (2**-j, 2**(1-j)]
    v = (bits >> 11) + 1
    u = Fraction(v, 2**53)
    k = 1
    while u <= Fraction(1, 2**k):
        k += 1
    return k


def test_mixer_matches_published_splitmix_output():
    _, first = splitmix_next(0)
    assert first == 0xE220A8397B1DCDAF
    assert int(_mix64(np.uint64(0x9E3779B97F4A7C15))) == first


def test_mixer_matches_python_reference_on_random_states():
    rng = np.random.default_rng(0)
    states = rng.integers(0, 2**63, 200, dtype=np.uint64)
    with np.errstate(over="ignore"):
        got = _mix64(states + np.uint64(0x9E3779B97F4A7C15))
    for s, g in zip(states, got):
        assert splitmix_next(int(s))[1] == int(g)


@pytest.mark.parametrize("bits,k", [
    (MASK, 1),
    (1 << 63, 1),
    ((1 << 63) - 1, 2),
    (1 << 62, 2),
    (1 << 61, 3),
    (1 << 44, 20),
])
def test_phase_boundaries(bits, k):
    assert int(bits_to_phase(np.array([bits], dtype=np.uint64))[0]) == k
    assert phase_oracle(bits) == k


def test_phase_matches_rational_oracle():
    bits = prf_bits(5, 1, np.arange(2000))
    ks = bits_to_phase(bits)
    assert [phase_oracle(int(b)) for b in bits] == ks.tolist()


def test_tail_overflow_is_loud():
    with pytest.raises(TailOverflow):
        bits_to_phase(np.array([0], dtype=np.uint64))
    # v - 1 = 2**20 gives k = 54 - 21 = 33, the largest allowed value
    assert int(bits_to_phase(np.array([1 << 31], dtype=np.uint64))[0]) == MAX_PHASE
    with pytest.raises(TailOverflow):
        bits_to_phase(np.array([1 << 30], dtype=np.uint64))


def test_phase_frequencies():
    xi = xi_window(NoisePath(3), 0, 200_000)
    for k in (1, 2, 3, 4):
        p = 2.0**-k
        assert abs(np.mean(xi == k) - p) < 4 * np.sqrt(p * (1 - p) / len(xi))


def test_noise_is_a_pure_function_of_seed_and_index():
    a = xi_window(NoisePath(9), -50, 50)
    b = xi_window(NoisePath(9), -50, 50)
    assert np.array_equal(a, b)
    assert xi_at(NoisePath(9), -7) == a[43]
    assert not np.array_equal(a, xi_window(NoisePath(10), -50, 50))


def test_matrix_rows_match_windows():
    seeds = np.array([1, 2, 3], dtype=np.uint64)
    m = xi_matrix(seeds, -10, 5)
    for row, s in zip(m, seeds):
        assert np.array_equal(row, xi_window(NoisePath(int(s)), -10, 5))


def test_derive_seed_scalar_and_vector_agree():
    vec = derive_seed(7, np.arange(5, dtype=np.int64))
    assert [derive_seed(7, i) for i in range(5)] == [int(v) for v in vec]
    assert isinstance(derive_seed(7, 2), int)


def test_path_validation():
    with pytest.raises(ValueError):
        NoisePath(1, 1.0)
    with pytest.raises(ValueError):
        NoisePath(-1)
    p = NoisePath.from_seed(4)
    assert 0 <= p.phase_offset < 1
    assert p.at_boundary().phase_offset == 0.0


def test_shift_examples():
    p = NoisePath(1, 0.25)
    q = shift(p, 0.5)
    assert (q.phase_offset, q.origin) == (0.75, 0)
    q = shift(p, 1.0)
    assert (q.phase_offset, q.origin) == (0.25, 1)
    q = shift(p, -0.5)
    assert (q.phase_offset, q.origin) == (0.75, -1)
    assert np.array_equal(xi_window(shift(p, 3.0), 0, 10), xi_window(p, 3, 13))


def test_shift_snaps_near_integers():
    q = shift(NoisePath(1, 0.25), 0.75 - 1e-14)
    assert (q.phase_offset, q.origin) == (0.0, 1)


def test_split_duration():
    assert split_duration(0.25, 2.5) == (2, 0.75)
    assert split_duration(0.5, 0.5) == (1, 0.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 0.999), st.floats(-100, 100), st.floats(-100, 100))
def test_shift_group_law(s, a, b):
    p = NoisePath(11, s)
    two = shift(shift(p, a), b)
    one = shift(p, Fraction(a) + Fraction(b))
    u1 = two.origin + Fraction(two.phase_offset)
    u2 = one.origin + Fraction(one.phase_offset)
    assert abs(u1 - u2) <= 1e-12
