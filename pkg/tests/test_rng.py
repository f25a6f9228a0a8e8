"""The counter-based generator: determinism, splitting, distributions."""

import numpy as np
from hypothesis import given, settings, strategies as st

from quadenhance.rng import Rng


def test_same_seed_same_stream():
    a = Rng(42).next_u64(100)
    b = Rng(42).next_u64(100)
    np.testing.assert_array_equal(a, b)


def test_different_seeds_differ():
    assert not np.array_equal(Rng(1).next_u64(64), Rng(2).next_u64(64))


def test_counter_is_stateless_index():
    """Draw boundaries must not matter: 3 + 2 draws == one draw of 5."""
    r = Rng(7)
    chunks = np.concatenate([r.next_u64(3), r.next_u64(2)])
    np.testing.assert_array_equal(chunks, Rng(7).next_u64(5))


def test_split_decorrelates():
    parent = Rng(5)
    c1 = parent.split(0).next_u64(32)
    c2 = parent.split(1).next_u64(32)
    assert not np.array_equal(c1, c2)
    # splitting does not disturb the parent stream
    np.testing.assert_array_equal(Rng(5).next_u64(8), parent.next_u64(8))


def test_split_deterministic():
    assert Rng(5).split(3).seed == Rng(5).split(3).seed


def test_uniform_range():
    u = Rng(9).uniform(10_000, -2.0, 3.0)
    assert u.min() >= -2.0 and u.max() < 3.0


def test_normal_moments():
    z = Rng(11).normal(200_000)
    assert abs(z.mean()) < 0.01
    assert abs(z.var() - 1.0) < 0.02


def test_normal_odd_count():
    assert len(Rng(1).normal(7)) == 7


@given(st.integers(0, 2**31), st.integers(0, 50))
@settings(max_examples=40, deadline=None)
def test_permutation_is_permutation(seed, n):
    perm = Rng(seed).permutation(n)
    assert sorted(perm) == list(range(n))


def test_integers_bound():
    v = Rng(3).integers(1000, 7)
    assert v.min() >= 0 and v.max() < 7
