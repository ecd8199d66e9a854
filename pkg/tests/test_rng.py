"""Seeded stream properties."""

import numpy as np

from morphauth.rng import SeedStream, mix64


def test_scalar_and_block_agree():
    s = SeedStream(987)
    block = s.u64_block(10, 50)
    for i, v in enumerate(block):
        assert int(v) == s.u64(10 + i)


def test_idempotent_reads():
    s = SeedStream(1)
    assert s.u64(5) == s.u64(5)
    assert np.array_equal(s.u64_block(0, 8), s.u64_block(0, 8))


def test_child_streams_independent():
    s = SeedStream(3)
    a = s.child("noise")
    b = s.child("noise", 1)
    c = s.child("other")
    assert len({a.seed, b.seed, c.seed, s.seed}) == 4
    assert s.child("noise").seed == a.seed


def test_uniform_range_and_mean():
    u = SeedStream(9).uniform_block(0, 20000)
    assert u.min() > 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01


def test_gaussian_moments():
    g = SeedStream(11).gaussian_block(0, 40000, sigma=3.0)
    assert abs(g.mean()) < 0.08
    assert abs(g.std() - 3.0) < 0.08


def test_laplace_moments():
    b = 2.0
    x = SeedStream(12).laplace_block(0, 40000, b)
    assert abs(x.mean()) < 0.08
    # Laplace variance is 2 b^2
    assert abs(x.var() - 2 * b * b) < 0.4
    assert np.isfinite(x).all()


def test_integer_block_bounds():
    v = SeedStream(13).integer_block(0, 5000, -3, 3)
    assert v.min() == -3 and v.max() == 3
    assert set(np.unique(v)) == set(range(-3, 4))


def test_mix64_avalanche():
    a = mix64(1)
    b = mix64(2)
    assert bin(a ^ b).count("1") > 10
