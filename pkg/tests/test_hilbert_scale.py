import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from nlforms import hilbert_scale as hs
from nlforms.errors import InvalidInputError

GRID = hs.GridSpec(1, 20.0, 256)
# synthetic spectrum spanning the desk-scale range
_LAM = np.geomspace(0.4, 1e-6, 128)


@pytest.fixture(scope="module")
def eig():
    return hs.eigensystem(GRID, 128)


def test_grid_validation():
    with pytest.raises(InvalidInputError):
        hs.GridSpec(1, 1.0, 7)
    with pytest.raises(InvalidInputError):
        hs.GridSpec(4, 1.0, 8)


def test_apply_H_inverse_zero_and_size():
    assert np.all(hs.apply_H_inverse(GRID, np.zeros(256)) == 0)
    with pytest.raises(InvalidInputError):
        hs.apply_H_inverse(GRID, np.zeros(100))


def test_apply_H_inverse_constant():
    # on constants the spectral factor is the identity, leaving the multiplier twice
    grid = hs.GridSpec(1, 20.0, 64)
    s = 1.0
    w = (grid.r2() + 1.0) ** (-s)
    f = w ** -1  # the inner multiplier maps this to a constant
    out = hs.apply_H_inverse(grid, f)
    assert np.allclose(out, w, rtol=1e-12, atol=1e-15)


def test_apply_H_inverse_symmetric():
    g = np.random.default_rng(0)
    for grid in (GRID, hs.GridSpec(2, 5.0, 16)):
        for _ in range(5):
            f, h = g.standard_normal((2, grid.size))
            lhs = grid.inner(hs.apply_H_inverse(grid, f), h)
            rhs = grid.inner(f, hs.apply_H_inverse(grid, h))
            assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_eigensystem(eig):
    lam = eig.values
    assert np.all(lam > 0) and np.all(np.diff(lam) <= 0)
    assert lam[0] <= 1.0
    assert np.all(eig.residuals < 1e-8)
    gram = GRID.cell * eig.vectors @ eig.vectors.T
    assert np.max(np.abs(gram - np.eye(eig.K))) < 1e-8
    ps = eig.hs_partial_sums()
    assert np.all(np.diff(ps) > 0) and np.all(np.diff(ps, 2) <= 1e-18)


def test_eigensystem_residual_against_operator(eig):
    for i in (0, 5, 50):
        v = eig.vectors[i]
        r = hs.apply_H_inverse(GRID, v) - eig.values[i] * eig.scale * v
        assert np.sqrt(GRID.cell) * np.linalg.norm(r) < 1e-8


def test_eigen_table_roundtrip(eig):
    lam = hs.read_eigen_table(eig.to_table())
    assert np.array_equal(lam, eig.values)
    with pytest.raises(InvalidInputError):
        hs.read_eigen_table("# nothing\n")


def test_scale_map_examples(eig):
    for m in (-3, -2, 0, 2):
        smap = hs.ScaleMap(m, eig.values)
        assert np.all(smap.tau(np.zeros(10)) == 0)
        e = np.zeros(eig.K)
        e[7] = 2.5
        assert smap.weighted_norm(smap.tau(e)) == pytest.approx(2.5, rel=1e-14)


@settings(max_examples=50)
@given(st.integers(-3, 2), st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=128))
def test_scale_map_isometry(m, coeffs):
    smap = hs.ScaleMap(m, _LAM)
    a = np.asarray(coeffs)
    b = smap.tau(a)
    n = smap.level_norm(a)
    assert abs(smap.weighted_norm(b) - n) <= 1e-10 * max(n, 1e-300)
    assert np.allclose(smap.tau_inverse(b), a, rtol=1e-12, atol=0)


def test_free_field_covariance(eig):
    C = hs.free_field_covariance(GRID, 1.0, eig)
    assert np.max(np.abs(C - C.T)) < 1e-12
    assert np.linalg.eigvalsh(C).min() > 0


def test_free_field_covariance_matches_quadratic_form(eig):
    C = hs.free_field_covariance(GRID, 2.0, eig, 10)
    v = eig.vectors[:10]
    direct = GRID.cell * v @ hs.apply_resolvent(GRID, v, 2.0).T
    assert np.allclose(C, direct, atol=1e-12)


def test_gaussian_characteristic(eig):
    C = hs.free_field_covariance(GRID, 1.0, eig)
    g = np.random.default_rng(1)
    assert hs.gaussian_characteristic(C, np.zeros(128)) == 1.0
    phi = 0.1 * g.standard_normal(128)
    assert hs.gaussian_characteristic(C, -phi) == hs.gaussian_characteristic(C, phi)
    psis, phis = 0.1 * g.standard_normal((2, 500, 128))
    assert np.all(hs.increment_gap(lambda p: hs.gaussian_characteristic(C, p), psis, phis) >= -1e-12)


def test_pd_gram_check(eig):
    C = hs.free_field_covariance(GRID, 1.0, eig)
    functional = lambda p: hs.gaussian_characteristic(C, p)
    assert hs.pd_gram_check(functional, np.zeros((1, 128))) == pytest.approx(1.0)
    g = np.random.default_rng(2)
    phis = 0.05 * g.standard_normal((20, 128))
    assert hs.pd_gram_check(functional, phis) >= -1e-10
    assert hs.pd_gram_check(hs.corrupted_characteristic(C), phis) < -1e-10


def test_wick4_examples():
    assert hs.wick4(2.0, 0.0) == 16.0
    assert hs.wick4(0.0, 1.0) == 3.0
    t = np.linspace(-3, 3, 7)
    assert np.allclose(hs.wick4(t, 0.7), t ** 4 - 6 * 0.7 * t ** 2 + 3 * 0.49)
    with pytest.raises(InvalidInputError):
        hs.wick4(1.0, -1.0)


def test_wick4_zero_mean():
    g = np.random.default_rng(3)
    for a in (0.5, 1.0, 2.0):
        w = hs.wick4(math.sqrt(a) * g.standard_normal(100_000), a)
        assert abs(w.mean()) <= 3 * w.std(ddof=1) / math.sqrt(len(w))


def _brute_pairings(a):
    k = a.shape[0]
    total = 0.0
    seen = set()
    for perm in itertools.permutations(range(k)):
        pairs = frozenset(frozenset(perm[i:i + 2]) for i in range(0, k, 2))
        if pairs in seen:
            continue
        seen.add(pairs)
        total += math.prod(a[tuple(p)] for p in map(sorted, pairs))
    return total, len(seen)


def test_pairing_moment():
    assert hs.pairing_moment([[0, 2.5], [2.5, 0]]) == 2.5
    assert hs.pairing_moment(np.ones((4, 4))) == 3.0
    assert hs.pairing_moment(np.ones((3, 3))) == 0.0
    g = np.random.default_rng(4)
    for k in (4, 6):
        a = g.standard_normal((k, k))
        a = a + a.T
        value, count = _brute_pairings(a)
        assert hs.pairing_moment(a) == pytest.approx(value, rel=1e-12)
        assert count == hs.double_factorial(k // 2)
    a = g.standard_normal((4, 4))
    a = a + a.T
    assert hs.pairing_moment(a) == pytest.approx(a[0, 1] * a[2, 3] + a[0, 2] * a[1, 3] + a[0, 3] * a[1, 2])


def test_double_factorial():
    assert [hs.double_factorial(n) for n in (1, 2, 3)] == [1, 3, 15]


def test_lattice_propagator_closed_form():
    assert hs.lattice_propagator(1, 1.0, 1.0, [0]) == pytest.approx(1 / math.sqrt(5), abs=1e-8)
    assert hs.lattice_propagator(1, 1.0, 100.0, [0]) == pytest.approx(1 / math.sqrt(10400), abs=1e-8)


def test_lattice_propagator_symmetric_and_quadrature_oracle():
    for x in (1, 3):
        assert hs.lattice_propagator(1, 1.0, 0.5, [x]) == hs.lattice_propagator(1, 1.0, 0.5, [-x])
        ref, _ = integrate.quad(lambda k: math.cos(k * x) / (2 * (1 - math.cos(k)) + 0.5),
                                -math.pi, math.pi, epsabs=1e-13)
        assert hs.lattice_propagator(1, 1.0, 0.5, [x]) == pytest.approx(ref / (2 * math.pi), abs=1e-8)


def test_lattice_propagator_two_dimensions():
    ref, _ = integrate.dblquad(
        lambda q2, q1: math.cos(q1) / (1.0 + 4 - 2 * math.cos(q1) - 2 * math.cos(q2)),
        0, math.pi, 0, math.pi, epsabs=1e-12)
    value = hs.lattice_propagator(2, 1.0, 1.0, [1.0, 0.0])
    assert value == pytest.approx(ref / math.pi ** 2, abs=1e-8)
    # swapping axes only reorders the quadrature sum
    assert value == pytest.approx(hs.lattice_propagator(2, 1.0, 1.0, [0.0, -1.0]), abs=1e-15)


def test_lattice_propagator_rejects_off_lattice():
    with pytest.raises(InvalidInputError):
        hs.lattice_propagator(1, 1.0, 1.0, [0.5])


def test_periodic_propagator_is_inverse_precision():
    L, m2 = 8, 1.0
    Q = (2 + m2) * np.eye(L) - np.roll(np.eye(L), 1, axis=1) - np.roll(np.eye(L), -1, axis=1)
    G = np.linalg.inv(Q)
    for r in range(L):
        assert hs.periodic_propagator(1, L, 1.0, m2, [r]) == pytest.approx(G[0, r], abs=1e-14)


def test_propagator_l1_stabilizes():
    vals = [hs.propagator_l1(1.0, 1.0, R) for R in (5, 10, 20, 40)]
    assert np.all(np.diff(vals) >= 0)
    # geometric decay: the l1 sum approaches 1 / m0^2
    assert abs(vals[-1] - vals[-2]) < 1e-8
    assert vals[-1] == pytest.approx(1.0, abs=1e-7)
