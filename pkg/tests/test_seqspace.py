import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlforms import seqspace as ss
from nlforms.errors import InvalidInputError, PreconditionError, ResourceLimitError

finite = st.floats(-1e3, 1e3, allow_nan=False)


def lp(N, p=2.0, beta=None):
    return ss.SpaceSpec("weighted-lp", N, np.ones(N) if beta is None else beta, p)


def test_weights_generators():
    assert np.allclose(ss.weights("constant", 3, 2.0), [2, 2, 2])
    assert np.allclose(ss.weights("power", 3, 2.0), [1, 0.25, 1 / 9])
    lam = np.array([0.5, 0.25])
    assert np.allclose(ss.weights("eigen", 2, -2, lam), lam ** 4)
    with pytest.raises(InvalidInputError):
        ss.weights("eigen", 3, -2, lam)
    with pytest.raises(InvalidInputError):
        ss.weights("nope", 3)


def test_space_validation():
    with pytest.raises(InvalidInputError):
        ss.SpaceSpec("weighted-lp", 2, [1.0, 0.0], 2.0)
    with pytest.raises(InvalidInputError):
        ss.SpaceSpec("weighted-lp", 2, [1.0, 1.0], 0.5)
    with pytest.raises(InvalidInputError):
        ss.SpaceSpec("banach", 2, [1.0, 1.0])


def test_norm_examples():
    assert ss.norm(lp(2), [3, 4]) == pytest.approx(5.0)
    linf = ss.SpaceSpec("weighted-linf", 2, [1.0, 0.5])
    assert ss.norm(linf, [1, 4]) == pytest.approx(2.0)
    for space in (lp(3), ss.SpaceSpec("weighted-linf", 3, np.ones(3)),
                  ss.SpaceSpec("product-RN", 3, np.ones(3))):
        assert ss.norm(space, np.zeros(3)) == 0.0


def test_norm_rejects_nan():
    with pytest.raises(InvalidInputError):
        ss.norm(lp(2), [np.nan, 0.0])


@given(st.lists(finite, min_size=4, max_size=4), st.floats(-50, 50, allow_nan=False))
def test_norm_homogeneity(x, c):
    beta = np.array([1.0, 0.5, 2.0, 0.1])
    for space in (lp(4, 3.0, beta), ss.SpaceSpec("weighted-linf", 4, beta)):
        lhs = ss.norm(space, c * np.asarray(x))
        assert lhs == pytest.approx(abs(c) * ss.norm(space, x), rel=1e-9, abs=1e-9)


def test_metric_rn_examples():
    assert ss.metric_rn([1, 2, 3], [1, 2, 3]) == 0.0
    # |x-y|_k = 1 for every k, so the full series is sum 2^-k / 2 = 1/2
    assert ss.metric_rn([1, 0, 0, 0], [0, 0, 0, 0]) == pytest.approx(0.5, abs=1e-15)
    vals = [ss.metric_rn([c, 0, 0], [0, 0, 0]) for c in (10, 100, 1000)]
    assert vals == sorted(vals)
    assert vals[-1] == pytest.approx(1000 / 1001)


@settings(max_examples=60)
@given(st.lists(st.lists(finite, min_size=3, max_size=3), min_size=3, max_size=3))
def test_metric_rn_is_bounded_metric(pts):
    x, y, z = (np.asarray(p) for p in pts)
    dxy = ss.metric_rn(x, y)
    assert dxy == ss.metric_rn(y, x)
    assert 0 <= dxy < 1
    assert dxy <= ss.metric_rn(x, z) + ss.metric_rn(z, y) + 1e-12


def test_box_contains_examples():
    N = 5
    i = np.arange(1, N + 1, dtype=float)
    space, box = lp(N), ss.BoxSpec(1.0, i ** 2)
    assert ss.box_contains(space, box, np.zeros(N))
    assert ss.box_contains(space, box, 1.0 / i)
    x = 1.0 / i
    x[0] = 2.0
    assert not ss.box_contains(space, box, x)


def test_box_bounds_by_kind():
    beta, gamma = np.array([1.0, 4.0]), np.array([4.0, 1.0])
    box = ss.BoxSpec(2.0, gamma)
    assert np.allclose(ss.box_bounds(lp(2, 2.0, beta), box), 2.0 / np.sqrt(beta * gamma))
    assert np.allclose(ss.box_bounds(ss.SpaceSpec("weighted-linf", 2, beta), box), 2.0 / (beta * gamma))
    assert np.allclose(ss.box_bounds(ss.SpaceSpec("product-RN", 2, beta), box), 2.0 * gamma)


def test_epsilon_net_single_coordinate_count():
    net = ss.epsilon_net(lp(1), ss.BoxSpec(1.0, np.ones(1)), 0.75)
    assert len(net) == 10
    assert np.allclose(net[:9, 0], -1 + 0.25 * np.arange(9))


def test_epsilon_net_large_eps_single_point():
    space, box = lp(3), ss.BoxSpec(1.0, np.arange(1, 4.0) ** 2)
    net = ss.epsilon_net(space, box, 100.0)
    assert net.shape == (1, 3)


def _probe(space, box, net, eps, trials, seed):
    g = np.random.default_rng(seed)
    a = ss.box_bounds(space, box)
    worst = 0.0
    for _ in range(trials):
        x = g.uniform(-a, a)
        d = np.sum(space.beta * np.abs(net - x) ** space.p, axis=1) ** (1 / space.p)
        worst = max(worst, d.min())
    return worst


def test_epsilon_net_covers_box():
    N = 6
    i = np.arange(1, N + 1, dtype=float)
    space, box = lp(N, 2.0, np.ones(N)), ss.BoxSpec(1.0, i ** 3)
    eps = 1.2
    net = ss.epsilon_net(space, box, eps)
    assert _probe(space, box, net, eps, 10_000, 1) < eps


def test_epsilon_net_errors():
    space, box = lp(2), ss.BoxSpec(1.0, np.ones(2))
    with pytest.raises(InvalidInputError):
        ss.epsilon_net(space, box, 0.0)
    with pytest.raises(ResourceLimitError, match="at least"):
        ss.epsilon_net(space, box, 0.01, budget=100)


def test_eta_profile():
    assert ss.eta(0.5) == 1.0 and ss.eta(-1.0) == 1.0
    assert ss.eta(3.0) == 0.0 and ss.eta(4.0) == 0.0
    t = np.linspace(-5, 5, 20001)
    v = ss.eta(t)
    assert v.min() >= 0 and v.max() <= 1
    assert np.max(np.abs(np.diff(v))) <= (t[1] - t[0]) * (1 + 1e-9)


@given(finite, finite)
def test_eta_lipschitz(x, y):
    assert abs(ss.eta(x) - ss.eta(y)) <= abs(x - y) + 1e-15


def test_eta_scaled_examples_and_lipschitz():
    space, box = lp(2), ss.BoxSpec(1.0, np.array([1.0, 4.0]))
    assert ss.eta_scaled(space, box, 0, 0.5) == 1.0
    assert ss.eta_scaled(space, box, 0, 4.0) == 0.0
    a = ss.box_bounds(space, box)[1]
    g = np.random.default_rng(2)
    x, y = g.uniform(-2, 2, (2, 1000))
    diff = np.abs(ss.eta_scaled(space, box, 1, x) - ss.eta_scaled(space, box, 1, y))
    assert np.all(diff <= np.abs(x - y) / a + 1e-15)


def test_cutoff_sandwich():
    N = 4
    i = np.arange(1, N + 1, dtype=float)
    space, box = lp(N), ss.BoxSpec(1.0, i ** 2)
    a = ss.box_bounds(space, box)
    g = np.random.default_rng(3)
    for _ in range(2000):
        x = g.uniform(-4 * a, 4 * a)
        prod = np.prod([ss.eta_scaled(space, box, k, x[k]) for k in range(N)])
        if ss.box_contains(space, box, x):
            assert prod == 1.0
        if prod != 0:
            assert ss.box_contains(space, box.scaled(3.0), x)


def test_cylinder_functions():
    X = np.array([[0.5, 2.0, -1.0], [5.0, 0.0, 1.0]])
    assert np.allclose(ss.coordinate(1)(X), [2.0, 0.0])
    assert np.allclose(ss.cutoff(0)(X), [1.0, 0.0])
    poly = ss.polynomial({(1, 1): 2.0, (0, 0, 2): 1.0})
    assert np.allclose(poly(X), [2 * 0.5 * 2 + 1, 0 + 1])
    assert ss.coordinate(2)(np.array([1.0, 2.0, 3.0])) == 3.0
    with pytest.raises(InvalidInputError):
        ss.coordinate(3)(X)
    f = ss.cutoff(0, amplitude=2.0)
    assert f.spot_check(np.random.default_rng(0).normal(size=(100, 1)))


def test_build_fMk():
    N = 4
    space = lp(N)
    box = ss.BoxSpec(3.0, np.ones(N))
    f = ss.product_of_cutoffs([1.0])
    assert ss.build_fMk(f, space, box, 1).cutoffs == ()
    fk = ss.build_fMk(f, space, box, 3)
    assert fk.stage == 3
    b = 3 * ss.box_bounds(space, box)
    assert fk(np.array([0.0, b[1], 0.0])) == 0.0
    with pytest.raises(PreconditionError, match="coordinate 0"):
        ss.build_fMk(f, space, ss.BoxSpec(1.0, np.ones(N)), 3)


def test_build_fMk_difference_bound():
    N = 3
    space, box = lp(N), ss.BoxSpec(3.0, np.ones(N))
    f = ss.product_of_cutoffs([1.0])
    fk = ss.build_fMk(f, space, box, 3)
    g = np.random.default_rng(4)
    X = g.uniform(-10, 10, (5000, N))
    Xp = X.copy()
    Xp[:, 0] = g.uniform(-5, 5, 5000)
    assert np.all(np.abs(fk(X) - fk(Xp)) <= np.abs(f(X) - f(Xp)) + 1e-15)
    assert math.isfinite(fk.lipschitz)
