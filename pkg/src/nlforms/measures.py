"""Probability laws on truncated spaces with exact single-coordinate conditionals.

Four model variants are provided:

* ``ProductModel``: independent one-dimensional marginals.
* ``CorrelatedGaussian``: centered (or shifted) Gaussian with a given covariance.
* ``LatticePhi4``: periodic lattice Phi^4 Gibbs measure, sampled by heat-bath Gibbs.
* ``DiscreteModel``: a joint pmf on a finite product grid, for brute-force oracles.

Every model exposes ``conditional(i, x)`` returning a one-dimensional law for
coordinate ``i`` given the other coordinates of ``x`` (``x[i]`` is ignored),
and vectorized ``sample_conditional(i, X, rng)`` drawing one value per row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import (DiagnosticsError, InvalidInputError, NumericalError,
                     UnsupportedModelError)

SQRT2 = math.sqrt(2.0)


# --------------------------------------------------------------------------
# one-dimensional laws


class Gaussian1D:
    kind = "gaussian"

    def __init__(self, mean: float, var: float):
        if not var >= 0:
            raise InvalidInputError("variance must be nonnegative")
        self.mean = float(mean)
        self.var = float(var)

    @property
    def sd(self):
        return math.sqrt(self.var)

    def sample(self, rng, size=None):
        return self.mean + self.sd * rng.standard_normal(size)

    def logpdf(self, y):
        y = np.asarray(y, float)
        return -0.5 * (y - self.mean) ** 2 / self.var - 0.5 * math.log(2 * math.pi * self.var)

    def pdf(self, y):
        return np.exp(self.logpdf(y))

    def bound_on(self, lo: float, hi: float) -> float:
        return float(self.pdf(min(max(self.mean, lo), hi)))

    def tail(self, threshold: float) -> float:
        """P(|Y| > threshold)."""
        if self.var == 0:
            return float(abs(self.mean) > threshold)
        s = self.sd * SQRT2
        return float(0.5 * special.erfc((threshold - self.mean) / s)
                     + 0.5 * special.erfc((threshold + self.mean) / s))

    def moment2(self) -> float:
        return self.mean ** 2 + self.var

    def support(self):
        return -np.inf, np.inf


def _pl_inverse(grid, dens, cdf, u):
    """Invert the CDF of a piecewise-linear density, row-wise for 2-d inputs."""
    if grid.ndim == 1:
        k = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, len(grid) - 2)
        t0, h = grid[k], grid[k + 1] - grid[k]
        f0, f1, c0 = dens[k], dens[k + 1], cdf[k]
    else:
        k = np.clip((cdf <= u[:, None]).sum(axis=1) - 1, 0, grid.shape[1] - 2)
        rows = np.arange(grid.shape[0])
        t0 = grid[rows, k]
        h = grid[rows, k + 1] - t0
        f0, f1, c0 = dens[rows, k], dens[rows, k + 1], cdf[rows, k]
    r = np.maximum(u - c0, 0.0)
    slope = (f1 - f0) / h
    disc = np.sqrt(np.maximum(f0 * f0 + 2.0 * slope * r, 0.0))
    denom = f0 + disc
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(denom > 0, 2.0 * r / denom, 0.0)
    return t0 + np.clip(tau, 0.0, h)


class GridDensity1D:
    """Piecewise-linear density through (grid, values), zero outside the grid.

    The values are normalized so the interpolant integrates to one exactly.
    Sampling inverts the interpolant's CDF in closed form.
    """
    kind = "grid"

    def __init__(self, grid, values):
        grid = np.asarray(grid, float)
        values = np.asarray(values, float)
        if grid.ndim != 1 or grid.shape != values.shape or len(grid) < 2:
            raise InvalidInputError("grid density needs matching 1-d arrays of length >= 2")
        if np.any(np.diff(grid) <= 0):
            raise InvalidInputError("grid must be strictly increasing")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InvalidInputError("density values must be finite and nonnegative")
        cells = 0.5 * (values[1:] + values[:-1]) * np.diff(grid)
        mass = cells.sum()
        if not mass > 0:
            raise NumericalError("grid density has zero mass")
        self.grid = grid
        self.values = values / mass
        self.cdf = np.concatenate([[0.0], np.cumsum(cells / mass)])

    @classmethod
    def uniform(cls, a: float, b: float):
        return cls([a, b], [1.0, 1.0])

    def sample(self, rng, size=None):
        u = rng.random(size)
        return _pl_inverse(self.grid, self.values, self.cdf, u)

    def pdf(self, y):
        return np.interp(y, self.grid, self.values, left=0.0, right=0.0)

    def logpdf(self, y):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(y))

    def cdf_at(self, y):
        y = np.clip(np.asarray(y, float), self.grid[0], self.grid[-1])
        k = np.clip(np.searchsorted(self.grid, y, side="right") - 1, 0, len(self.grid) - 2)
        t = y - self.grid[k]
        f0 = self.values[k]
        slope = (self.values[k + 1] - f0) / (self.grid[k + 1] - self.grid[k])
        return self.cdf[k] + f0 * t + 0.5 * slope * t * t

    def bound_on(self, lo: float, hi: float) -> float:
        # the maximum of a piecewise-linear function sits at a node or an endpoint
        inside = self.values[(self.grid >= lo) & (self.grid <= hi)]
        ends = self.pdf(np.array([lo, hi]))
        return float(max(inside.max(initial=0.0), ends.max()))

    def tail(self, threshold: float) -> float:
        return float(1.0 - (self.cdf_at(threshold) - self.cdf_at(-threshold)))

    def moment(self, power: int) -> float:
        # two-point Gauss-Legendre is exact for (linear density) * (degree <= 2)
        g = self.grid
        nodes = np.array([-1, 1]) / math.sqrt(3)
        mid, half = 0.5 * (g[1:] + g[:-1]), 0.5 * np.diff(g)
        total = 0.0
        for z in nodes:
            t = mid + half * z
            total += np.sum(half * np.interp(t, g, self.values) * t ** power)
        return float(total)

    def moment2(self) -> float:
        return self.moment(2)

    @property
    def mean(self) -> float:
        return self.moment(1)

    def support(self):
        return self.grid[0], self.grid[-1]


class Atoms1D:
    kind = "atoms"

    def __init__(self, locations, masses):
        loc = np.asarray(locations, float)
        m = np.asarray(masses, float)
        if loc.shape != m.shape or loc.ndim != 1 or np.any(m < 0) or not m.sum() > 0:
            raise InvalidInputError("atoms need matching locations and nonnegative masses")
        order = np.argsort(loc)
        self.locations = loc[order]
        self.masses = m[order] / m.sum()

    def sample(self, rng, size=None):
        return self.locations[rng.choice(len(self.locations), size=size, p=self.masses)]

    def pdf(self, y):
        raise UnsupportedModelError("atomic law has no density")

    logpdf = pdf

    def bound_on(self, lo, hi):
        raise UnsupportedModelError("atomic law has no density bound L_K")

    def tail(self, threshold: float) -> float:
        return float(self.masses[np.abs(self.locations) > threshold].sum())

    def moment2(self) -> float:
        return float(np.sum(self.masses * self.locations ** 2))

    @property
    def mean(self) -> float:
        return float(np.sum(self.masses * self.locations))

    def support(self):
        return self.locations[0], self.locations[-1]


# --------------------------------------------------------------------------
# models


class MeasureModel:
    variant = "abstract"
    N: int

    def sample(self, rng, n: int) -> np.ndarray:
        return self.draw(rng, n)[0]

    def draw(self, rng, n: int):
        """Return (samples of shape (n, N), group labels or None).

        Group labels mark draws that share a Markov chain; they are used to
        form honest standard errors from per-chain means.
        """
        raise NotImplementedError

    def conditional(self, i: int, x):
        raise NotImplementedError

    def sample_conditional(self, i: int, X, rng) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.array([self.conditional(i, row).sample(rng) for row in X])

    def exact_marginal(self, i: int):
        """Closed-form marginal of coordinate i, or None when only MC is available."""
        return None

    def _check_index(self, i):
        if not 0 <= i < self.N:
            raise InvalidInputError(f"coordinate {i} outside 0..{self.N - 1}")


class ProductModel(MeasureModel):
    variant = "product-1d"

    def __init__(self, marginals):
        self.marginals = list(marginals)
        self.N = len(self.marginals)
        if self.N < 1:
            raise InvalidInputError("product model needs at least one marginal")

    @classmethod
    def standard_normal(cls, N: int):
        return cls([Gaussian1D(0.0, 1.0) for _ in range(N)])

    def draw(self, rng, n):
        if self.marginals and all(isinstance(m, Gaussian1D) for m in self.marginals):
            mu = np.array([m.mean for m in self.marginals])
            sd = np.array([m.sd for m in self.marginals])
            return mu + sd * rng.standard_normal((n, self.N)), None
        return np.column_stack([m.sample(rng, n) for m in self.marginals]), None

    def conditional(self, i, x=None):
        self._check_index(i)
        return self.marginals[i]

    def sample_conditional(self, i, X, rng):
        return self.marginals[i].sample(rng, np.atleast_2d(X).shape[0])

    def exact_marginal(self, i):
        return self.marginals[i]


class CorrelatedGaussian(MeasureModel):
    variant = "correlated-gaussian"

    def __init__(self, cov, mean=None):
        cov = np.asarray(cov, float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise InvalidInputError("covariance must be square")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12 * max(1.0, np.abs(cov).max()):
            raise InvalidInputError("covariance must be symmetric")
        cov = 0.5 * (cov + cov.T)
        try:
            self.chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise InvalidInputError("covariance is not positive definite") from exc
        self.cov = cov
        self.N = cov.shape[0]
        self.mean = np.zeros(self.N) if mean is None else np.asarray(mean, float)
        self.precision = np.linalg.inv(cov)
        self.precision = 0.5 * (self.precision + self.precision.T)

    def draw(self, rng, n):
        return self.mean + rng.standard_normal((n, self.N)) @ self.chol.T, None

    def _cond_params(self, i, X):
        P = self.precision
        d = np.atleast_2d(X) - self.mean
        others = d @ P[i] - d[:, i] * P[i, i]
        return self.mean[i] - others / P[i, i], 1.0 / P[i, i]

    def conditional(self, i, x):
        self._check_index(i)
        m, v = self._cond_params(i, np.asarray(x, float))
        return Gaussian1D(m[0], v)

    def sample_conditional(self, i, X, rng):
        m, v = self._cond_params(i, X)
        return m + math.sqrt(v) * rng.standard_normal(m.shape[0])

    def exact_marginal(self, i):
        return Gaussian1D(self.mean[i], self.cov[i, i])


@dataclass(frozen=True)
class Phi4Params:
    d: int
    L: int
    m2: float
    lam: float = 0.0
    eps: float = 1.0
    a_eps: float | None = None
    burn_in: int = 200
    thin: int = 2
    chains: int = 500
    guard: float = 1e6

    def __post_init__(self):
        if self.d not in (1, 2):
            raise InvalidInputError("lattice dimension must be 1 or 2")
        if self.L < 2:
            raise InvalidInputError("need at least 2 sites per axis")
        if not self.m2 > 0 or not self.eps > 0:
            raise InvalidInputError("m0^2 and lattice spacing must be positive")
        if not self.lam >= 0:
            raise InvalidInputError("coupling must be nonnegative")

    @property
    def mass_term(self) -> float:
        # default counter term: no renormalization, a_eps = m0^2
        return self.m2 if self.a_eps is None else float(self.a_eps)

    @property
    def n_sites(self) -> int:
        return self.L ** self.d

    def site_index(self, coords) -> int:
        return int(np.ravel_multi_index(tuple(np.mod(coords, self.L)), (self.L,) * self.d))

    def neighbors(self) -> np.ndarray:
        """(n_sites, 2d) neighbor table, forward then backward along each axis."""
        shape = (self.L,) * self.d
        idx = np.arange(self.n_sites).reshape(shape)
        cols = []
        for axis in range(self.d):
            cols.append(np.roll(idx, -1, axis=axis).ravel())
            cols.append(np.roll(idx, 1, axis=axis).ravel())
        return np.column_stack(cols)


def phi4_action(params: Phi4Params, config) -> float:
    """Lattice action with periodic bonds (x, x + e_axis), one per site and axis."""
    phi = np.asarray(config, float)
    if phi.shape != (params.n_sites,):
        raise InvalidInputError(f"configuration needs {params.n_sites} sites")
    d, e = params.d, params.eps
    forward = params.neighbors()[:, 0::2]
    grad = np.sum((phi[:, None] - phi[forward]) ** 2)
    return float(0.5 * e ** (d - 2) * grad
                 + 0.5 * params.mass_term * e ** d * np.sum(phi ** 2)
                 + 0.5 * params.lam * e ** d * np.sum(phi ** 4))


_GRID_POINTS = 513
_TAIL_TOL = 1e-10


def _phi4_grids(A: float, B: np.ndarray, C: float):
    """Grid densities proportional to exp(-(A t^2 - B t + C t^4)), one row per B.

    Returns (grid, unnormalized density, mass, spacing).  The grid is centered
    at the mode and widened until a log-concavity bound on the mass outside it
    drops below _TAIL_TOL of the captured mass.
    """
    B = np.atleast_1d(np.asarray(B, float))
    t = B / (2 * A)
    if C > 0:
        for _ in range(60):
            step = (2 * A * t - B + 4 * C * t ** 3) / (2 * A + 12 * C * t * t)
            t = t - step
            if np.all(np.abs(step) <= 1e-9 * (1 + np.abs(t))):
                break
    # Taylor coefficients of V(t + z) - V(t), exact for the quartic
    c1 = (2 * A * t - B + 4 * C * t ** 3)[:, None]
    c2 = (A + 6 * C * t * t)[:, None]
    c3 = (4 * C * t)[:, None]
    width = 8.0 / np.sqrt(2 * c2[:, 0])
    s = np.linspace(-1.0, 1.0, _GRID_POINTS)
    for _ in range(20):
        z = width[:, None] * s
        dens = np.exp(-(z * (c1 + z * (c2 + z * (c3 + C * z)))))
        h = width * (2.0 / (_GRID_POINTS - 1))
        mass = h * (dens.sum(axis=1) - 0.5 * (dens[:, 0] + dens[:, -1]))
        # log-concave tails: beyond an edge b the density is below rho(b) exp(-|V'(b)| |t-b|)
        zh, zl = width, -width
        dv_hi = c1[:, 0] + zh * (2 * c2[:, 0] + zh * (3 * c3[:, 0] + 4 * C * zh))
        dv_lo = -(c1[:, 0] + zl * (2 * c2[:, 0] + zl * (3 * c3[:, 0] + 4 * C * zl)))
        tail = dens[:, -1] / dv_hi + dens[:, 0] / dv_lo
        bad = tail > _TAIL_TOL * mass
        if not np.any(bad):
            return t[:, None] + z, dens, mass, h
        width = np.where(bad, 2 * width, width)
    raise NumericalError("phi4 conditional support did not capture 1-1e-10 of the mass")


class LatticePhi4(MeasureModel):
    variant = "lattice-phi4"

    def __init__(self, params: Phi4Params):
        self.params = params
        self.N = params.n_sites
        self.nbr = params.neighbors()
        d, e = params.d, params.eps
        self._A = d * e ** (d - 2) + 0.5 * params.mass_term * e ** d
        self._Bscale = e ** (d - 2)
        self._C = 0.5 * params.lam * e ** d
        if not self._A > 0:
            raise InvalidInputError("conditional quadratic coefficient must be positive")
        if params.L % 2 == 0:
            parity = np.indices((params.L,) * d).sum(axis=0).ravel() % 2
            self._colors = [np.flatnonzero(parity == c) for c in (0, 1)]
        else:
            self._colors = [np.array([s]) for s in range(self.N)]

    def _B(self, X, sites):
        return self._Bscale * X[:, self.nbr[sites]].sum(axis=-1)

    def conditional(self, i, x):
        self._check_index(i)
        x = np.asarray(x, float)
        B = self._Bscale * x[self.nbr[i]].sum()
        grid, dens, _, _ = _phi4_grids(self._A, np.array([B]), self._C)
        return GridDensity1D(grid[0], dens[0])

    def _draw_batch(self, B, rng):
        grid, dens, mass, h = _phi4_grids(self._A, B, self._C)
        dens = dens / mass[:, None]
        cells = (0.5 * h)[:, None] * (dens[:, 1:] + dens[:, :-1])
        cdf = np.concatenate([np.zeros((len(B), 1)), np.cumsum(cells, axis=1)], axis=1)
        return _pl_inverse(grid, dens, cdf, rng.random(len(B)))

    def sample_conditional(self, i, X, rng):
        X = np.atleast_2d(X)
        return self._draw_batch(self._B(X, i), rng)

    def sweep(self, X, rng):
        """One heat-bath sweep (checkerboard when L is even), in place."""
        for sites in self._colors:
            B = self._B(X, sites)
            X[:, sites] = self._draw_batch(B.ravel(), rng).reshape(B.shape)
        if not np.all(np.abs(X) < self.params.guard):
            raise DiagnosticsError(f"Gibbs chain left the guard region |phi| < {self.params.guard}")

    def sample_chains(self, rng, n_chains: int, n_keep: int, X0=None):
        """Run independent chains; returns (samples (n_chains, n_keep, N), sweeps used)."""
        p = self.params
        X = np.zeros((n_chains, self.N)) if X0 is None else np.array(X0, float)
        out = np.empty((n_chains, n_keep, self.N))
        for _ in range(p.burn_in):
            self.sweep(X, rng)
        for k in range(n_keep):
            for _ in range(p.thin):
                self.sweep(X, rng)
            out[:, k] = X
        return out, p.burn_in + n_keep * p.thin

    def draw(self, rng, n):
        chains = max(1, min(n, self.params.chains))
        keep = -(-n // chains)
        out, _ = self.sample_chains(rng, chains, keep)
        groups = np.repeat(np.arange(chains)[:, None], keep, axis=1)
        return out.reshape(-1, self.N)[:n], groups.ravel()[:n]


class DiscreteModel(MeasureModel):
    """Joint pmf on the product grid atoms[0] x ... x atoms[N-1]."""
    variant = "discrete-test"

    def __init__(self, atoms, pmf):
        self.atoms = [np.asarray(a, float) for a in atoms]
        pmf = np.asarray(pmf, float)
        self.N = len(self.atoms)
        if pmf.shape != tuple(len(a) for a in self.atoms):
            raise InvalidInputError("pmf shape must match the atom grids")
        if np.any(pmf < 0) or not pmf.sum() > 0:
            raise InvalidInputError("pmf must be nonnegative with positive mass")
        self.pmf = pmf / pmf.sum()

    @classmethod
    def product(cls, atoms, masses):
        pmf = np.ones(())
        for m in masses:
            pmf = np.multiply.outer(pmf, np.asarray(m, float) / np.sum(m))
        return cls(atoms, pmf)

    @classmethod
    def discretized_gaussian(cls, n_points: int, N: int = 1, width: float = 6.0):
        """Product of standard normals restricted to an equispaced grid on [-width, width]."""
        y = np.linspace(-width, width, n_points)
        w = np.exp(-0.5 * y * y)
        return cls.product([y] * N, [w] * N)

    @property
    def n_states(self) -> int:
        return self.pmf.size

    def states(self) -> np.ndarray:
        """All states in C order, shape (n_states, N)."""
        mesh = np.meshgrid(*self.atoms, indexing="ij")
        return np.column_stack([m.ravel() for m in mesh])

    def index_of(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        idx = np.empty(X.shape, dtype=int)
        for j, a in enumerate(self.atoms):
            k = np.clip(np.searchsorted(a, X[:, j]), 0, len(a) - 1)
            km = np.clip(k - 1, 0, len(a) - 1)
            k = np.where(np.abs(a[km] - X[:, j]) < np.abs(a[k] - X[:, j]), km, k)
            if not np.allclose(a[k], X[:, j], rtol=0, atol=1e-9):
                raise InvalidInputError(f"coordinate {j} value is not an atom of the model")
            idx[:, j] = k
        return idx

    def _cond_table(self, i, X):
        idx = self.index_of(X)
        moved = np.moveaxis(self.pmf, i, -1)
        rest = tuple(idx[:, j] for j in range(self.N) if j != i)
        rows = moved[rest] if rest else np.broadcast_to(moved, (idx.shape[0], moved.shape[-1]))
        tot = rows.sum(axis=1, keepdims=True)
        if np.any(tot <= 0):
            raise InvalidInputError("conditioning on a zero-probability configuration")
        return rows / tot

    def conditional(self, i, x):
        self._check_index(i)
        return Atoms1D(self.atoms[i], self._cond_table(i, np.asarray(x, float))[0])

    def sample_conditional(self, i, X, rng):
        probs = self._cond_table(i, X)
        cdf = np.cumsum(probs, axis=1)
        u = rng.random(probs.shape[0]) * cdf[:, -1]
        k = np.minimum((cdf <= u[:, None]).sum(axis=1), probs.shape[1] - 1)
        return self.atoms[i][k]

    def draw(self, rng, n):
        flat = rng.choice(self.pmf.size, size=n, p=self.pmf.ravel())
        idx = np.unravel_index(flat, self.pmf.shape)
        return np.column_stack([a[k] for a, k in zip(self.atoms, idx)]), None

    def exact_marginal(self, i):
        axes = tuple(j for j in range(self.N) if j != i)
        return Atoms1D(self.atoms[i], self.pmf.sum(axis=axes))


# --------------------------------------------------------------------------
# estimators


def grouped_mean(values, groups=None):
    """Sample mean with stderr; correlated draws are batched by group label."""
    values = np.asarray(values, float)
    n = values.shape[0]
    if n == 0:
        raise InvalidInputError("no samples")
    if groups is None:
        se = values.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
        return float(values.mean()), float(se)
    labels, inv = np.unique(groups, return_inverse=True)
    sums = np.bincount(inv, weights=values)
    counts = np.bincount(inv)
    means = sums / counts
    g = len(labels)
    se = means.std(ddof=1) / math.sqrt(g) if g > 1 else 0.0
    return float(values.mean()), float(se)


def cond_density_bound(model: MeasureModel, i: int, x, K) -> float:
    lo, hi = K
    if not lo <= hi:
        raise InvalidInputError("interval K must satisfy lo <= hi")
    return model.conditional(i, x).bound_on(lo, hi)


def estimate_tail(model: MeasureModel, i: int, threshold: float, nsamples: int, rng):
    """(estimate of mu(|X_i| > threshold), stderr); exact when the marginal is closed-form."""
    if not threshold >= 0:
        raise InvalidInputError("threshold must be nonnegative")
    if nsamples <= 0:
        raise InvalidInputError("nsamples must be positive")
    model._check_index(i)
    exact = model.exact_marginal(i)
    if exact is not None:
        return exact.tail(threshold), 0.0
    X, groups = model.draw(rng, nsamples)
    hits = (np.abs(X[:, i]) > threshold).astype(float)
    if groups is None:
        p = hits.mean()
        return float(p), float(math.sqrt(p * (1 - p) / nsamples))
    return grouped_mean(hits, groups)


def moment2(model: MeasureModel, i: int, nsamples: int, rng):
    if nsamples <= 0:
        raise InvalidInputError("nsamples must be positive")
    model._check_index(i)
    exact = model.exact_marginal(i)
    if exact is not None:
        return exact.moment2(), 0.0
    X, groups = model.draw(rng, nsamples)
    return grouped_mean(X[:, i] ** 2, groups)
