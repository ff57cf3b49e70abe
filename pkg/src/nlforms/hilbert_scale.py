"""Discretized Hilbert scale, free-field covariance and Gaussian field identities.

The operator H^-1 = w (-Delta + 1)^(-s) w with w(x) = (|x|^2 + 1)^(-s),
s = (d+1)/2, is realized on a periodic grid on [-R, R)^d.  The Laplacian part
acts by FFT.  Grid functions are flattened vectors of length n^d and
the inner product is the Riemann sum h^d * sum(f * g).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InvalidInputError, NumericalError
from .measures import CorrelatedGaussian


@dataclass(frozen=True)
class GridSpec:
    d: int
    R: float
    n: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise InvalidInputError("grid dimension must be 1, 2 or 3")
        if self.n < 8 or self.n % 2:
            raise InvalidInputError("points per axis must be even and >= 8")
        if not self.R > 0:
            raise InvalidInputError("half-extent R must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.R / self.n

    @property
    def size(self) -> int:
        return self.n ** self.d

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def cell(self) -> float:
        return self.h ** self.d

    def r2(self) -> np.ndarray:
        x = -self.R + self.h * np.arange(self.n)
        mesh = np.meshgrid(*([x] * self.d), indexing="ij")
        return sum(m * m for m in mesh)

    def k2(self) -> np.ndarray:
        k = 2 * np.pi * np.fft.fftfreq(self.n, d=self.h)
        mesh = np.meshgrid(*([k] * self.d), indexing="ij")
        return sum(m * m for m in mesh)

    def inner(self, f, g) -> float:
        return float(self.cell * np.sum(np.asarray(f) * np.asarray(g)))


def _spectral(grid: GridSpec, F: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
    """Apply a Fourier multiplier to the trailing grid axes of F (shape (..., n^d))."""
    lead = F.shape[:-1]
    G = F.reshape(lead + grid.shape)
    axes = tuple(range(len(lead), len(lead) + grid.d))
    out = np.fft.ifftn(np.fft.fftn(G, axes=axes) * multiplier, axes=axes).real
    return out.reshape(F.shape)


def apply_H_inverse(grid: GridSpec, f) -> np.ndarray:
    f = np.asarray(f, float)
    flat = f.reshape(f.shape[: f.ndim - grid.d] + (-1,)) if f.shape[-grid.d:] == grid.shape else f
    if flat.shape[-1] != grid.size:
        raise InvalidInputError(f"grid function has {flat.shape[-1]} values, expected {grid.size}")
    s = 0.5 * (grid.d + 1)
    w = (grid.r2() + 1.0).ravel() ** (-s)
    out = w * _spectral(grid, w * flat, (grid.k2() + 1.0) ** (-s))
    return out.reshape(f.shape)


def apply_resolvent(grid: GridSpec, f, m2: float) -> np.ndarray:
    """(-Delta + m2)^-1 on the periodic grid."""
    return _spectral(grid, np.asarray(f, float), 1.0 / (grid.k2() + m2))


@dataclass(frozen=True, eq=False)
class EigenSystem:
    grid: GridSpec
    values: np.ndarray        # non-increasing, after rescaling
    vectors: np.ndarray       # (K, n^d), orthonormal in the grid inner product
    scale: float              # eigenvalues were divided by this factor
    residuals: np.ndarray

    @property
    def K(self) -> int:
        return len(self.values)

    def hs_partial_sums(self) -> np.ndarray:
        return np.cumsum(self.values ** 2)

    def to_table(self) -> str:
        lines = ["# index lambda residual", f"# scale {self.scale!r}"]
        for i, (lam, res) in enumerate(zip(self.values, self.residuals), start=1):
            lines.append(f"{i} {lam:.17g} {res:.17g}")
        return "\n".join(lines) + "\n"


def read_eigen_table(text: str) -> np.ndarray:
    """Eigenvalues from a table produced by ``EigenSystem.to_table``."""
    vals = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            vals.append(float(line.split()[1]))
    if not vals:
        raise InvalidInputError("empty eigen table")
    return np.array(vals)


def h_inverse_matrix(grid: GridSpec) -> np.ndarray:
    M = apply_H_inverse(grid, np.eye(grid.size))
    return 0.5 * (M + M.T)


def eigensystem(grid: GridSpec, K: int, tol: float = 1e-8) -> EigenSystem:
    if not 1 <= K <= grid.size:
        raise InvalidInputError(f"K must be in 1..{grid.size}")
    M = h_inverse_matrix(grid)
    lam, vec = linalg.eigh(M, subset_by_index=[grid.size - K, grid.size - 1])
    lam, vec = lam[::-1], vec[:, ::-1].T.copy()
    if np.any(lam <= 0):
        raise NumericalError("non-positive eigenvalue in discretized H^-1")
    # sign convention: first entry of non-negligible size is positive
    for v in vec:
        j = np.argmax(np.abs(v) > 1e-12 * np.abs(v).max())
        if v[j] < 0:
            v *= -1
    res = np.linalg.norm(vec @ M - lam[:, None] * vec, axis=1)
    if np.any(res > tol * max(1.0, lam[0])):
        raise NumericalError(f"eigenpair residuals too large: max {res.max():.3g}")
    # the continuum operator has top eigenvalue at most 1; enforce this ordering
    scale = max(1.0, float(lam[0]))
    vec = vec / math.sqrt(grid.cell)
    return EigenSystem(grid, lam / scale, vec, scale, res)


class ScaleMap:
    """Coefficient map tau_m: a -> (lam_i^m a_i), isometric onto l^2 with weights lam^(-2m)."""

    def __init__(self, m: int, eigenvalues):
        self.m = int(m)
        self.lam = np.asarray(eigenvalues, float)
        if np.any(self.lam <= 0):
            raise InvalidInputError("eigenvalues must be positive")

    def weights(self, K=None) -> np.ndarray:
        return self.lam[:K] ** (-2.0 * self.m)

    def tau(self, coeffs) -> np.ndarray:
        a = np.asarray(coeffs, float)
        return a * self.lam[: a.shape[-1]] ** self.m

    def tau_inverse(self, b) -> np.ndarray:
        b = np.asarray(b, float)
        return b * self.lam[: b.shape[-1]] ** (-self.m)

    @staticmethod
    def level_norm(coeffs) -> float:
        return float(np.linalg.norm(coeffs))

    def weighted_norm(self, b) -> float:
        b = np.asarray(b, float)
        return float(np.sqrt(np.sum(self.weights(b.shape[-1]) * b * b)))


def free_field_covariance(grid: GridSpec, m2: float, eig: EigenSystem, K: int | None = None):
    """C_ij = (phi_i, (-Delta + m2)^-1 phi_j) for the first K eigenvectors."""
    if not m2 > 0:
        raise InvalidInputError("m0^2 must be positive")
    K = eig.K if K is None else K
    V = eig.vectors[:K]
    C = grid.cell * V @ apply_resolvent(grid, V, m2).T
    C = 0.5 * (C + C.T)
    if np.linalg.eigvalsh(C).min() <= 0:
        raise NumericalError("free-field covariance is not positive definite")
    return C


def free_field_model(grid: GridSpec, m2: float, eig: EigenSystem, K: int | None = None):
    """Gaussian law of the first K eigen-coefficients of the free field."""
    return CorrelatedGaussian(free_field_covariance(grid, m2, eig, K))


def gaussian_characteristic(C, phi):
    """exp(-phi^T C phi / 2); phi may be a batch of coefficient rows."""
    phi = np.asarray(phi, float)
    q = np.einsum("...i,ij,...j->...", phi, C, phi)
    return np.exp(-0.5 * q)


def corrupted_characteristic(C):
    """A deliberately invalid functional, C(phi) (1 + sin|phi| / 2), for negative controls."""
    def functional(phi):
        phi = np.asarray(phi, float)
        return gaussian_characteristic(C, phi) * (1 + 0.5 * np.sin(np.linalg.norm(phi, axis=-1)))
    return functional


def pd_gram_check(functional, phis) -> float:
    """Smallest eigenvalue of the Hermitian matrix [functional(phi_i - phi_j)]."""
    phis = np.atleast_2d(np.asarray(phis, float))
    diffs = phis[:, None, :] - phis[None, :, :]
    G = np.asarray(functional(diffs))
    G = 0.5 * (G + G.conj().T)
    return float(np.linalg.eigvalsh(G).min())


def increment_gap(functional, psis, phis) -> np.ndarray:
    """2|C(phi) - 1| - |C(psi + phi) - C(psi)|^2, which is >= 0 for a valid functional."""
    psis, phis = np.asarray(psis, float), np.asarray(phis, float)
    lhs = np.abs(functional(psis + phis) - functional(psis)) ** 2
    return 2 * np.abs(functional(phis) - 1) - lhs


def wick4(t, a: float):
    """Fourth Wick power of a Gaussian variable with variance a: t^4 - 6 a t^2 + 3 a^2."""
    if a < 0:
        raise InvalidInputError("variance must be nonnegative")
    t = np.asarray(t, float)
    return sum(math.factorial(4) / (math.factorial(n) * math.factorial(4 - 2 * n))
               * t ** (4 - 2 * n) * (-a / 2) ** n for n in range(3))


def double_factorial(n: int) -> int:
    """(2n - 1)!!, the number of pairings of 2n objects."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    return math.prod(range(2 * n - 1, 0, -2))


def pairing_moment(a) -> float:
    """Sum over all perfect pairings of prod a[i, j] (the Gaussian 2n-point moment)."""
    a = np.asarray(a, float)
    k = a.shape[0]
    if k % 2:
        return 0.0

    def rec(idx):
        if not idx:
            return 1.0
        first, rest = idx[0], idx[1:]
        return sum(a[first, rest[j]] * rec(rest[:j] + rest[j + 1:]) for j in range(len(rest)))

    return float(rec(tuple(range(k))))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _panel_rule(panels: int):
    edges = np.linspace(0.0, np.pi, panels + 1)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * _GL_NODES).ravel()
    weights = (half[:, None] * _GL_WEIGHTS).ravel()
    return nodes, weights


def lattice_propagator(d: int, eps: float, m2: float, x, tol: float = 1e-8,
                       max_panels: int | None = None) -> float:
    """Lattice free propagator D(x) by tensor Gauss-Legendre panels on the Brillouin zone.

    The integrand is even in each momentum component, so the zone is folded to
    [0, pi]^d in the rescaled momentum q = eps k.  Panels are doubled until two
    successive values agree to ``tol``.
    """
    if not m2 > 0 or not eps > 0:
        raise InvalidInputError("m0^2 and eps must be positive")
    x = np.atleast_1d(np.asarray(x, float))
    if x.shape != (d,):
        raise InvalidInputError(f"lattice vector must have {d} components")
    n = x / eps
    if not np.allclose(n, np.round(n), atol=1e-9):
        raise InvalidInputError("x must lie on the lattice eps Z^d")
    n = np.abs(np.round(n))
    mu2 = m2 * eps * eps
    max_panels = max_panels or (1024 if d == 1 else 128)

    def integral(panels):
        q, w = _panel_rule(panels)
        mesh = np.meshgrid(*([q] * d), indexing="ij")
        wts = np.ones_like(mesh[0])
        num = np.ones_like(mesh[0])
        den = np.full_like(mesh[0], mu2)
        for axis in range(d):
            shape = [1] * d
            shape[axis] = -1
            wts = wts * w.reshape(shape)
            num = num * np.cos(mesh[axis] * n[axis])
            den = den + 2 * (1 - np.cos(mesh[axis]))
        return float(np.sum(wts * num / den)) / np.pi ** d

    panels = 4
    prev = integral(panels)
    while True:
        panels *= 2
        cur = integral(panels)
        if abs(cur - prev) < tol * eps ** (d - 2):
            return eps ** (2 - d) * cur
        if panels >= max_panels:
            raise NumericalError(
                f"propagator quadrature not converged: change {abs(cur - prev):.3g} at {panels} panels")
        prev = cur


def periodic_propagator(d: int, L: int, eps: float, m2: float, x) -> float:
    """Exact covariance of the lambda = 0 lattice field on a periodic box of L^d sites."""
    n = np.round(np.atleast_1d(np.asarray(x, float)) / eps)
    q = 2 * np.pi * np.arange(L) / L
    total = 0.0
    for qs in itertools.product(q, repeat=d):
        qs = np.asarray(qs)
        total += np.cos(qs @ n) / (2 * np.sum(1 - np.cos(qs)) + m2 * eps * eps)
    return float(eps ** (2 - d) * total / L ** d)


def propagator_l1(eps: float, m2: float, radius: int) -> float:
    """eps * sum_{|x| <= radius eps} |D(x)| on the one-dimensional lattice."""
    vals = [lattice_propagator(1, eps, m2, [j * eps]) for j in range(radius + 1)]
    return float(eps * (abs(vals[0]) + 2 * sum(abs(v) for v in vals[1:])))
