"""Truncated weighted sequence spaces, compact boxes, cutoffs and cylinder functions.

Coordinates are 0-based throughout: coordinate ``i`` of a point ``x`` is
``x[i]``.  All spaces carry ``N`` live coordinates; anything beyond is zero.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInputError, PreconditionError, ResourceLimitError

KINDS = ("weighted-lp", "weighted-linf", "product-RN")

__all__ = [
    "SpaceSpec", "BoxSpec", "CylinderFunction", "weights", "as_point", "norm",
    "metric_rn", "box_bounds", "box_contains", "epsilon_net", "eta", "eta_scaled",
    "build_fMk", "coordinate", "cutoff", "product_of_cutoffs", "polynomial",
    "from_table",
]


def weights(name: str, N: int, param: float = 0.0, eigenvalues=None) -> np.ndarray:
    """Named weight generators: constant(c), power(a) -> i^-a, eigen(m) -> lam_i^(-2m).

    Indices for ``power`` are 1-based (the first weight is 1).
    """
    idx = np.arange(1, N + 1, dtype=float)
    if name == "constant":
        w = np.full(N, float(param))
    elif name == "power":
        w = idx ** (-float(param))
    elif name == "eigen":
        if eigenvalues is None or len(eigenvalues) < N:
            raise InvalidInputError(f"eigen weights need at least {N} eigenvalues")
        w = np.asarray(eigenvalues[:N], float) ** (-2.0 * float(param))
    else:
        raise InvalidInputError(f"unknown weight generator {name!r}")
    return w


@dataclass(frozen=True, eq=False)
class SpaceSpec:
    kind: str
    N: int
    beta: np.ndarray
    p: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown space kind {self.kind!r}")
        if self.N < 1:
            raise InvalidInputError("N must be positive")
        beta = np.asarray(self.beta, float)
        if beta.shape != (self.N,):
            raise InvalidInputError(f"expected {self.N} weights, got shape {beta.shape}")
        # zero weights are allowed by the underlying theory but their meaning for
        # norms and boxes is ambiguous, so they are rejected here
        if not np.all(np.isfinite(beta)) or np.any(beta <= 0):
            raise InvalidInputError("weights must be finite and strictly positive")
        object.__setattr__(self, "beta", beta)
        if self.kind == "weighted-lp":
            if self.p is None or not self.p >= 1:
                raise InvalidInputError("weighted-lp needs p >= 1")
        else:
            object.__setattr__(self, "p", None)


@dataclass(frozen=True, eq=False)
class BoxSpec:
    M: float
    gamma: np.ndarray

    def __post_init__(self):
        if not self.M > 0:
            raise InvalidInputError("box level M must be positive")
        gamma = np.asarray(self.gamma, float)
        if np.any(~np.isfinite(gamma)) or np.any(gamma <= 0):
            raise InvalidInputError("gamma must be finite and positive")
        object.__setattr__(self, "gamma", gamma)

    def scaled(self, factor: float) -> "BoxSpec":
        return BoxSpec(self.M * factor, self.gamma)


def as_point(x, N: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InvalidInputError("a point is a 1-d coordinate vector")
    if N is not None and x.shape[0] != N:
        raise InvalidInputError(f"point has {x.shape[0]} coordinates, expected {N}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("point has non-finite coordinates")
    return x


def metric_rn(x, y) -> float:
    """Product metric sum_k 2^-k |x-y|_k / (1 + |x-y|_k), |.|_k over the first k coords.

    The weights of all k >= N are summed into the N-th term (their total is
    2^-(N-1)), which is exact for vectors that vanish beyond N.
    """
    x = as_point(x)
    y = as_point(y, x.shape[0])
    N = x.shape[0]
    partial = np.sqrt(np.cumsum((x - y) ** 2))
    w = 0.5 ** np.arange(1, N + 1)
    w[-1] = 0.5 ** (N - 1)
    return float(np.sum(w * partial / (1.0 + partial)))


def norm(space: SpaceSpec, x) -> float:
    x = as_point(x, space.N)
    if space.kind == "weighted-lp":
        p = space.p
        return float(np.sum(space.beta * np.abs(x) ** p) ** (1.0 / p))
    if space.kind == "weighted-linf":
        return float(np.max(space.beta * np.abs(x)))
    return metric_rn(x, np.zeros_like(x))


def box_bounds(space: SpaceSpec, box: BoxSpec) -> np.ndarray:
    """Per-coordinate half-widths a_{M,i} of the box D_M."""
    g = box.gamma[: space.N]
    if g.shape[0] < space.N:
        raise InvalidInputError("gamma shorter than the space truncation")
    if space.kind == "weighted-lp":
        return box.M * (g * space.beta) ** (-1.0 / space.p)
    if space.kind == "weighted-linf":
        return box.M / (g * space.beta)
    return box.M * g


def box_contains(space: SpaceSpec, box: BoxSpec, x, rtol: float = 1e-12) -> bool:
    x = as_point(x, space.N)
    a = box_bounds(space, box)
    return bool(np.all(np.abs(x) <= a * (1.0 + rtol)))


def _net_live_count(space: SpaceSpec, box: BoxSpec, eps: float) -> int:
    # smallest n whose neglected tail sum_{i>n} M^p / gamma_i is at most (eps/3)^p
    p = space.p
    tail = box.M ** p / box.gamma[: space.N]
    rem = np.concatenate([np.cumsum(tail[::-1])[::-1], [0.0]])
    return int(np.argmax(rem <= (eps / 3.0) ** p))


def epsilon_net(space: SpaceSpec, box: BoxSpec, eps: float, budget: int = 10**6) -> np.ndarray:
    """Finite eps-net of D_M in a weighted l^p space, as an array of shape (size, N).

    Grid points in the scaled variable s_i = beta_i^(1/p) x_i sit at -W + eps' j,
    j = 0 .. floor(2W/eps') + 1 with eps' = (eps/3) n^(-1/p), clamped to the box;
    W = max(M, M gamma_i^(-1/p)).  Coordinates past the live count n are set to 0.
    """
    if space.kind != "weighted-lp":
        raise InvalidInputError("epsilon_net is defined for weighted-lp spaces")
    if not eps > 0:
        raise InvalidInputError("eps must be positive")
    p = space.p
    n = _net_live_count(space, box, eps)
    if n == 0:
        return np.zeros((1, space.N))
    eps_p = (eps / 3.0) * n ** (-1.0 / p)
    axes = []
    size = 1
    for i in range(n):
        half = box.M * box.gamma[i] ** (-1.0 / p)
        width = max(box.M, half)
        j = np.arange(int(np.floor(2 * width / eps_p)) + 2)
        # the index count is kept verbatim, so clamping can repeat the end point
        s = np.clip(-width + eps_p * j, -half, half)
        axes.append(s / space.beta[i] ** (1.0 / p))
        size *= len(s)
        if size > budget:
            raise ResourceLimitError(f"epsilon-net size exceeds budget {budget} (at least {size})")
    net = np.zeros((size, space.N))
    for row, pt in enumerate(itertools.product(*axes)):
        net[row, :n] = pt
    return net


def eta(x):
    """Cutoff profile: 1 on |x| <= 1, 0 on |x| >= 3, quintic smoothstep ramp between.

    The ramp has maximal slope 15/16 < 1.
    """
    t = np.clip((np.abs(np.asarray(x, float)) - 1.0) / 2.0, 0.0, 1.0)
    return 1.0 - t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


def eta_scaled(space: SpaceSpec, box: BoxSpec, i: int, x):
    if not 0 <= i < space.N:
        raise InvalidInputError(f"coordinate {i} outside 0..{space.N - 1}")
    return eta(np.asarray(x, float) / box_bounds(space, box)[i])


@dataclass(frozen=True, eq=False)
class CylinderFunction:
    """A function of the first ``n`` coordinates, optionally times cutoff factors.

    ``base`` maps an (m, n) array to m values.  ``support`` gives per-coordinate
    half-widths of a box containing the support of ``base`` (inf = unbounded).
    ``cutoffs`` is a tuple of (coordinate, a) pairs, each contributing eta(x_i / a).
    """
    base: Callable[[np.ndarray], np.ndarray]
    n: int
    lipschitz: float = np.inf
    sup_bound: float = np.inf
    support: tuple | None = None
    cutoffs: tuple = ()
    depends: frozenset | None = None
    name: str = "f"

    @property
    def stage(self) -> int:
        return max([self.n] + [i + 1 for i, _ in self.cutoffs])

    @property
    def dependencies(self) -> frozenset:
        base = self.depends if self.depends is not None else frozenset(range(self.n))
        return frozenset(base) | frozenset(i for i, _ in self.cutoffs)

    def __call__(self, X):
        X = np.asarray(X, float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] < self.stage:
            raise InvalidInputError(f"{self.name} needs {self.stage} coordinates, got {X.shape[1]}")
        val = np.asarray(self.base(X[:, : self.n]), float)
        for i, a in self.cutoffs:
            val = val * eta(X[:, i] / a)
        return float(val[0]) if single else val

    def spot_check(self, X) -> bool:
        """True when the declared sup-norm bound holds on the sample points."""
        return bool(np.all(np.abs(self(X)) <= self.sup_bound * (1 + 1e-12)))


def coordinate(i: int) -> CylinderFunction:
    return CylinderFunction(lambda X: X[:, i], i + 1, 1.0, np.inf,
                            depends=frozenset([i]), name=f"x{i}")


def cutoff(i: int, scale: float = 1.0, amplitude: float = 1.0) -> CylinderFunction:
    support = [np.inf] * (i + 1)
    support[i] = 3.0 * scale
    return CylinderFunction(lambda X: amplitude * eta(X[:, i] / scale), i + 1,
                            abs(amplitude) / scale, abs(amplitude), tuple(support),
                            depends=frozenset([i]), name=f"eta(x{i}/{scale:g})")


def product_of_cutoffs(scales, amplitude: float = 1.0) -> CylinderFunction:
    scales = np.asarray(scales, float)

    def base(X):
        return amplitude * np.prod(eta(X / scales), axis=1)

    return CylinderFunction(base, len(scales), abs(amplitude) * float(np.sum(1 / scales)),
                            abs(amplitude), tuple(3.0 * scales), name="prod-eta")


def polynomial(terms: dict) -> CylinderFunction:
    """Polynomial sum_c coef * prod_j x_j^e_j, keyed by exponent tuples."""
    terms = {tuple(int(e) for e in k): float(c) for k, c in terms.items()}
    n = max((len(k) for k in terms), default=1)

    def base(X):
        out = np.zeros(X.shape[0])
        for exps, c in terms.items():
            out += c * np.prod(X[:, : len(exps)] ** np.asarray(exps), axis=1)
        return out

    constant = all(sum(k) == 0 for k in terms)
    return CylinderFunction(base, n, 0.0 if constant else np.inf,
                            abs(sum(terms.values())) if constant else np.inf,
                            depends=frozenset() if constant else None, name="poly")


def from_table(values: dict, N: int) -> CylinderFunction:
    """Function on a finite set of points, given as {coordinate tuple: value}."""
    keys = {tuple(np.round(k, 12)): v for k, v in values.items()}

    def base(X):
        return np.array([keys[tuple(np.round(row, 12))] for row in X])

    vals = np.fromiter(keys.values(), float)
    return CylinderFunction(base, N, np.inf, float(np.max(np.abs(vals))), name="table")


def build_fMk(f: CylinderFunction, space: SpaceSpec, box: BoxSpec, k: int) -> CylinderFunction:
    """Attach cutoff factors eta_{M,i}, n <= i < k, to a compactly supported f.

    Requires the cutoffs on coordinates below n to be identically 1 on the
    support of f, i.e. the support half-width must not exceed a_{M,i}.
    """
    if k < f.n or k > space.N:
        raise InvalidInputError(f"cutoff stage k={k} must satisfy {f.n} <= k <= {space.N}")
    a = box_bounds(space, box)
    if f.support is None:
        raise PreconditionError("f has no declared support box")
    for i in range(f.n):
        if f.support[i] > a[i]:
            raise PreconditionError(
                f"coordinate {i}: support half-width {f.support[i]:g} exceeds a_M={a[i]:g};"
                " increase M")
    extra = tuple((i, float(a[i])) for i in range(f.n, k))
    lip = f.lipschitz + f.sup_bound * float(np.sum(1.0 / a[f.n:k]))
    return CylinderFunction(f.base, f.n, lip, f.sup_bound, f.support, f.cutoffs + extra,
                            f.depends, f.name + f"*cut[{f.n}:{k}]")
