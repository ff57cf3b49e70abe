"""Monte-Carlo and exact evaluation of the truncated non-local forms.

For a coordinate i the truncated form is

    E_i(u, v) = E_x E_{y, y' ~ mu(.|rest)} [ 1{|y - y'| > delta} |y - y'|^-(alpha+1) D_i u D_i v ]

where D_i w is w with x_i := y minus w with x_i := y'.  Draws for coordinate i
come from the stream (seed, "form", i, block), so two estimates sharing a seed
use common random numbers regardless of the functions being integrated.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .errors import InvalidInputError, PreconditionError, ResourceLimitError
from .measures import DiscreteModel, MeasureModel, cond_density_bound, estimate_tail, grouped_mean
from .seqspace import BoxSpec, CylinderFunction, SpaceSpec, box_bounds


@dataclass(frozen=True)
class FormSpec:
    alpha: float
    delta: float
    nsamples: int = 10_000
    coords: tuple | None = None
    partitions: int = 1

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise InvalidInputError("alpha must lie in (0, 2)")
        if not self.delta > 0:
            raise InvalidInputError("jump cutoff delta must be positive")
        if self.nsamples < 1:
            raise InvalidInputError("nsamples must be positive")


@dataclass
class FormEstimate:
    value: float
    stderr: float
    nsamples: int
    alpha: float
    delta: float
    per_coordinate: dict = field(default_factory=dict)

    def record(self) -> dict:
        return {
            "value": self.value, "stderr": self.stderr, "nsamples": self.nsamples,
            "alpha": self.alpha, "delta": self.delta,
            "per_coordinate": [{"i": i, "value": v, "stderr": s, "skipped": sk}
                               for i, (v, s, sk) in sorted(self.per_coordinate.items())],
        }


def _with(X, i, y):
    Z = X.copy()
    Z[:, i] = y
    return Z


def kernel_terms(u, v, i, X, Y, Yp, alpha, delta=0.0):
    """Integrand values 1{|y-y'|>delta} |y-y'|^-(alpha+1) D_i u D_i v, one per row."""
    X = np.atleast_2d(np.asarray(X, float))
    du = u(_with(X, i, Y)) - u(_with(X, i, Yp))
    dv = du if v is u else v(_with(X, i, Y)) - v(_with(X, i, Yp))
    gap = np.abs(np.asarray(Y, float) - np.asarray(Yp, float))
    keep = gap > delta
    with np.errstate(divide="ignore"):
        k = np.where(keep, gap ** -(alpha + 1.0), 0.0)
    return k * (du * dv)


def phi_alpha(u, v, i, y, yp, x, alpha):
    """Pointwise kernel |y-y'|^-(alpha+1) D_i u D_i v at the point x (x[i] is ignored)."""
    if y == yp:
        raise InvalidInputError("the kernel is undefined on the diagonal y = y'")
    x = np.asarray(x, float)[None, :]
    return float(kernel_terms(u, v, i, x, [y], [yp], alpha)[0])


def form_i_estimate(model: MeasureModel, u, v, i: int, spec: FormSpec, seed: int) -> FormEstimate:
    blocks = rngmod.block_sizes(spec.nsamples, spec.partitions)

    def run_block(b):
        g = rngmod.stream(seed, "form", i, b)
        X, groups = model.draw(g, blocks[b])
        Y = model.sample_conditional(i, X, g)
        Yp = model.sample_conditional(i, X, g)
        return grouped_mean(kernel_terms(u, v, i, X, Y, Yp, spec.alpha, spec.delta), groups)

    if len(blocks) > 1:
        # each block owns its stream; results are merged in block order
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            results = list(pool.map(run_block, range(len(blocks))))
    else:
        results = [run_block(0)]
    means = [m for m, _ in results]
    ses = [s for _, s in results]
    w = np.asarray(blocks, float) / spec.nsamples
    value = float(np.sum(w * np.asarray(means)))
    se = float(math.sqrt(np.sum((w * np.asarray(ses)) ** 2)))
    return FormEstimate(value, se, spec.nsamples, spec.alpha, spec.delta, {i: (value, se, False)})


def form_estimate(model: MeasureModel, u, v, spec: FormSpec, seed: int) -> FormEstimate:
    """Sum of coordinate estimates; coordinates neither function depends on are exact zeros."""
    coords = range(model.N) if spec.coords is None else spec.coords
    live = u.dependencies & v.dependencies
    per, total, var = {}, 0.0, 0.0
    for i in coords:
        if i not in live:
            per[i] = (0.0, 0.0, True)
            continue
        est = form_i_estimate(model, u, v, i, spec, seed)
        per[i] = (est.value, est.stderr, False)
        total += est.value
        var += est.stderr ** 2
    return FormEstimate(total, math.sqrt(var), spec.nsamples, spec.alpha, spec.delta, per)


def form_exact_small(model: DiscreteModel, u, spec: FormSpec, v=None, budget: int = 300_000) -> float:
    """Exact truncated form by summing over every state and every pair of atoms."""
    if not isinstance(model, DiscreteModel):
        raise InvalidInputError("exact evaluation needs a discrete model")
    if model.n_states > budget:
        raise ResourceLimitError(f"{model.n_states} states exceed the budget {budget}")
    v = u if v is None else v
    states = model.states()
    U = np.asarray(u(states), float).reshape(model.pmf.shape)
    V = U if v is u else np.asarray(v(states), float).reshape(model.pmf.shape)
    coords = range(model.N) if spec.coords is None else spec.coords
    total = 0.0
    for i in coords:
        y = model.atoms[i]
        gap = np.abs(y[:, None] - y[None, :])
        with np.errstate(divide="ignore"):
            K = np.where(gap > spec.delta, gap ** -(spec.alpha + 1.0), 0.0)
        P = np.moveaxis(model.pmf, i, -1).reshape(-1, len(y))
        w = P.sum(axis=1)
        ok = w > 0
        P = P[ok] / w[ok, None]
        Ui = np.moveaxis(U, i, -1).reshape(-1, len(y))[ok]
        Vi = np.moveaxis(V, i, -1).reshape(-1, len(y))[ok]
        dU = Ui[:, :, None] - Ui[:, None, :]
        dV = Vi[:, :, None] - Vi[:, None, :]
        inner = np.einsum("ra,rb,ab,rab,rab->r", P, P, K, dU, dV)
        total += float(np.sum(w[ok] * inner))
    return total


def refinement_sequence(u, spec: FormSpec, sizes=(32, 64), width: float = 6.0) -> list:
    """Exact values on discretized standard normals of increasing resolution."""
    rows, prev = [], None
    for n in sizes:
        val = form_exact_small(DiscreteModel.discretized_gaussian(n, 1, width), u, spec)
        rows.append({"points": n, "value": val, "increment": None if prev is None else val - prev})
        prev = val
    return rows


class ContractionProfile:
    """Normal contraction phi_eps: identity on [-eps/2, 1 + eps/2], flat beyond -1.5 eps and 1 + 1.5 eps.

    The slope ramps from 0 to 1 with a quintic smoothstep over intervals of
    length eps, so phi_eps is C^2 with slope in [0, 1] and range [-eps, 1 + eps].
    """

    def __init__(self, eps: float):
        if not eps > 0:
            raise InvalidInputError("eps must be positive")
        self.eps = float(eps)

    @staticmethod
    def _ramp(tau):
        # antiderivative of the smoothstep 6t^5 - 15t^4 + 10t^3, equal to 1/2 at t = 1
        tau = np.clip(tau, 0.0, 1.0)
        return tau ** 4 * (tau * tau - 3.0 * tau + 2.5)

    def __call__(self, t):
        t = np.asarray(t, float)
        e = self.eps
        low = -e + e * self._ramp((t + 1.5 * e) / e)
        high = 1.0 + e - e * self._ramp((1.0 + 1.5 * e - t) / e)
        return np.where(t < -0.5 * e, low, np.where(t > 1.0 + 0.5 * e, high, t))


def apply_contraction(profile: ContractionProfile, u: CylinderFunction) -> CylinderFunction:
    stage = u.stage
    return CylinderFunction(lambda X: profile(u(X)), stage, u.lipschitz,
                            min(u.sup_bound, 1.0 + profile.eps), u.support,
                            depends=u.dependencies, name=f"phi{profile.eps:g}({u.name})")


def truncation_monotonicity_check(model, u, deltas, alpha, nsamples, seed, coords=None) -> dict:
    """Common-random-number estimates for a decreasing sequence of jump cutoffs."""
    deltas = sorted(deltas, reverse=True)
    values = []
    for d in deltas:
        spec = FormSpec(alpha, d, nsamples, coords)
        values.append(form_estimate(model, u, u, spec, seed).value)
    ok = all(b >= a for a, b in zip(values, values[1:]))
    return {"deltas": deltas, "values": values, "nondecreasing": ok}


def young_bound(model, i: int, x, K, alpha: float) -> float:
    """L_K * integral over K of |t|^(1-alpha): finiteness witness for 1 < alpha < 2."""
    lo, hi = K
    L = cond_density_bound(model, i, x, K)

    def F(t):
        return math.copysign(abs(t) ** (2 - alpha), t) / (2 - alpha)

    return L * (F(hi) - F(lo))


def cutoff_damping_bound(f: CylinderFunction, space: SpaceSpec, box: BoxSpec, i: int,
                         model, alpha: float, nsamples: int = 10_000, rng=None) -> tuple:
    """(bound, stderr) for the coordinate-i form of f times cutoffs, for n <= i, alpha <= 1.

    bound = 6 * 2^(1-alpha) * a_i^-(alpha+1) * sup|f|^2 * mu(|X_i| > a_i).
    """
    if alpha > 1:
        raise PreconditionError("the cutoff damping bound is stated for alpha <= 1")
    a = box_bounds(space, box)[i]
    if rng is None:
        rng = rngmod.stream(0, "damping", i)
    p, se = estimate_tail(model, i, a, nsamples, rng)
    c = 6.0 * 2.0 ** (1.0 - alpha) * a ** -(alpha + 1.0) * f.sup_bound ** 2
    return c * p, c * se
