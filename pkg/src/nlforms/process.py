"""Reversible coordinate-jump process with truncated stable-like jump kernel.

From state x, coordinate i jumps to y at rate density

    k(x_i, y) rho(y | rest),   k(s, y) = |y - s|^-(alpha+1) 1{|y - s| > delta}.

``simulate`` is the event-driven construction.  ``simulate_batch`` produces the
same law for many chains at once by uniformization: proposals arrive at the
constant rate delta^-(alpha+1) per coordinate, are drawn from the conditional,
and are accepted with probability k(x_i, y) delta^(alpha+1) <= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import rng as rngmod
from .errors import InvalidInputError, NumericalError, PreconditionError, ResourceLimitError
from .forms import FormSpec, form_exact_small
from .measures import Atoms1D, DiscreteModel, Gaussian1D, GridDensity1D, ProductModel
from .seqspace import CylinderFunction


@dataclass(frozen=True)
class JumpChainConfig:
    alpha: float
    delta: float
    T: float
    max_events: int = 1_000_000
    grid_points: int = 4097

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise InvalidInputError("alpha must lie in (0, 2)")
        if not self.delta > 0:
            raise InvalidInputError("delta must be positive")
        if not self.T >= 0:
            raise InvalidInputError("time horizon must be nonnegative")
        if self.max_events < 1:
            raise InvalidInputError("event budget must be at least 1")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    coords: np.ndarray
    terminal: str            # "horizon", "budget" or "absorbed"
    N: int = field(init=False)

    def __post_init__(self):
        self.N = self.states.shape[1]

    @property
    def n_events(self) -> int:
        return len(self.coords)

    def final(self) -> np.ndarray:
        return self.states[-1]

    def check(self) -> None:
        """Structural invariants: increasing times, one coordinate changed per event."""
        if np.any(np.diff(self.times) <= 0):
            raise NumericalError("event times are not strictly increasing")
        changed = self.states[1:] != self.states[:-1]
        if np.any(changed.sum(axis=1) != 1):
            raise NumericalError("an event changed more than one coordinate")
        if np.any(np.argmax(changed, axis=1) != self.coords):
            raise NumericalError("event coordinate labels disagree with the states")
        if not np.all(np.isfinite(self.states)):
            raise NumericalError("cemetery state reached")


# --------------------------------------------------------------------------
# rates


def _power_integral(a, b, lo, hi, beta):
    """Integral over [lo, hi] (0 < lo) of t^-beta (a + b t) dt."""
    def prim(t, p):
        return math.log(t) if p == 0 else t ** p / p
    return a * (prim(hi, 1 - beta) - prim(lo, 1 - beta)) + b * (prim(hi, 2 - beta) - prim(lo, 2 - beta))


def _grid_side_mass(cond: GridDensity1D, s: float, sign: int, delta: float, beta: float) -> float:
    # exact integral of t^-beta times the piecewise-linear density at y = s + sign t
    g, f = cond.grid, cond.values
    if sign < 0:
        g, f = (s - g)[::-1], f[::-1]
    else:
        g = g - s
    total = 0.0
    for k in range(len(g) - 1):
        lo, hi = max(g[k], delta), g[k + 1]
        if hi <= lo:
            continue
        slope = (f[k + 1] - f[k]) / (g[k + 1] - g[k])
        total += _power_integral(f[k] - slope * g[k], slope, lo, hi, beta)
    return total


def _side_masses(cond, s: float, alpha: float, delta: float):
    beta = alpha + 1.0
    if isinstance(cond, Atoms1D):
        gap = cond.locations - s
        with np.errstate(divide="ignore"):
            k = np.where(np.abs(gap) > delta, np.abs(gap) ** -beta, 0.0)
        w = k * cond.masses
        return float(w[gap < 0].sum()), float(w[gap > 0].sum())
    if isinstance(cond, GridDensity1D):
        return (_grid_side_mass(cond, s, -1, delta, beta),
                _grid_side_mass(cond, s, 1, delta, beta))
    if isinstance(cond, Gaussian1D):
        out = []
        for sign in (-1, 1):
            val, err = integrate.quad(lambda t: t ** -beta * float(cond.pdf(s + sign * t)),
                                      delta, np.inf, epsabs=1e-11, epsrel=1e-11, limit=200)
            if err > 1e-8:
                raise NumericalError(f"rate quadrature error {err:.3g} above 1e-8")
            out.append(val)
        return out[0], out[1]
    raise InvalidInputError(f"no rate rule for {type(cond).__name__}")


def coordinate_rate(model, x, i: int, alpha: float, delta: float) -> float:
    """Total jump rate of coordinate i from the state x."""
    x = np.asarray(x, float)
    left, right = _side_masses(model.conditional(i, x), x[i], alpha, delta)
    return left + right


def sample_jump(model, x, i: int, alpha: float, delta: float, rng, grid_points: int = 4097) -> float:
    """Draw the new value of coordinate i from the normalized jump law."""
    x = np.asarray(x, float)
    s = x[i]
    cond = model.conditional(i, x)
    beta = alpha + 1.0
    left, right = _side_masses(cond, s, alpha, delta)
    if not left + right > 0:
        raise PreconditionError(f"coordinate {i} has zero jump rate")
    if isinstance(cond, Atoms1D):
        gap = cond.locations - s
        w = np.where(np.abs(gap) > delta, np.abs(np.where(gap == 0, 1, gap)) ** -beta, 0.0)
        w = w * cond.masses
        return float(cond.locations[rng.choice(len(w), p=w / w.sum())])
    sign = 1 if rng.random() * (left + right) >= left else -1
    if isinstance(cond, Gaussian1D):
        t_max = abs(cond.mean - s) + 12.0 * cond.sd
        extra = np.array([])
    else:
        lo, hi = cond.support()
        t_max = (hi - s) if sign > 0 else (s - lo)
        extra = sign * (cond.grid - s)
        extra = extra[(extra > delta) & (extra < t_max)]
    if not t_max > delta:
        raise PreconditionError("selected side carries no jump mass")
    t = np.unique(np.concatenate([delta * (t_max / delta) ** np.linspace(0, 1, grid_points), extra]))
    dens = t ** -beta * cond.pdf(s + sign * t)
    return float(s + sign * GridDensity1D(t, dens).sample(rng))


# --------------------------------------------------------------------------
# simulation


def _all_rates(model, x, alpha, delta):
    return np.array([coordinate_rate(model, x, i, alpha, delta) for i in range(model.N)])


def simulate(model, x0, config: JumpChainConfig, rng) -> Trajectory:
    """Event-driven simulation up to time T or the event budget."""
    x = np.array(x0, float)
    if x.shape != (model.N,):
        raise InvalidInputError(f"initial state needs {model.N} coordinates")
    a, d = config.alpha, config.delta
    rates = _all_rates(model, x, a, d)
    product = isinstance(model, ProductModel)
    times, states, coords = [0.0], [x.copy()], []
    t = 0.0
    terminal = "horizon"
    while True:
        total = rates.sum()
        if total <= 0:
            terminal = "absorbed"
            break
        t += rng.exponential(1.0 / total)
        if t > config.T:
            break
        if len(coords) >= config.max_events:
            terminal = "budget"
            break
        i = int(np.searchsorted(np.cumsum(rates), rng.random() * total, side="right"))
        i = min(i, model.N - 1)
        x[i] = sample_jump(model, x, i, a, d, rng, config.grid_points)
        times.append(t)
        states.append(x.copy())
        coords.append(i)
        if product:
            rates[i] = coordinate_rate(model, x, i, a, d)
        else:
            rates = _all_rates(model, x, a, d)
    return Trajectory(np.array(times), np.array(states), np.array(coords, dtype=int), terminal)


def simulate_batch(model, X0, alpha: float, delta: float, T: float, rng,
                   max_proposals: int = 10**8) -> np.ndarray:
    """States at time T of independent chains started at the rows of X0."""
    X = np.array(X0, float)
    n, N = X.shape
    lam = delta ** -(alpha + 1.0)
    counts = rng.poisson(N * lam * T, size=n)
    if counts.sum() > max_proposals:
        raise ResourceLimitError(f"{counts.sum()} proposals exceed the budget {max_proposals}")
    for step in range(int(counts.max(initial=0))):
        active = np.flatnonzero(counts > step)
        coord = rng.integers(0, N, size=len(active))
        u = rng.random(len(active))
        for i in range(N):
            rows = active[coord == i]
            if len(rows) == 0:
                continue
            y = model.sample_conditional(i, X[rows], rng)
            gap = np.abs(y - X[rows, i])
            with np.errstate(divide="ignore"):
                accept_p = np.where(gap > delta, (delta / gap) ** (alpha + 1.0), 0.0)
            ok = u[coord == i] < accept_p
            X[rows[ok], i] = y[ok]
    return X


def invariance_test(model, u: CylinderFunction, alpha: float, delta: float, T: float,
                    nchains: int, seed: int) -> dict:
    """Compare E u(X_T) for chains started from mu against E u under fresh mu-draws."""
    start = model.sample(rngmod.stream(seed, "invariance", "start"), nchains)
    XT = simulate_batch(model, start, alpha, delta, T, rngmod.stream(seed, "invariance", "run"))
    fresh = model.sample(rngmod.stream(seed, "invariance", "fresh"), nchains)
    a, b = u(XT), u(fresh)
    diff = float(a.mean() - b.mean())
    se = float(math.sqrt(a.var(ddof=1) / nchains + b.var(ddof=1) / nchains))
    return {"mean_T": float(a.mean()), "mean_mu": float(b.mean()), "difference": diff,
            "pooled_stderr": se, "nchains": nchains, "T": T, "alpha": alpha, "delta": delta,
            "N": model.N, "passed": abs(diff) <= 3 * se}


# --------------------------------------------------------------------------
# exact oracle on finite models


def table_function(model: DiscreteModel, values) -> CylinderFunction:
    """Cylinder function taking the given values on the model's states (C order)."""
    values = np.asarray(values, float).ravel()
    if values.shape[0] != model.n_states:
        raise InvalidInputError("one value per state required")

    def base(X):
        idx = model.index_of(X)
        return values[np.ravel_multi_index(tuple(idx.T), model.pmf.shape)]

    return CylinderFunction(base, model.N, np.inf, float(np.abs(values).max()), name="state-table")


def rate_matrix(model: DiscreteModel, alpha: float, delta: float, budget: int = 4096) -> np.ndarray:
    """Generator matrix on the state space in C order (rows sum to zero)."""
    S = model.n_states
    if S > budget:
        raise ResourceLimitError(f"{S} states exceed the budget {budget}")
    shape = model.pmf.shape
    idx = np.array(np.unravel_index(np.arange(S), shape)).T
    Q = np.zeros((S, S))
    for i in range(model.N):
        y = model.atoms[i]
        gap = np.abs(y[:, None] - y[None, :])
        with np.errstate(divide="ignore"):
            K = np.where(gap > delta, gap ** -(alpha + 1.0), 0.0)
        moved = np.moveaxis(model.pmf, i, -1)
        for s in range(S):
            rest = tuple(idx[s, j] for j in range(model.N) if j != i)
            row = moved[rest]
            tot = row.sum()
            if tot <= 0:
                continue
            a = idx[s, i]
            for b in range(len(y)):
                if b == a or K[a, b] == 0:
                    continue
                target = idx[s].copy()
                target[i] = b
                Q[s, np.ravel_multi_index(tuple(target), shape)] += K[a, b] * row[b] / tot
    Q[np.diag_indices(S)] = -Q.sum(axis=1)
    return Q


def reversibility_oracle(model: DiscreteModel, alpha: float, delta: float,
                         n_functions: int = 20, seed: int = 0) -> dict:
    """Detailed balance and generator/form identity on a finite state space."""
    Q = rate_matrix(model, alpha, delta)
    mu = model.pmf.ravel()
    flux = mu[:, None] * Q
    off = ~np.eye(len(mu), dtype=bool)
    db = float(np.abs(flux - flux.T)[off].max(initial=0.0))
    g = rngmod.stream(seed, "reversibility")
    spec = FormSpec(alpha, delta)
    rel = []
    for _ in range(n_functions):
        vals = g.standard_normal(len(mu))
        lhs = -float(np.sum(mu * vals * (Q @ vals)))
        rhs = 0.5 * form_exact_small(model, table_function(model, vals), spec)
        rel.append(abs(lhs - rhs) / max(abs(rhs), 1e-300))
    return {"states": len(mu), "detailed_balance_max": db,
            "identity_max_relative_error": float(max(rel, default=0.0)),
            "alpha": alpha, "delta": delta}
