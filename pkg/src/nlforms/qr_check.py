"""Partial-sum checks of the summability conditions that make the forms quasi-regular.

Each check produces a ``QRReport`` whose partial sums are nondecreasing.  A
finite computation cannot prove convergence, so the verdict only describes the
trend of the increments over the last quarter of the terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .errors import InvalidInputError, UnsupportedModelError
from .measures import MeasureModel, ProductModel, cond_density_bound, grouped_mean

CONDITIONS = {
    "lp": ("4.3", "4.4", "4.8", "4.52", "4.53"),
    "linf": ("4.5", "4.6", "4.9", "4.54", "4.55"),
    "RN": ("4.56",),
}
SUP_CONDITIONS = ("4.53", "4.55", "4.56")


@dataclass(frozen=True, eq=False)
class WeightScheme:
    kind: str                    # "lp", "linf" or "RN"
    beta: np.ndarray
    gamma: np.ndarray
    alpha: float
    p: float = 2.0
    M0: tuple = (1.0,)
    M_grid: tuple | None = None  # scan for the sup conditions; defaults to M0 * 2^k
    source: str = "manual"

    def __post_init__(self):
        if self.kind not in CONDITIONS:
            raise InvalidInputError(f"unknown scheme kind {self.kind!r}")
        beta = np.asarray(self.beta, float)
        gamma = np.asarray(self.gamma, float)
        if beta.shape != gamma.shape:
            raise InvalidInputError("beta and gamma must have equal length")
        if np.any(gamma <= 0) or np.any(beta <= 0):
            raise InvalidInputError("weights must be positive")
        if not 0 < self.alpha < 2:
            raise InvalidInputError("alpha must lie in (0, 2)")
        if any(m <= 0 for m in self.M0):
            raise InvalidInputError("M0 values must be positive")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "M0", tuple(float(m) for m in self.M0))

    @property
    def length(self) -> int:
        return len(self.beta)

    def unit_bounds(self, n) -> np.ndarray:
        """Coordinate bound at level M = 1."""
        b, g = self.beta[:n], self.gamma[:n]
        if self.kind == "lp":
            return (b * g) ** (-1.0 / self.p)
        if self.kind == "linf":
            return 1.0 / (b * g)
        return g

    def product_power(self, n, exponent) -> np.ndarray:
        """(beta_i gamma_i)^exponent, with the 1/p already folded in for lp schemes."""
        bg = self.beta[:n] * self.gamma[:n]
        return bg ** (exponent / self.p if self.kind == "lp" else exponent)

    def gamma_witness(self) -> np.ndarray:
        """Partial sums of 1/gamma_i (summability witness for lp schemes)."""
        return np.cumsum(1.0 / self.gamma)

    def sup_grid(self) -> tuple:
        if self.M_grid is not None:
            return tuple(sorted(self.M_grid))
        base = min(self.M0)
        return tuple(base * 2.0 ** k for k in range(5))


@dataclass
class QRReport:
    condition: str
    terms: np.ndarray
    stderrs: np.ndarray
    verdict: str
    threshold: float
    params: dict = field(default_factory=dict)

    @property
    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.terms)

    @property
    def total(self) -> float:
        return float(self.partial_sums[-1]) if len(self.terms) else 0.0

    def record(self) -> dict:
        return {"condition": self.condition, "verdict": self.verdict,
                "total": self.total, "threshold": self.threshold,
                "partial_sums": self.partial_sums.tolist(),
                "term_stderrs": self.stderrs.tolist(), "params": self.params}


def verdict(terms, threshold: float) -> str:
    terms = np.asarray(terms, float)
    n = len(terms)
    if n == 0:
        return "consistent-with-finite"
    q = max(1, n // 4)
    last, first = terms[-q:], terms[:q]
    if np.all(last < threshold):
        return "consistent-with-finite"
    if last.mean() >= first.mean():
        return "diverging"
    return "inconclusive"


def _tails(model: MeasureModel, thresholds, nsamples, rng):
    """Tail probabilities mu(|X_i| > thresholds[i]) for i < len(thresholds), with stderrs."""
    n = len(thresholds)
    exact = [model.exact_marginal(i) for i in range(n)]
    if all(e is not None for e in exact):
        return np.array([e.tail(t) for e, t in zip(exact, thresholds)]), np.zeros(n)
    X, groups = model.draw(rng, nsamples)
    hits = np.abs(X[:, :n]) > np.asarray(thresholds)
    out = [grouped_mean(hits[:, i].astype(float), groups) for i in range(n)]
    p = np.array([o[0] for o in out])
    if groups is None:
        return p, np.sqrt(p * (1 - p) / nsamples)
    return p, np.array([o[1] for o in out])


def _moments2(model: MeasureModel, n, nsamples, rng):
    exact = [model.exact_marginal(i) for i in range(n)]
    if all(e is not None for e in exact):
        return np.array([e.moment2() for e in exact]), np.zeros(n)
    X, groups = model.draw(rng, nsamples)
    out = [grouped_mean(X[:, i] ** 2, groups) for i in range(n)]
    return np.array([o[0] for o in out]), np.array([o[1] for o in out])


def _density_bounds(model, half_widths, n_rest, rng):
    """L_{K,i} on K = [-w_i, w_i]; maximum over a reference rest and sampled rests."""
    n = len(half_widths)
    rests = [np.zeros(model.N)]
    if not isinstance(model, ProductModel) and n_rest > 0:
        rests += list(model.sample(rng, n_rest))
    try:
        return np.array([max(cond_density_bound(model, i, r, (-w, w)) for r in rests)
                         for i, w in enumerate(half_widths)])
    except UnsupportedModelError:
        raise UnsupportedModelError("density bounds need conditionals with densities") from None


def _check_kind(scheme, condition):
    if condition not in CONDITIONS[scheme.kind]:
        raise InvalidInputError(f"condition {condition} does not apply to a {scheme.kind} scheme")


def check_condition(model: MeasureModel, scheme: WeightScheme, condition: str, N_terms: int,
                    nsamples: int = 10_000, seed: int = 0, threshold: float = 1e-6,
                    n_rest: int = 32) -> QRReport:
    _check_kind(scheme, condition)
    n = min(N_terms, scheme.length, model.N)
    if n < 1:
        raise InvalidInputError("need at least one term")
    a = scheme.alpha
    unit = scheme.unit_bounds(n)
    params = {"kind": scheme.kind, "p": scheme.p, "alpha": a, "N_terms": n,
              "source": scheme.source, "nsamples": nsamples, "seed": seed}

    if condition in ("4.8", "4.9"):
        return chebyshev_sufficient(model, scheme, N_terms, nsamples, seed, threshold)

    if condition in SUP_CONDITIONS:
        best = None
        for k, M in enumerate(scheme.sup_grid()):
            g = rngmod.stream(seed, "qr", condition, k)
            p, se = _tails(model, M * unit, nsamples, g)
            radius = 6.0 if condition == "4.56" else 3.0
            L = _density_bounds(model, radius * M * unit, n_rest, g)
            if condition == "4.56":
                w = L * scheme.gamma[:n] ** (-a)
            else:
                w = L * scheme.product_power(n, a)
            w = M ** (-a) * w
            terms, ses = w * p, w * se
            if best is None or terms.sum() > best[0].sum():
                best = (terms, ses, M)
        params.update(M_sup=best[2], M_grid=list(scheme.sup_grid()),
                      L_source="reference rest plus sampled rests" if n_rest else "reference rest")
        return QRReport(condition, best[0], best[1], verdict(best[0], threshold), threshold, params)

    best = None
    for k, M0 in enumerate(scheme.M0):
        p, se = _tails(model, M0 * unit, nsamples, rngmod.stream(seed, "qr", condition, k))
        if condition in ("4.4", "4.6"):
            w = np.ones(n)
        else:
            w = scheme.product_power(n, a + 1.0)
        terms, ses = w * p, w * se
        if best is None or terms.sum() < best[0].sum():
            best = (terms, ses, M0)
    params.update(M0=best[2], M0_grid=list(scheme.M0))
    return QRReport(condition, best[0], best[1], verdict(best[0], threshold), threshold, params)


def chebyshev_sufficient(model: MeasureModel, scheme: WeightScheme, N_terms: int,
                         nsamples: int = 10_000, seed: int = 0, threshold: float = 1e-6) -> QRReport:
    """Second-moment series: E|X_i|^2 (beta_i gamma_i)^(2(alpha+1)/p), or ^(2(alpha+1)) for linf."""
    if scheme.kind == "RN":
        raise InvalidInputError("no second-moment condition for product-RN schemes")
    condition = "4.8" if scheme.kind == "lp" else "4.9"
    n = min(N_terms, scheme.length, model.N)
    m2, se = _moments2(model, n, nsamples, rngmod.stream(seed, "qr", condition))
    w = scheme.product_power(n, 2.0 * (scheme.alpha + 1.0))
    terms = w * m2
    params = {"kind": scheme.kind, "p": scheme.p, "alpha": scheme.alpha, "N_terms": n,
              "source": scheme.source, "nsamples": nsamples, "seed": seed}
    return QRReport(condition, terms, w * se, verdict(terms, threshold), threshold, params)


def chebyshev_termwise_bound(model: MeasureModel, scheme: WeightScheme, N_terms: int,
                             M0: float, nsamples: int = 10_000, seed: int = 0):
    """Second-moment upper bound for each tail-based term at level M0 (Chebyshev with r = 2)."""
    n = min(N_terms, scheme.length, model.N)
    m2, se = _moments2(model, n, nsamples, rngmod.stream(seed, "qr", "chebyshev-bound"))
    unit = scheme.unit_bounds(n)
    w = scheme.product_power(n, scheme.alpha + 1.0) / (M0 * unit) ** 2
    return w * m2, w * se


def support_estimate(model: MeasureModel, scheme: WeightScheme, M_grid, nsamples: int,
                     seed: int = 0, N_terms: int | None = None) -> list:
    """mu(|X_i| <= M * bound_i for all i) for each M, estimated from one shared sample."""
    if nsamples < 1:
        raise InvalidInputError("nsamples must be positive")
    n = min(N_terms or scheme.length, scheme.length, model.N)
    X, groups = model.draw(rngmod.stream(seed, "support"), nsamples)
    ratio = np.max(np.abs(X[:, :n]) / scheme.unit_bounds(n), axis=1)
    rows = []
    for M in M_grid:
        inside = (ratio <= M).astype(float)
        if groups is None:
            est = inside.mean()
            se = math.sqrt(est * (1 - est) / nsamples)
        else:
            est, se = grouped_mean(inside, groups)
        rows.append({"M": float(M), "estimate": float(est), "stderr": float(se)})
    return rows


def free_field_scheme(eigenvalues, m: int, alpha: float, M0=(1.0,)) -> WeightScheme:
    """beta_i = lam_i^(-2m), gamma_i = lam_i^-2, p = 2, for the levels m = -2 and m = -3."""
    lam = np.asarray(eigenvalues, float)
    if lam.size == 0:
        raise InvalidInputError("empty eigen table")
    if m not in (-2, -3):
        raise InvalidInputError("free-field schemes are defined for m = -2 and m = -3")
    return WeightScheme("lp", lam ** (-2.0 * m), lam ** -2.0, alpha, 2.0, tuple(M0),
                        source=f"free-field-m({m})")
