"""Numeric engine for distributed panel updating versus full-joint inference.

Per-panel posteriors live either in a conjugate family or on a normalized
grid of support points.  Distributed inference composes autonomous per-panel
updates into a product posterior; the joint oracle runs exact grid Bayes on
the full likelihood over the product grid.  Likelihood separability - the
condition under which the two pipelines agree - is checked both symbolically
(factor scopes) and numerically (four-point interaction residuals).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

NORM_TOL = 1e-10


class PanelsError(Exception):
    pass


class InvalidCounts(PanelsError):
    pass


class DegenerateLikelihood(PanelsError):
    pass


class ShapeMismatch(PanelsError):
    pass


class NonFiniteLogLikelihood(PanelsError):
    pass


def _as_points(arr) -> np.ndarray:
    pts = np.asarray(arr, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    elif pts.ndim != 2:
        raise ShapeMismatch(f"points must be 1-D or 2-D, got shape {pts.shape}")
    return pts


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 0):
            raise PanelsError(f"Beta parameters must be positive: ({self.alpha}, {self.beta})")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def variance(self) -> float:
        s = self.alpha + self.beta
        return self.alpha * self.beta / (s * s * (s + 1.0))


@dataclass(frozen=True)
class DirichletParams:
    alpha: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        if len(self.alpha) < 2 or any(a <= 0 for a in self.alpha):
            raise PanelsError(f"Dirichlet parameters must be positive: {self.alpha}")

    @property
    def mean(self) -> tuple[float, ...]:
        total = sum(self.alpha)
        return tuple(a / total for a in self.alpha)


@dataclass
class GridDensity:
    """Probability masses over a finite set of support points.

    ``points`` has shape (n, d) where d is the block dimension; ``weights``
    are non-negative and sum to one.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        elif pts.ndim != 2:
            raise ShapeMismatch(f"points must be 1-D or 2-D, got shape {pts.shape}")
        self.points = pts
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1 or self.weights.shape[0] != self.points.shape[0]:
            raise ShapeMismatch(
                f"weights shape {self.weights.shape} does not match {self.points.shape[0]} points"
            )
        if np.any(self.weights < 0):
            raise PanelsError("grid weights must be non-negative")
        total = float(self.weights.sum())
        if not math.isclose(total, 1.0, abs_tol=1e-12):
            raise PanelsError(f"grid weights must sum to 1 within 1e-12, got {total!r}")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def expectation(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        pts = self.points[:, 0] if self.points.shape[1] == 1 else self.points
        return float(np.sum(np.asarray(g(pts)) * self.weights))


@dataclass
class JointGridPosterior:
    """Joint masses over the product of per-block support-point sets."""

    blocks: tuple[np.ndarray, ...]  # per-block points, each (n_i, d_i)
    weights: np.ndarray  # shape (n_1, ..., n_m)

    def __post_init__(self) -> None:
        self.blocks = tuple(_as_points(b) for b in self.blocks)
        self.weights = np.asarray(self.weights, dtype=float)
        expected = tuple(b.shape[0] for b in self.blocks)
        if self.weights.shape != expected:
            raise ShapeMismatch(
                f"weight array shape {self.weights.shape} != product grid shape {expected}"
            )
        total = float(self.weights.sum())
        if not math.isclose(total, 1.0, abs_tol=NORM_TOL):
            raise PanelsError(f"joint weights must sum to 1 within {NORM_TOL}, got {total!r}")

    @property
    def m(self) -> int:
        return len(self.blocks)

    def marginal(self, i: int) -> GridDensity:
        axes = tuple(k for k in range(self.m) if k != i)
        return GridDensity(self.blocks[i], self.weights.sum(axis=axes))


def uniform_grid(n: int = 101, lo: float = 0.0, hi: float = 1.0) -> GridDensity:
    points = np.linspace(lo, hi, n)
    return GridDensity(points.reshape(-1, 1), np.full(n, 1.0 / n))


def beta_grid(params: BetaParams, n: int = 101) -> GridDensity:
    """Discretize a Beta density onto n equispaced support points."""
    from scipy.stats import beta as beta_dist

    points = np.linspace(0.0, 1.0, n)
    dens = beta_dist.pdf(points, params.alpha, params.beta)
    dens = np.where(np.isfinite(dens), dens, 0.0)
    total = dens.sum()
    if total <= 0:
        raise DegenerateLikelihood("Beta density vanished on the whole grid")
    return GridDensity(points.reshape(-1, 1), dens / total)


def panel_update_conjugate(prior: BetaParams, stat: tuple[int, int]) -> BetaParams:
    """Beta-Bernoulli update with (successes, trials)."""
    successes, trials = stat
    if not (0 <= successes <= trials):
        raise InvalidCounts(f"need 0 <= successes <= trials, got {stat}")
    return BetaParams(prior.alpha + successes, prior.beta + (trials - successes))


def dirichlet_update(prior: DirichletParams, counts: Sequence[int]) -> DirichletParams:
    if len(counts) != len(prior.alpha) or any(c < 0 for c in counts):
        raise InvalidCounts(f"counts {counts} do not match {len(prior.alpha)} categories")
    return DirichletParams(tuple(a + c for a, c in zip(prior.alpha, counts)))


def panel_update_grid(
    prior: GridDensity, loglik: Callable[[np.ndarray], np.ndarray]
) -> GridDensity:
    """Pointwise prior x likelihood on the support points, renormalized.

    Scalar blocks hand the evaluator a flat array of values; d-dimensional
    blocks an (n, d) array, matching the joint-oracle convention.
    """
    pts = prior.points[:, 0] if prior.points.shape[1] == 1 else prior.points
    ll = np.asarray(loglik(pts), dtype=float).reshape(prior.size)
    if np.any(np.isnan(ll)) or np.any(ll == np.inf):
        raise NonFiniteLogLikelihood("log-likelihood must be finite or -inf")
    finite = ll[np.isfinite(ll)]
    if finite.size == 0:
        raise DegenerateLikelihood("likelihood vanished on the whole grid")
    weights = prior.weights * np.exp(ll - finite.max())
    total = weights.sum()
    if total <= 0:
        raise DegenerateLikelihood("posterior mass underflowed to zero")
    return GridDensity(prior.points, weights / total)


def compose_product(posteriors: Sequence[GridDensity]) -> JointGridPosterior:
    """Outer product of per-block masses; marginals reproduce the inputs."""
    if not posteriors:
        raise ShapeMismatch("need at least one panel posterior")
    weights = posteriors[0].weights
    for post in posteriors[1:]:
        weights = np.multiply.outer(weights, post.weights)
    return JointGridPosterior(tuple(p.points for p in posteriors), weights)


def _open_mesh(blocks: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Per-block point arrays reshaped for broadcasting over the product grid.

    Block i with points (n_i, d_i) becomes shape (1,..,n_i,..,1) when the
    block is scalar, or (1,..,n_i,..,1, d_i) otherwise.
    """
    m = len(blocks)
    out = []
    for i, pts in enumerate(blocks):
        n, d = pts.shape
        shape = [1] * m
        shape[i] = n
        if d == 1:
            out.append(pts[:, 0].reshape(shape))
        else:
            out.append(pts.reshape(shape + [d]))
    return out


def joint_oracle(
    priors: Sequence[GridDensity],
    joint_loglik: Callable[..., np.ndarray],
) -> JointGridPosterior:
    """Exact grid Bayes: product of priors times the full likelihood.

    ``joint_loglik`` receives one broadcast-ready array per block (see
    ``_open_mesh``) and must return log-likelihoods over the product grid.
    """
    prior = compose_product(priors)
    ll = np.broadcast_to(
        np.asarray(joint_loglik(*_open_mesh(prior.blocks)), dtype=float), prior.weights.shape
    )
    if np.any(np.isnan(ll)) or np.any(ll == np.inf):
        raise NonFiniteLogLikelihood("log-likelihood must be finite or -inf")
    finite = ll[np.isfinite(ll)]
    if finite.size == 0:
        raise DegenerateLikelihood("likelihood vanished on the whole grid")
    weights = prior.weights * np.exp(ll - finite.max())
    total = weights.sum()
    if total <= 0:
        raise DegenerateLikelihood("posterior mass underflowed to zero")
    return JointGridPosterior(prior.blocks, weights / total)


@dataclass(frozen=True)
class Divergence:
    max_abs: float
    total_variation: float


def divergence(p: JointGridPosterior, q: JointGridPosterior) -> Divergence:
    if p.weights.shape != q.weights.shape:
        raise ShapeMismatch(f"grids differ: {p.weights.shape} vs {q.weights.shape}")
    for bp, bq in zip(p.blocks, q.blocks):
        if bp.shape != bq.shape or not np.allclose(bp, bq, atol=0, rtol=0):
            raise ShapeMismatch("support points differ between the two posteriors")
    diff = np.abs(p.weights - q.weights)
    return Divergence(float(diff.max()), float(0.5 * diff.sum()))


def functional_expectation(
    post: JointGridPosterior, g: Callable[..., np.ndarray]
) -> float:
    """Expectation of g over the joint grid; g sees broadcast block arrays."""
    values = np.broadcast_to(
        np.asarray(g(*_open_mesh(post.blocks)), dtype=float), post.weights.shape
    )
    return float(np.sum(values * post.weights))


@dataclass(frozen=True)
class Factor:
    name: str
    scope: frozenset  # panel ids touched by this factor

    def __post_init__(self) -> None:
        object.__setattr__(self, "scope", frozenset(int(i) for i in self.scope))


@dataclass(frozen=True)
class FactorSpec:
    factors: tuple[Factor, ...]


@dataclass(frozen=True)
class SeparabilityVerdict:
    separable: bool
    offending: tuple = ()  # factors (symbolic) or witness quadruples (numeric)
    max_residual: float = 0.0


def separability_check_symbolic(spec: FactorSpec, m: int) -> SeparabilityVerdict:
    """Separable iff every declared factor touches at most one panel."""
    for factor in spec.factors:
        if not factor.scope <= set(range(1, m + 1)):
            raise PanelsError(f"factor {factor.name!r} scope {sorted(factor.scope)} not in 1..{m}")
    offending = tuple(f for f in spec.factors if len(f.scope) > 1)
    return SeparabilityVerdict(not offending, offending)


def separability_check_numeric(
    loglik: Callable[..., np.ndarray],
    grids: Sequence[np.ndarray],
    tolerance: float = 1e-9,
    samples: int = 256,
    seed: int = 0,
) -> SeparabilityVerdict:
    """Detect cross-block terms via four-point interaction residuals.

    For each block pair (i, j) and Halton-sampled quadruples (u, u', v, v'),
    additive separability in blocks i and j forces
    ``ll(u,v) + ll(u',v') - ll(u,v') - ll(u',v) = 0``; any residual above
    ``tolerance`` certifies non-separability, with the quadruple as witness.
    Remaining blocks are held at their reference mid-grid points.
    """
    grids = [_as_points(g) for g in grids]
    m = len(grids)
    if m < 2:
        return SeparabilityVerdict(True)

    def evaluate(assign: list[np.ndarray]) -> np.ndarray:
        args = []
        for g, pts in zip(grids, assign):
            args.append(pts[:, 0] if g.shape[1] == 1 else pts)
        values = np.asarray(loglik(*args), dtype=float)
        if not np.all(np.isfinite(values)):
            raise NonFiniteLogLikelihood("log-likelihood not finite at a tested point")
        return values

    worst = 0.0
    witnesses: list[tuple] = []
    for i in range(m):
        for j in range(i + 1, m):
            sampler = qmc.Halton(d=4, seed=seed + 101 * i + j)
            draws = sampler.random(samples)
            refs = [g[g.shape[0] // 2] for g in grids]

            def pick(grid: np.ndarray, u: np.ndarray) -> np.ndarray:
                idx = np.minimum((u * grid.shape[0]).astype(int), grid.shape[0] - 1)
                return grid[idx]

            u, up = pick(grids[i], draws[:, 0]), pick(grids[i], draws[:, 1])
            v, vp = pick(grids[j], draws[:, 2]), pick(grids[j], draws[:, 3])

            def batch(xi: np.ndarray, xj: np.ndarray) -> np.ndarray:
                assign = []
                for k in range(m):
                    if k == i:
                        assign.append(xi)
                    elif k == j:
                        assign.append(xj)
                    else:
                        assign.append(np.broadcast_to(refs[k], (samples, grids[k].shape[1])))
                return evaluate(assign)

            residual = batch(u, v) + batch(up, vp) - batch(u, vp) - batch(up, v)
            abs_res = np.abs(residual)
            k = int(abs_res.argmax())
            if abs_res[k] > worst:
                worst = float(abs_res[k])
            if abs_res[k] > tolerance:
                witnesses.append(
                    (i + 1, j + 1, tuple(u[k]), tuple(up[k]), tuple(v[k]), tuple(vp[k]),
                     float(residual[k]))
                )
    return SeparabilityVerdict(not witnesses, tuple(witnesses), worst)


def bernoulli_loglik(successes: int, trials: int) -> Callable[[np.ndarray], np.ndarray]:
    """Log-likelihood of (successes, trials) Bernoulli data on a [0,1] grid."""
    if not (0 <= successes <= trials):
        raise InvalidCounts(f"need 0 <= successes <= trials, got ({successes}, {trials})")

    def ll(theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        # skip zero-count terms so 0 * log(0) contributes 0, not nan
        out = np.zeros_like(theta)
        with np.errstate(divide="ignore"):
            if successes:
                out = out + successes * np.log(theta)
            if trials - successes:
                out = out + (trials - successes) * np.log1p(-theta)
        return out

    return ll


def categorical_loglik(counts: Sequence[int]) -> Callable[[np.ndarray], np.ndarray]:
    """Log-likelihood of category counts on a simplex-point grid."""
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 0):
        raise InvalidCounts(f"counts must be non-negative, got {counts}")

    def ll(points: np.ndarray) -> np.ndarray:
        probs = np.asarray(points, dtype=float)
        with np.errstate(divide="ignore"):
            return np.sum(counts * np.log(probs), axis=-1)

    return ll


def simplex_grid(categories: int, resolution: int = 12) -> np.ndarray:
    """All probability vectors with components k/resolution; interior only."""
    points: list[tuple[float, ...]] = []

    def rec(prefix: list[int], remaining: int, slots: int) -> None:
        if slots == 1:
            if remaining >= 1:
                points.append(tuple((p) / resolution for p in prefix + [remaining]))
            return
        for k in range(1, remaining - slots + 2):
            rec(prefix + [k], remaining - k, slots - 1)

    rec([], resolution, categories)
    return np.asarray(points, dtype=float)
