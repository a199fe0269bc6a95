"""Gaussian-process conditioning on exact observations.

Covers Gram factorization with an adaptive jitter ladder, the predictive
posterior, the log marginal likelihood, and grid-based hyperparameter
selection. Observations are exact, so Gram matrices become ill-conditioned by
design once evaluation points approach each other or each other's flip
images; the jitter ladder inflates the diagonal just enough to factorize, and
fails loudly rather than return garbage.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import InvalidInputError, SingularGramError
from .groups import SignFlipGroup
from .kernels import KernelSpec, RbfParams, gram, invariant_cross, invariant_diag

__all__ = [
    "Dataset",
    "GpPosterior",
    "SearchConfig",
    "fit",
    "predict",
    "predict_batch",
    "log_marginal_likelihood",
    "optimize_hyperparameters",
]

# Jitter ladder: relative to the mean Gram diagonal, escalating tenfold.
_JITTER_START = 1e-12
_JITTER_MAX = 1e-6
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Evaluation locations X (N x d) and exact values Y (N,)."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.atleast_1d(np.asarray(self.Y, dtype=float))
        if X.size == 0:
            X = X.reshape(0, X.shape[1] if X.ndim == 2 and X.shape[1] else 1)
            Y = Y.reshape(0)
        if X.ndim != 2 or Y.ndim != 1 or X.shape[0] != Y.shape[0]:
            raise InvalidInputError(f"inconsistent data shapes X{X.shape}, Y{Y.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise InvalidInputError("dataset contains non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def append(self, x: np.ndarray, y: float) -> "Dataset":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return Dataset(np.vstack([self.X, x[None, :]]), np.append(self.Y, float(y)))


@dataclass(frozen=True, eq=False)
class GpPosterior:
    """Conditioned GP: Cholesky factor of the jittered Gram and solved weights."""

    spec: KernelSpec
    data: Dataset
    cholesky_factor: np.ndarray | None
    weights: np.ndarray
    jitter_used: float

    @cached_property
    def log_det(self) -> float:
        if self.cholesky_factor is None:
            return 0.0
        return 2.0 * float(np.sum(np.log(np.diag(self.cholesky_factor))))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Apply the inverse jittered Gram to a vector or matrix."""
        if self.cholesky_factor is None:
            raise InvalidInputError("cannot solve against an empty posterior")
        return cho_solve((self.cholesky_factor, True), rhs)


def _cholesky_with_jitter(G: np.ndarray, jitter: float | None):
    n = G.shape[0]
    if jitter is not None:
        try:
            return np.linalg.cholesky(G + jitter * np.eye(n)), float(jitter)
        except np.linalg.LinAlgError:
            raise SingularGramError(
                f"Cholesky failed at the explicitly requested jitter {jitter:.3e}"
            ) from None
    base = _JITTER_START * float(np.trace(G)) / n
    eps = base
    while eps <= _JITTER_MAX * float(np.trace(G)) / n * (1.0 + 1e-12):
        try:
            return np.linalg.cholesky(G + eps * np.eye(n)), float(eps)
        except np.linalg.LinAlgError:
            eps *= 10.0
    raise SingularGramError(
        "Gram matrix is singular even at maximum jitter; evaluation locations are "
        "likely duplicated or equivalent under the invariance group"
    )


def fit(spec: KernelSpec, data: Dataset, jitter: float | None = None) -> GpPosterior:
    """Condition the GP on the dataset.

    `jitter=None` walks the adaptive ladder; passing a value pins the diagonal
    inflation (useful for exact one-step-update identities).
    """
    if data.n == 0:
        return GpPosterior(spec=spec, data=data, cholesky_factor=None,
                           weights=np.zeros(0), jitter_used=0.0)
    if data.dim != spec.group.dim:
        raise InvalidInputError(
            f"data dimension {data.dim} does not match group dimension {spec.group.dim}"
        )
    G = gram(data.X, spec)
    L, eps = _cholesky_with_jitter(G, jitter)
    weights = cho_solve((L, True), data.Y)
    return GpPosterior(spec=spec, data=data, cholesky_factor=L, weights=weights,
                       jitter_used=eps)


def predict_batch(post: GpPosterior, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at each row of X (variance clamped at 0)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != post.spec.group.dim:
        raise InvalidInputError(
            f"query dimension {X.shape[1]} does not match group dimension {post.spec.group.dim}"
        )
    prior_var = invariant_diag(X, post.spec)
    if post.data.n == 0:
        return np.zeros(X.shape[0]), prior_var
    K = invariant_cross(post.data.X, X, post.spec)
    mean = K.T @ post.weights
    V = solve_triangular(post.cholesky_factor, K, lower=True)
    var = np.maximum(prior_var - np.sum(V * V, axis=0), 0.0)
    return mean, var


def predict(post: GpPosterior, x: np.ndarray) -> tuple[float, float]:
    mean, var = predict_batch(post, np.atleast_1d(np.asarray(x, dtype=float))[None, :])
    return float(mean[0]), float(var[0])


def log_marginal_likelihood(spec: KernelSpec, data: Dataset) -> float:
    """Marginal log-likelihood of the data under the (jittered) prior."""
    if data.n < 1:
        raise InvalidInputError("log marginal likelihood needs at least one observation")
    post = fit(spec, data)
    return float(-0.5 * data.Y @ post.weights - 0.5 * post.log_det - 0.5 * data.n * _LOG_2PI)


@dataclass(frozen=True)
class SearchConfig:
    """Hyperparameter search space; `fixed` bypasses the search entirely.

    Bounds left as None are derived from the data: the lengthscale range
    spans [0.1, 10] times the diagonal of the bounding box of X, the variance
    range [1e-2, 1e3] times var(Y).
    """

    lengthscale_bounds: tuple[float, float] | None = None
    variance_bounds: tuple[float, float] | None = None
    grid_shape: tuple[int, int] = (25, 25)
    refine_steps: int = 20
    fixed: RbfParams | None = None


def _default_bounds(data: Dataset, search: SearchConfig):
    if search.lengthscale_bounds is not None:
        ls_lo, ls_hi = search.lengthscale_bounds
    else:
        span = float(np.linalg.norm(data.X.max(axis=0) - data.X.min(axis=0)))
        span = span if span > 0 else 1.0
        ls_lo, ls_hi = 0.1 * span, 10.0 * span
    if search.variance_bounds is not None:
        v_lo, v_hi = search.variance_bounds
    else:
        vy = float(np.var(data.Y))
        if vy <= 0:
            vy = max(float(np.mean(data.Y**2)), 1.0)
        v_lo, v_hi = 1e-2 * vy, 1e3 * vy
    if not (0 < ls_lo <= ls_hi and 0 < v_lo <= v_hi):
        raise InvalidInputError("hyperparameter bounds must be positive and ordered")
    return (ls_lo, ls_hi), (v_lo, v_hi)


class _ProfileCache:
    """LML pieces per lengthscale; the variance axis is then a scalar formula.

    With a unit-variance Gram G1, the Gram at variance v is exactly v*G1 and
    the jitter ladder scales along, so
        lml(v, ls) = -quad/(2v) - (n*log v + logdet)/2 - n*log(2*pi)/2
    with quad = Y' (G1+eps I)^-1 Y and logdet = log det(G1+eps I).
    """

    def __init__(self, data: Dataset, group: SignFlipGroup):
        self.data = data
        self.group = group
        self._cache: dict[float, tuple[float, float] | None] = {}

    def stats(self, ls: float):
        key = float(ls)
        if key not in self._cache:
            spec = KernelSpec(RbfParams(variance=1.0, lengthscale=key), self.group)
            try:
                post = fit(spec, self.data)
                self._cache[key] = (float(self.data.Y @ post.weights), post.log_det)
            except SingularGramError:
                self._cache[key] = None
        return self._cache[key]

    def lml(self, ls: float, variance: float) -> float:
        stats = self.stats(ls)
        if stats is None:
            return -math.inf
        quad, logdet = stats
        n = self.data.n
        return (-0.5 * quad / variance
                - 0.5 * (n * math.log(variance) + logdet)
                - 0.5 * n * _LOG_2PI)


def _golden_max(fun, lo: float, hi: float, iters: int = 24) -> tuple[float, float]:
    """Deterministic golden-section maximization on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


def optimize_hyperparameters(data: Dataset, group: SignFlipGroup,
                             search: SearchConfig) -> RbfParams:
    """Maximize the LML on a log-spaced grid, then refine coordinate-wise.

    Deterministic: ties on the grid resolve to the lowest flat index, and the
    golden-section refinement uses fixed iteration counts.
    """
    if search.fixed is not None:
        return search.fixed
    if data.n < 2:
        raise InvalidInputError("hyperparameter search needs at least two observations")
    (ls_lo, ls_hi), (v_lo, v_hi) = _default_bounds(data, search)
    n_ls, n_v = search.grid_shape
    ls_grid = np.geomspace(ls_lo, ls_hi, n_ls)
    v_grid = np.geomspace(v_lo, v_hi, n_v)
    cache = _ProfileCache(data, group)

    best = None  # (lml, ls, v)
    for ls in ls_grid:
        stats = cache.stats(float(ls))
        if stats is None:
            continue
        for v in v_grid:
            val = cache.lml(float(ls), float(v))
            if best is None or val > best[0]:
                best = (val, float(ls), float(v))
    if best is None:
        raise SingularGramError("every grid point produced a singular Gram matrix")

    _, ls_best, v_best = best
    ls_ratio = (ls_hi / ls_lo) ** (1.0 / max(n_ls - 1, 1))
    v_ratio = (v_hi / v_lo) ** (1.0 / max(n_v - 1, 1))
    for step in range(search.refine_steps):
        if step % 2 == 0:
            lo = max(ls_lo, ls_best / ls_ratio)
            hi = min(ls_hi, ls_best * ls_ratio)
            x, val = _golden_max(
                lambda t: cache.lml(math.exp(t), v_best), math.log(lo), math.log(hi))
            if val > cache.lml(ls_best, v_best):
                ls_best = math.exp(x)
        else:
            lo = max(v_lo, v_best / v_ratio)
            hi = min(v_hi, v_best * v_ratio)
            x, val = _golden_max(
                lambda t: cache.lml(ls_best, math.exp(t)), math.log(lo), math.log(hi))
            if val > cache.lml(ls_best, v_best):
                v_best = math.exp(x)
    return RbfParams(variance=v_best, lengthscale=ls_best)
