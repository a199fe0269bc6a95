"""Posterior over the integral value, active sampling, and a Monte Carlo baseline.

The integral of a conditioned GP is univariate Gaussian; its mean and
variance come from the kernel-mean vector and prior integral variance of the
(possibly invariant) kernel. Active sampling greedily maximizes the one-step
reduction of the integral variance.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.linalg import solve_triangular

from .embeddings import BoxLebesgue, EmbeddingTable, Measure, build_embedding_table
from .errors import ConfigurationError, InvalidInputError
from .gp import Dataset, GpPosterior, SearchConfig, fit, optimize_hyperparameters
from .groups import SignFlipGroup
from .kernels import KernelSpec, RbfParams, invariant_cross, invariant_diag

logger = logging.getLogger(__name__)

__all__ = [
    "IntegralPosterior",
    "HistoryEntry",
    "Integrand",
    "BqState",
    "RunSettings",
    "bq_posterior",
    "make_state",
    "acquisition_ivr",
    "acquisition_batch",
    "select_next",
    "run_active_bq",
    "mc_estimate",
    "mc_curve",
    "optimal_params_by_oversampling",
    "default_search_config",
]

# Independent substreams per purpose, mixed with the user seed.
_INIT_STREAM = 101
_SELECT_STREAM = 211
_MC_STREAM = 307
_OVERSAMPLE_STREAM = 401

_DUPLICATE_TOL = 1e-9


class IntegralPosterior(NamedTuple):
    mean: float
    variance: float


class HistoryEntry(NamedTuple):
    n: int
    mean: float
    variance: float
    wall_ms: float


@dataclass(frozen=True, eq=False)
class Integrand:
    """A black-box function together with its declared invariance group."""

    evaluate: Callable[[np.ndarray], float]
    dim: int
    group: SignFlipGroup
    evaluate_batch: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.dim != self.group.dim:
            raise InvalidInputError(
                f"integrand dimension {self.dim} does not match group dimension {self.group.dim}"
            )

    def batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.evaluate_batch is not None:
            values = np.asarray(self.evaluate_batch(X), dtype=float)
        else:
            values = np.array([float(self.evaluate(x)) for x in X])
        bad = ~np.isfinite(values)
        if bad.any():
            raise InvalidInputError(
                f"integrand returned a non-finite value at {X[bad][0].tolist()}"
            )
        return values


@dataclass(eq=False)
class BqState:
    """Everything the active loop carries between steps."""

    gp: GpPosterior
    table: EmbeddingTable
    measure: Measure
    integral: IntegralPosterior
    history: list[HistoryEntry] = field(default_factory=list)
    # Solved quantities reused by the acquisition: kernel-mean vector at the
    # training locations and its image under the inverse jittered Gram.
    qbar_train: np.ndarray = field(default_factory=lambda: np.zeros(0))
    integral_weights: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _check_compatible(gp: GpPosterior, table: EmbeddingTable, measure: Measure) -> None:
    if gp.spec.params != table.params:
        raise ConfigurationError("GP posterior and embedding table use different hyperparameters")
    if gp.spec.group != table.group:
        raise ConfigurationError("GP posterior and embedding table use different groups")
    if table.measure != measure:
        raise ConfigurationError("embedding table was built for a different measure")


def bq_posterior(gp: GpPosterior, table: EmbeddingTable, measure: Measure) -> IntegralPosterior:
    """Gaussian posterior over the integral value implied by the conditioned GP."""
    _check_compatible(gp, table, measure)
    total = table.total_prior_variance
    if gp.data.n == 0:
        return IntegralPosterior(mean=0.0, variance=max(total, 0.0))
    qbar = table.flip_summed_mean(gp.data.X)
    mean = float(qbar @ gp.weights)
    var = total - float(qbar @ gp.solve(qbar))
    if var < -1e-8 * max(total, 1e-300):
        logger.warning("integral variance clamped from %.3e to 0; Gram conditioning is suspect", var)
    return IntegralPosterior(mean=mean, variance=max(var, 0.0))


def make_state(gp: GpPosterior, table: EmbeddingTable, measure: Measure,
               history: list[HistoryEntry] | None = None) -> BqState:
    integral = bq_posterior(gp, table, measure)
    if gp.data.n == 0:
        qbar = np.zeros(0)
        iw = np.zeros(0)
    else:
        qbar = table.flip_summed_mean(gp.data.X)
        iw = gp.solve(qbar)
    return BqState(gp=gp, table=table, measure=measure, integral=integral,
                   history=list(history) if history else [], qbar_train=qbar,
                   integral_weights=iw)


def acquisition_batch(X: np.ndarray, state: BqState) -> np.ndarray:
    """Integral-variance reduction at each candidate row.

    a(x) = cov(Z, f(x))^2 / (var f(x) + jitter): the exact drop of the
    integral variance caused by observing f at x, at fixed hyperparameters
    and fixed jitter.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    gp, table = state.gp, state.table
    qbar_cand = table.flip_summed_mean(X)
    prior_var = invariant_diag(X, gp.spec)
    if gp.data.n == 0:
        cov = qbar_cand
        var = prior_var
    else:
        K = invariant_cross(gp.data.X, X, gp.spec)
        cov = qbar_cand - K.T @ state.integral_weights
        V = solve_triangular(gp.cholesky_factor, K, lower=True)
        var = np.maximum(prior_var - np.sum(V * V, axis=0), 0.0)
    return cov**2 / (var + gp.jitter_used)


def acquisition_ivr(x: np.ndarray, state: BqState) -> float:
    """One-step integral variance reduction from observing the integrand at x."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not state.measure.contains(x):
        raise InvalidInputError(f"candidate {x.tolist()} lies outside the integration domain")
    return float(acquisition_batch(x[None, :], state)[0])


def _refine_bracket(measure: Measure, q: int) -> float:
    if isinstance(measure, BoxLebesgue):
        return 0.1 * (measure.upper[q] - measure.lower[q])
    return math.sqrt(measure.variance)


def _refine(x0: np.ndarray, state: BqState, steps: int = 10) -> np.ndarray:
    """Coordinate-wise golden-section polish of the best candidate."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x = np.array(x0, dtype=float)
    best = float(acquisition_batch(x[None, :], state)[0])
    dim = x.shape[0]
    for step in range(steps):
        q = step % dim
        w = _refine_bracket(state.measure, q)
        a, b = x[q] - w, x[q] + w
        if isinstance(state.measure, BoxLebesgue):
            a = max(a, state.measure.lower[q])
            b = min(b, state.measure.upper[q])

        def val(t: float) -> float:
            xt = x.copy()
            xt[q] = t
            return float(acquisition_batch(xt[None, :], state)[0])

        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc, fd = val(c), val(d)
        for _ in range(16):
            if fc >= fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = val(c)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = val(d)
        t = 0.5 * (a + b)
        ft = val(t)
        if ft > best:
            x[q] = t
            best = ft
    return x


def select_next(state: BqState, rng_seed: int, n_candidates: int = 500) -> np.ndarray:
    """Pick the acquisition argmax over seeded candidates, then polish locally.

    Deterministic given the seed; ties resolve to the lowest candidate index,
    and any point within 1e-9 of an existing row is skipped in favor of the
    next-best candidate.
    """
    if n_candidates < 1:
        raise InvalidInputError("need at least one candidate")
    rng = np.random.default_rng(rng_seed)
    candidates = state.measure.sample(rng, n_candidates)
    if n_candidates == 1:
        return np.array(candidates[0], dtype=float)
    acq = acquisition_batch(candidates, state)
    order = np.argsort(-acq, kind="stable")
    pool = [_refine(candidates[order[0]], state)] + [candidates[k] for k in order]
    X = state.gp.data.X
    for point in pool:
        if X.shape[0] == 0 or np.min(np.linalg.norm(X - point[None, :], axis=1)) > _DUPLICATE_TOL:
            return np.array(point, dtype=float)
    return np.array(pool[0], dtype=float)


def _measure_span(measure: Measure) -> float:
    """The measure's natural length scale: the box diagonal, or for a
    Gaussian measure the diagonal of the +/-3 sigma box."""
    if isinstance(measure, BoxLebesgue):
        return measure.diagonal
    return 6.0 * math.sqrt(measure.variance) * math.sqrt(measure.dim)


def default_search_config(measure: Measure, fixed: RbfParams | None = None) -> SearchConfig:
    """Search space anchored to the measure's natural length scale.

    The lengthscale range [0.02, 2] x span keeps the search inside the band
    the sample budget can actually support: longer lengthscales make the
    greedy acquisition skip structure, shorter ones reduce the model to
    near-independent bumps.
    """
    span = _measure_span(measure)
    return SearchConfig(lengthscale_bounds=(0.02 * span, 2.0 * span), fixed=fixed)


# During the first active steps the dataset cannot support a two-parameter
# model fit; a short exploratory lengthscale is used instead, and marginal
# likelihood refits start once the design has grown past the warmup.
_DEFAULT_WARMUP_STEPS = 5
_WARMUP_LS_FRACTION = 0.05


@dataclass(frozen=True)
class RunSettings:
    """Knobs for one active run; hyper_mode is "mll" or "fixed".

    `mll_warmup` counts active steps run at the conservative exploration
    lengthscale before per-step marginal-likelihood refits begin.
    """

    n_initial: int = 5
    n_total: int = 25
    seed: int = 0
    n_candidates: int = 500
    hyper_mode: str = "mll"
    fixed_params: RbfParams | None = None
    mll_warmup: int = _DEFAULT_WARMUP_STEPS

    def __post_init__(self):
        if self.n_initial < 1:
            raise InvalidInputError("need at least one initial point")
        if self.n_total < self.n_initial:
            raise InvalidInputError("n_total must be at least n_initial")
        if self.hyper_mode not in ("mll", "fixed"):
            raise InvalidInputError(f"unknown hyperparameter mode {self.hyper_mode!r}")
        if self.hyper_mode == "fixed" and self.fixed_params is None:
            raise InvalidInputError("fixed hyperparameter mode requires fixed_params")
        if self.hyper_mode == "mll" and self.n_initial < 2:
            raise InvalidInputError("MLL refitting needs at least two initial points")
        if self.mll_warmup < 0:
            raise InvalidInputError("mll_warmup cannot be negative")


def run_active_bq(f: Integrand, measure: Measure, settings: RunSettings) -> BqState:
    """Run the full active loop: seeded initial design, then greedy acquisition.

    The initial design depends only on the seed and the measure, so methods
    that differ in kernel or hyperparameter policy share it. Hyperparameters
    are refit (or kept fixed) before every posterior rebuild.
    """
    if f.dim != measure.dim:
        raise InvalidInputError(f"integrand dimension {f.dim} does not match measure dimension {measure.dim}")
    init_rng = np.random.default_rng([_INIT_STREAM, settings.seed])
    X = measure.sample(init_rng, settings.n_initial)
    Y = f.batch(X)
    data = Dataset(X, Y)
    search = default_search_config(measure, fixed=settings.fixed_params)

    warmup_params = RbfParams(
        variance=max(float(np.var(data.Y)), 1e-6),
        lengthscale=_WARMUP_LS_FRACTION * _measure_span(measure),
    )
    history: list[HistoryEntry] = []
    state = None
    t_start = time.perf_counter()
    for n in range(settings.n_initial, settings.n_total + 1):
        if settings.hyper_mode == "fixed":
            params = settings.fixed_params
        elif n < settings.n_initial + settings.mll_warmup:
            params = warmup_params
        else:
            params = optimize_hyperparameters(data, f.group, search)
        spec = KernelSpec(params=params, group=f.group)
        post = fit(spec, data)
        table = build_embedding_table(measure, params, f.group)
        state = make_state(post, table, measure, history)
        wall_ms = (time.perf_counter() - t_start) * 1000.0
        history.append(HistoryEntry(n=n, mean=state.integral.mean,
                                    variance=state.integral.variance, wall_ms=wall_ms))
        state.history = list(history)
        if n == settings.n_total:
            break
        step_seed = [_SELECT_STREAM, settings.seed, n]
        x_next = select_next(state, rng_seed=step_seed, n_candidates=settings.n_candidates)
        y_next = f.batch(x_next[None, :])[0]
        data = data.append(x_next, y_next)
        t_start = time.perf_counter()
    return state


def mc_estimate(f: Integrand, measure: Measure, n: int, seed: int) -> tuple[float, float]:
    """Plain Monte Carlo estimate and its standard error."""
    if n < 2:
        raise InvalidInputError("Monte Carlo needs at least two samples")
    rng = np.random.default_rng([_MC_STREAM, seed])
    samples = measure.sample(rng, n)
    values = f.batch(samples)
    scale = measure.volume if isinstance(measure, BoxLebesgue) else 1.0
    estimate = scale * float(np.mean(values))
    stderr = scale * float(np.std(values, ddof=1)) / math.sqrt(n)
    return estimate, stderr


def mc_curve(f: Integrand, measure: Measure, checkpoints: list[int], seed: int):
    """Estimates at several sample counts reusing one growing sample stream."""
    checkpoints = sorted(set(int(c) for c in checkpoints))
    if not checkpoints or checkpoints[0] < 2:
        raise InvalidInputError("checkpoints must all be at least 2")
    rng = np.random.default_rng([_MC_STREAM, seed])
    samples = measure.sample(rng, checkpoints[-1])
    values = f.batch(samples)
    scale = measure.volume if isinstance(measure, BoxLebesgue) else 1.0
    out = []
    for c in checkpoints:
        est = scale * float(np.mean(values[:c]))
        se = scale * float(np.std(values[:c], ddof=1)) / math.sqrt(c)
        out.append((c, est, se))
    return out


def optimal_params_by_oversampling(f: Integrand, measure: Measure, group: SignFlipGroup,
                                   n: int = 256, seed: int = 0) -> RbfParams:
    """Hyperparameters fit on a dense seeded design, emulating known-good values."""
    rng = np.random.default_rng([_OVERSAMPLE_STREAM, seed])
    X = measure.sample(rng, n)
    data = Dataset(X, f.batch(X))
    return optimize_hyperparameters(data, group, default_search_config(measure))
