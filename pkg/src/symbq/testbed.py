"""Benchmark integrands with declared symmetries and quadrature references.

All functions accept a single point or an (N, d) stack of points. Parameter
defaults (ring radius, sombrero frequency, diffraction scale) are chosen to
be non-degenerate on the default [-3, 3]^d domain; they are configurable and
recorded with each descriptor.
"""

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy.special import j1

from .embeddings import BoxLebesgue, Measure
from .errors import InvalidInputError
from .groups import SignFlipGroup, SignVector, group_from_generators
from .engine import Integrand
from .quadrature import adaptive_quad, nested_quad_2d

__all__ = [
    "TestFunctionDescriptor",
    "hennig1d",
    "hennig2d",
    "circular_gaussian",
    "sombrero2d",
    "airy_psf",
    "FUNCTIONS",
    "get_function",
    "make_integrand",
    "reference_integral",
]


def hennig1d(x):
    """exp(-x^2 - sin^2(3x)): even, single bump with shoulders."""
    x = np.asarray(x, dtype=float)
    return np.exp(-x**2 - np.sin(3.0 * x) ** 2)


_HENNIG2D_S = np.array([[1.0, 0.5], [0.5, 1.0]])


def hennig2d(x):
    """exp(-sin(3 ||x||^2) - x' S x) with S = [[1, .5], [.5, 1]]: point-symmetric only."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    r2 = np.sum(X**2, axis=1)
    quad = np.einsum("ni,ij,nj->n", X, _HENNIG2D_S, X)
    out = np.exp(-np.sin(3.0 * r2) - quad)
    return float(out[0]) if single else out


def circular_gaussian(x, mu: float = 2.0, sigma: float = 1.0):
    """Radial shell: ||x||^2 exp(-(||x|| - mu)^2 / (2 sigma^2)) / (2 pi sigma^2)."""
    if sigma <= 0:
        raise InvalidInputError(f"sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    r = np.linalg.norm(X, axis=1)
    out = r**2 * np.exp(-((r - mu) ** 2) / (2.0 * sigma**2)) / (2.0 * math.pi * sigma**2)
    return float(out[0]) if single else out


def sombrero2d(x, c: float = 1.0):
    """sin(pi c ||x||) / (pi c ||x||), with the removable singularity set to 1."""
    if c <= 0:
        raise InvalidInputError(f"frequency c must be positive, got {c}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    r = np.linalg.norm(X, axis=1)
    out = np.sinc(c * r)
    return float(out[0]) if single else out


def airy_psf(x, scale: float = 2.5):
    """Diffraction pattern of a circular aperture: (2 J1(v)/v)^2, v = scale*||x||.

    The central value is the v -> 0 limit, 1. J1 comes from scipy's Cephes
    translation (documented polynomial approximations, relative error well
    below 1e-8 over the range used here).
    """
    if scale <= 0:
        raise InvalidInputError(f"scale must be positive, got {scale}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    v = scale * np.linalg.norm(X, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(v > 0.0, (2.0 * j1(v) / np.where(v > 0.0, v, 1.0)) ** 2, 1.0)
    return float(out[0]) if single else out


@dataclass(frozen=True, eq=False)
class TestFunctionDescriptor:
    """A named integrand, its declared flip invariances, and a default domain."""

    __test__ = False  # not a pytest class, despite the name

    name: str
    dim: int
    generators: tuple[SignVector, ...]
    default_domain: Measure
    parameters: Mapping[str, float]
    fn: Callable[[np.ndarray], float]
    batch_fn: Callable[[np.ndarray], np.ndarray]

    @property
    def declared_group(self) -> SignFlipGroup:
        return group_from_generators(list(self.generators), self.dim)


def _box(dim: int, half_width: float = 3.0) -> BoxLebesgue:
    return BoxLebesgue(lower=(-half_width,) * dim, upper=(half_width,) * dim)


FUNCTIONS: dict[str, TestFunctionDescriptor] = {
    "hennig1d": TestFunctionDescriptor(
        name="hennig1d", dim=1, generators=((-1,),), default_domain=_box(1),
        parameters={}, fn=lambda x: float(hennig1d(np.asarray(x).reshape(-1))[0] if np.ndim(x) else hennig1d(x)),
        batch_fn=lambda X: hennig1d(np.asarray(X, dtype=float)[:, 0]),
    ),
    "hennig2d": TestFunctionDescriptor(
        name="hennig2d", dim=2, generators=((-1, -1),), default_domain=_box(2),
        parameters={}, fn=hennig2d, batch_fn=hennig2d,
    ),
    "circular_gaussian": TestFunctionDescriptor(
        name="circular_gaussian", dim=2, generators=((-1, 1), (1, -1)),
        default_domain=_box(2), parameters={"mu": 2.0, "sigma": 1.0},
        fn=circular_gaussian, batch_fn=circular_gaussian,
    ),
    "sombrero2d": TestFunctionDescriptor(
        name="sombrero2d", dim=2, generators=((-1, 1), (1, -1)),
        default_domain=_box(2), parameters={"c": 1.0},
        fn=sombrero2d, batch_fn=sombrero2d,
    ),
    "airy_psf": TestFunctionDescriptor(
        name="airy_psf", dim=2, generators=((-1, -1),),
        default_domain=_box(2), parameters={"scale": 2.5},
        fn=airy_psf, batch_fn=airy_psf,
    ),
}


def get_function(name: str) -> TestFunctionDescriptor:
    try:
        return FUNCTIONS[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown test function {name!r}; available: {', '.join(sorted(FUNCTIONS))}"
        ) from None


def make_integrand(descriptor: TestFunctionDescriptor,
                   group: SignFlipGroup | None = None) -> Integrand:
    """Wrap a descriptor for the engine, optionally overriding the model group."""
    return Integrand(
        evaluate=lambda x: float(descriptor.batch_fn(np.atleast_2d(np.asarray(x, dtype=float)))[0]),
        dim=descriptor.dim,
        group=group if group is not None else descriptor.declared_group,
        evaluate_batch=descriptor.batch_fn,
    )


# Gaussian tails beyond this many standard deviations are below 1e-20 of the
# mass; with bounded integrands the truncation error is far below the 1e-10
# tolerances used for references.
_GAUSS_TRUNCATION_SIGMAS = 10.0


def reference_integral(descriptor: TestFunctionDescriptor, measure: Measure,
                       rtol: float = 1e-10) -> float:
    """High-accuracy reference value of the integral, via adaptive quadrature."""
    if descriptor.dim > 2:
        raise InvalidInputError("reference integrals are implemented for dimension <= 2")
    if measure.dim != descriptor.dim:
        raise InvalidInputError("measure dimension does not match the integrand")
    f = descriptor.batch_fn
    if isinstance(measure, BoxLebesgue):
        if descriptor.dim == 1:
            return adaptive_quad(lambda t: f(t[:, None]), measure.lower[0], measure.upper[0],
                                 rtol=rtol)
        return nested_quad_2d(
            lambda xv, ys: f(np.column_stack([np.full_like(ys, xv), ys])),
            (measure.lower[0], measure.upper[0]), (measure.lower[1], measure.upper[1]),
            rtol=rtol)
    half = _GAUSS_TRUNCATION_SIGMAS * math.sqrt(measure.variance)
    lo = measure.mean_array - half
    hi = measure.mean_array + half
    if descriptor.dim == 1:
        def fw(t):
            pts = t[:, None]
            return f(pts) * measure.density(pts)
        return adaptive_quad(fw, lo[0], hi[0], rtol=rtol)

    def fw2(xv, ys):
        pts = np.column_stack([np.full_like(ys, xv), ys])
        return f(pts) * measure.density(pts)

    return nested_quad_2d(fw2, (lo[0], hi[0]), (lo[1], hi[1]), rtol=rtol)
