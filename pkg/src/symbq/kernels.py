"""RBF base kernel and its flip-invariant extension.

The invariant kernel sums the base kernel over all pairs of group images of
its two arguments. Averaging over a J-element group therefore costs J^2 base
evaluations per entry, but the Gram matrix stays N x N: conditioning cost does
not grow with the group size.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .groups import SignFlipGroup, identity_group

__all__ = [
    "RbfParams",
    "KernelSpec",
    "rbf",
    "rbf_matrix",
    "invariant_kernel",
    "invariant_cross",
    "invariant_diag",
    "gram",
]


@dataclass(frozen=True)
class RbfParams:
    """Isotropic squared-exponential hyperparameters: output variance and lengthscale."""

    variance: float
    lengthscale: float

    def __post_init__(self):
        if not (np.isfinite(self.variance) and self.variance > 0):
            raise InvalidInputError(f"kernel variance must be positive and finite, got {self.variance}")
        if not (np.isfinite(self.lengthscale) and self.lengthscale > 0):
            raise InvalidInputError(
                f"kernel lengthscale must be positive and finite, got {self.lengthscale}"
            )


@dataclass(frozen=True)
class KernelSpec:
    """RBF hyperparameters plus the invariance group (trivial group = standard kernel)."""

    params: RbfParams
    group: SignFlipGroup

    @staticmethod
    def standard(params: RbfParams, dim: int) -> "KernelSpec":
        return KernelSpec(params=params, group=identity_group(dim))


def _check_points(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise InvalidInputError(f"point shapes differ: {x.shape} vs {y.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidInputError("kernel inputs must be finite")
    return x, y


def rbf(x: np.ndarray, y: np.ndarray, params: RbfParams) -> float:
    """variance * exp(-||x - y||^2 / (2 lengthscale^2))."""
    x, y = _check_points(np.atleast_1d(x), np.atleast_1d(y))
    sq = float(np.sum((x - y) ** 2))
    return params.variance * float(np.exp(-sq / (2.0 * params.lengthscale**2)))


def rbf_matrix(X: np.ndarray, Z: np.ndarray, params: RbfParams) -> np.ndarray:
    """Pairwise base-kernel matrix between row stacks X (N,d) and Z (M,d)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    diff = X[:, None, :] - Z[None, :, :]
    sq = np.einsum("nmd,nmd->nm", diff, diff)
    return params.variance * np.exp(-sq / (2.0 * params.lengthscale**2))


def invariant_kernel(x: np.ndarray, y: np.ndarray, spec: KernelSpec) -> float:
    """Base kernel summed over all J^2 pairs of group images of x and y."""
    x, y = _check_points(np.atleast_1d(x), np.atleast_1d(y))
    if x.shape[0] != spec.group.dim:
        raise InvalidInputError(
            f"point dimension {x.shape[0]} does not match group dimension {spec.group.dim}"
        )
    signs = spec.group.element_array
    total = 0.0
    for g in signs:
        for h in signs:
            total += rbf(g * x, h * y, spec.params)
    return total


def invariant_cross(X: np.ndarray, Z: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """(N, M) matrix of the invariant kernel between two stacks of points.

    The (g, h) double loop runs in canonical element order so the floating
    point accumulation is identical on every call.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if X.shape[1] != spec.group.dim or Z.shape[1] != spec.group.dim:
        raise InvalidInputError("point dimension does not match group dimension")
    signs = spec.group.element_array
    out = np.zeros((X.shape[0], Z.shape[0]))
    for g in signs:
        Xg = X * g
        for h in signs:
            out += rbf_matrix(Xg, Z * h, spec.params)
    return out


def invariant_diag(X: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """k_f(x, x) for each row of X (varies with x for non-trivial groups)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    signs = spec.group.element_array
    inv_two_ls2 = 1.0 / (2.0 * spec.params.lengthscale**2)
    out = np.zeros(X.shape[0])
    for g in signs:
        Xg = X * g
        for h in signs:
            sq = np.sum((Xg - X * h) ** 2, axis=1)
            out += spec.params.variance * np.exp(-sq * inv_two_ls2)
    return out


def gram(X: np.ndarray, spec: KernelSpec) -> np.ndarray:
    """N x N invariant-kernel Gram matrix, symmetrized against round-off."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 1:
        raise InvalidInputError("gram requires at least one row")
    K = invariant_cross(X, X, spec)
    return 0.5 * (K + K.T)
