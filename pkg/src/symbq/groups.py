"""Finite groups of axis sign-flips and the point orbits they induce.

Elements are vectors of +/-1 acting on R^d by coordinate-wise multiplication
(diagonal orthogonal matrices). Composition is the elementwise product, every
element is its own inverse, and the group generated by any set of sign vectors
has a power-of-two size J <= 2^d.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError

# A single transform: d entries, each exactly -1 or +1.
SignVector = tuple[int, ...]


def _as_sign_vector(v: Iterable[int], dim: int | None = None) -> SignVector:
    vec = tuple(int(c) for c in v)
    if any(c not in (-1, 1) for c in vec):
        raise InvalidInputError(f"sign vector entries must be -1 or +1, got {tuple(v)!r}")
    if dim is not None and len(vec) != dim:
        raise InvalidInputError(
            f"sign vector has length {len(vec)}, expected dimension {dim}"
        )
    return vec


def compose(a: Sequence[int], b: Sequence[int]) -> SignVector:
    """Elementwise product of two sign vectors (matrix product of the diagonals)."""
    if len(a) != len(b):
        raise InvalidInputError(f"cannot compose sign vectors of lengths {len(a)} and {len(b)}")
    return tuple(int(x) * int(y) for x, y in zip(a, b))


def apply_sign(element: Sequence[int], x: np.ndarray) -> np.ndarray:
    """Apply one sign-flip transform to a point (or a batch of row points)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != len(element):
        raise InvalidInputError(
            f"point dimension {x.shape[-1]} does not match transform dimension {len(element)}"
        )
    return x * np.asarray(element, dtype=float)


@dataclass(frozen=True)
class SignFlipGroup:
    """The group of sign-flip transforms a model is declared invariant under.

    `elements` is canonically (lexicographically) ordered so that every sum
    indexed over group elements is reproducible bit-for-bit.
    """

    dim: int
    elements: tuple[SignVector, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidInputError(f"group dimension must be positive, got {self.dim}")
        if not self.elements:
            raise InvalidInputError("group must contain at least the identity")
        seen = set()
        for e in self.elements:
            _as_sign_vector(e, self.dim)
            if e in seen:
                raise InvalidInputError(f"duplicate group element {e!r}")
            seen.add(e)
        identity = (1,) * self.dim
        if identity not in seen:
            raise InvalidInputError("group does not contain the identity transform")
        for a in self.elements:
            for b in self.elements:
                if compose(a, b) not in seen:
                    raise InvalidInputError("element set is not closed under composition")
        if tuple(sorted(self.elements)) != self.elements:
            raise InvalidInputError("group elements must be in canonical (lexicographic) order")
        # Closure of an elementwise +/-1 set forms a linear subspace over F_2.
        if self.size & (self.size - 1):
            raise InvalidInputError(f"group size must be a power of two, got {self.size}")

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def identity(self) -> SignVector:
        return (1,) * self.dim

    @property
    def is_trivial(self) -> bool:
        return self.size == 1

    @cached_property
    def element_array(self) -> np.ndarray:
        """All elements stacked as a (J, d) float array, canonical order."""
        return np.asarray(self.elements, dtype=float)

    @cached_property
    def composition_index(self) -> np.ndarray:
        """(J, J) table: entry [i, j] is the index of elements[i] * elements[j]."""
        lookup = {e: k for k, e in enumerate(self.elements)}
        table = np.empty((self.size, self.size), dtype=int)
        for i, a in enumerate(self.elements):
            for j, b in enumerate(self.elements):
                table[i, j] = lookup[compose(a, b)]
        return table


def group_from_generators(generators: Sequence[Sequence[int]], dim: int) -> SignFlipGroup:
    """Close {identity} union generators under elementwise products.

    An empty generator list yields the trivial identity-only group.
    """
    gens = [_as_sign_vector(g, dim) for g in generators]
    elements = {(1,) * dim}
    frontier = set(gens)
    while frontier:
        elements |= frontier
        frontier = {
            compose(a, b) for a in elements for b in elements
        } - elements
    return SignFlipGroup(dim=dim, elements=tuple(sorted(elements)))


def identity_group(dim: int) -> SignFlipGroup:
    """The trivial group: a standard, non-invariant model."""
    return group_from_generators([], dim)


def point_symmetry_group(dim: int) -> SignFlipGroup:
    """The two-element group {I, -I}: symmetry with respect to the origin."""
    return group_from_generators([(-1,) * dim], dim)


def full_flip_group(dim: int) -> SignFlipGroup:
    """All 2^d combinations of single-axis flips."""
    gens = []
    for q in range(dim):
        g = [1] * dim
        g[q] = -1
        gens.append(tuple(g))
    return group_from_generators(gens, dim)


def orbit(group: SignFlipGroup, x: np.ndarray) -> np.ndarray:
    """All images of `x` under the group, one row per element (canonical order).

    The result is a fixed-length multiset: rows repeat when `x` lies on a
    symmetry axis. Keeping the repeats makes every group-indexed sum have
    exactly J terms, so induced kernels stay continuous at fixed points.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != group.dim:
        raise InvalidInputError(
            f"expected a point of dimension {group.dim}, got shape {x.shape}"
        )
    return group.element_array * x
