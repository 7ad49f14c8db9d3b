"""Orthonormal Legendre chaos for independent uniform variables on [-1, 1]^s.

The probability density is rho = 2**-s, so the univariate polynomials are
the Legendre polynomials scaled by sqrt(2n + 1).  Multivariate basis
functions are tensor products indexed by multi-indices of total degree at
most ``r``, listed degree by degree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

__all__ = [
    "BasisSizeError",
    "BasisSet",
    "build_basis",
    "basis_size",
    "legendre_table",
    "gauss_rule",
    "eval_basis",
    "project_scalar",
    "univariate_moments",
    "moment_matrix",
]

#: Largest basis we agree to build; the Galerkin matrix has this many blocks per row.
MAX_BASIS_SIZE = 1_000_000


class BasisSizeError(ValueError):
    """The requested basis is too large to enumerate."""


def basis_size(s: int, r: int) -> int:
    """Number of multivariate polynomials in ``s`` variables of total degree <= ``r``."""
    return math.comb(s + r, r)


def _graded_indices(s: int, r: int) -> list[tuple[int, ...]]:
    # Degree-major; inside one degree, tuples in decreasing lexicographic
    # order so that index l (1 <= l <= s) is the linear monomial in xi_l.
    out: list[tuple[int, ...]] = []

    def compositions(total: int, parts: int):
        if parts == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    for degree in range(r + 1):
        out.extend(compositions(degree, s))
    return out


def legendre_table(x, nmax: int) -> np.ndarray:
    """Orthonormal Legendre values ``P̂_0..P̂_nmax`` at the points ``x``.

    Uses the three-term recurrence for the classical polynomials and then
    scales by ``sqrt(2n + 1)`` (unit norm under the density 1/2).

    Returns an array of shape ``(nmax + 1,) + shape(x)``.
    """
    x = np.asarray(x, dtype=float)
    table = np.empty((nmax + 1,) + x.shape)
    table[0] = 1.0
    if nmax >= 1:
        table[1] = x
    for n in range(1, nmax):
        table[n + 1] = ((2 * n + 1) * x * table[n] - n * table[n - 1]) / (n + 1)
    scale = np.sqrt(2.0 * np.arange(nmax + 1) + 1.0)
    return table * scale.reshape((-1,) + (1,) * x.ndim)


def gauss_rule(s: int, npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre rule on [-1, 1]^s for the density 2**-s.

    Returns nodes of shape ``(npts**s, s)`` and weights summing to one.
    The last variable runs fastest.
    """
    x1, w1 = np.polynomial.legendre.leggauss(npts)
    w1 = w1 / 2.0
    grids = np.meshgrid(*([x1] * s), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    wgrids = np.meshgrid(*([w1] * s), indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return nodes, weights


@dataclass(frozen=True)
class BasisSet:
    """Graded multivariate Legendre basis of total degree at most ``r``."""

    s: int
    r: int
    indices: tuple[tuple[int, ...], ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def size(self) -> int:
        return len(self.indices)

    @cached_property
    def multi_indices(self) -> np.ndarray:
        """Integer array of shape ``(m + 1, s)``."""
        return np.array(self.indices, dtype=int).reshape(len(self.indices), self.s)

    @cached_property
    def degrees(self) -> np.ndarray:
        """Total degree of each basis function."""
        return self.multi_indices.sum(axis=1)

    def quadrature_points(self, g_degree: int | None = 2) -> int:
        """Gauss points per variable for integrands ``g * phi_i * phi_j``.

        Exact when ``g`` is a polynomial of degree ``g_degree``; ``None``
        means a non-polynomial integrand and gets ``2 (r + 4)`` points.
        """
        if g_degree is None:
            return 2 * (self.r + 4)
        return max(1, math.ceil((2 * self.r + g_degree + 1) / 2))

    def quadrature(self, g_degree: int | None = 2) -> tuple[np.ndarray, np.ndarray]:
        return gauss_rule(self.s, self.quadrature_points(g_degree))

    @cached_property
    def quad_nodes(self) -> np.ndarray:
        return self.quadrature()[0]

    @cached_property
    def quad_weights(self) -> np.ndarray:
        return self.quadrature()[1]

    def evaluate(self, points) -> np.ndarray:
        """Values of every basis function at ``points`` (shape ``(N, s)``).

        Returns an array of shape ``(N, m + 1)``.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.s:
            raise ValueError(f"points must have {self.s} columns, got {pts.shape[1]}")
        out = np.ones((pts.shape[0], self.size))
        mi = self.multi_indices
        for d in range(self.s):
            table = legendre_table(pts[:, d], self.r)  # (r+1, N)
            out *= table[mi[:, d]].T
        return out


def build_basis(s: int, r: int) -> BasisSet:
    """Orthonormal Legendre basis in ``s`` variables up to total degree ``r``."""
    if s < 1:
        raise ValueError(f"need at least one random variable, got s={s}")
    if r < 0:
        raise ValueError(f"total degree must be nonnegative, got r={r}")
    count = basis_size(s, r)
    if count > MAX_BASIS_SIZE:
        raise BasisSizeError(
            f"basis with s={s}, r={r} has {count} functions (limit {MAX_BASIS_SIZE})"
        )
    indices = tuple(_graded_indices(s, r))
    assert len(indices) == count
    return BasisSet(s=s, r=r, indices=indices)


def eval_basis(basis: BasisSet, i: int, xi) -> float:
    """Value of the ``i``-th basis function at the single point ``xi``."""
    if not 0 <= i < basis.size:
        raise IndexError(f"basis index {i} out of range for {basis.size} functions")
    pt = np.asarray(xi, dtype=float).reshape(1, basis.s)
    if np.any(np.abs(pt) > 1.0):
        raise ValueError("xi must lie in [-1, 1]^s")
    value = 1.0
    for d, deg in enumerate(basis.indices[i]):
        value *= legendre_table(pt[0, d], deg)[deg]
    return float(value)


def project_scalar(
    basis: BasisSet,
    g: Callable[[np.ndarray], np.ndarray],
    degree: int | None = None,
) -> np.ndarray:
    """Galerkin matrix ``[<g phi_j, phi_i>]_{ij}`` by tensor Gauss quadrature.

    Parameters
    ----------
    basis : BasisSet
    g : callable
        Vectorised function mapping points of shape ``(N, s)`` to ``(N,)``.
    degree : int, optional
        Polynomial degree of ``g`` in xi.  When given, the rule is exact and
        entries with ``|deg phi_i - deg phi_j| > degree`` are set to exactly
        zero (they vanish by orthogonality).

    Returns
    -------
    ndarray, shape (m + 1, m + 1)
        Symmetric for real ``g``.
    """
    nodes, weights = basis.quadrature(degree)
    phi = basis.evaluate(nodes)
    gv = np.asarray(g(nodes))
    if gv.shape != weights.shape:
        gv = np.broadcast_to(gv, weights.shape)
    gram = phi.T @ ((weights * gv)[:, None] * phi)
    gram = 0.5 * (gram + gram.T)
    if degree is not None:
        deg = basis.degrees
        gram[np.abs(deg[:, None] - deg[None, :]) > degree] = 0.0
    return gram


def univariate_moments(nmax: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact tables ``E[xi^a P̂_i P̂_j]`` for ``a = 0, 1, 2`` and ``i, j <= nmax``.

    Built from the Jacobi matrix of the orthonormal Legendre recurrence,
    ``xi P̂_n = b_{n+1} P̂_{n+1} + b_n P̂_{n-1}`` with ``b_n = n / sqrt(4 n^2 - 1)``,
    so every structurally vanishing entry is an exact zero.
    """
    size = nmax + 2
    n = np.arange(1, size)
    b = n / np.sqrt(4.0 * n * n - 1.0)
    jac = np.diag(b, 1) + np.diag(b, -1)
    m0 = np.eye(nmax + 1)
    m1 = jac[: nmax + 1, : nmax + 1].copy()
    m2 = (jac @ jac)[: nmax + 1, : nmax + 1]
    m2 = 0.5 * (m2 + m2.T)
    # jac has a zero diagonal, so odd offsets of jac @ jac are exact zeros;
    # enforce it against any stray rounding in the matmul.
    i, j = np.indices(m2.shape)
    m2[(np.abs(i - j) > 2) | ((i - j) % 2 == 1)] = 0.0
    return m0, m1, m2


def moment_matrix(basis: BasisSet, powers) -> np.ndarray:
    """``[E[xi^powers phi_i phi_j]]_{ij}`` for a monomial with per-variable powers <= 2."""
    powers = tuple(int(p) for p in powers)
    if len(powers) != basis.s or any(p < 0 or p > 2 for p in powers):
        raise ValueError("powers must be s entries in {0, 1, 2}")
    tables = univariate_moments(basis.r)
    mi = basis.multi_indices
    out = np.ones((basis.size, basis.size))
    for d, p in enumerate(powers):
        out *= tables[p][np.ix_(mi[:, d], mi[:, d])]
    return out
