"""Preconditioners for the stochastic Galerkin Helmholtz system.

* ``csl``: complex shifted Laplace ``M = A - i beta K`` (full sparse LU).
* ``mean``: mean value ``A_bar = I kron S(xi_bar)`` (one block LU).
* ``meancsl``: ``I kron (S(xi_bar) - i beta K(xi_bar))`` (one block LU).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from .fdassembly import GalerkinSystem
from .sparsecore import SparseLU, block_diag_solve, compress, kron, lu_factor

__all__ = [
    "Kind",
    "Preconditioner",
    "identity",
    "build_csl",
    "build_mean_value",
    "build_mean_csl",
    "build",
    "apply",
    "DEFAULT_BETA",
]

DEFAULT_BETA = 0.5


class Kind(str, Enum):
    NONE = "none"
    CSL = "csl"
    MEAN = "mean"
    MEANCSL = "meancsl"


@dataclass
class Preconditioner:
    """A factored preconditioner ``P``; :meth:`solve` returns ``P^-1 x``.

    For the block-diagonal kinds only the ``n x n`` block is stored and
    factored; :meth:`matrix` expands it on request.
    """

    kind: Kind
    beta: float = 0.0
    factor: SparseLU | None = field(default=None, repr=False)
    block: sp.csr_array | None = field(default=None, repr=False)
    nblocks: int = 1
    full: sp.csr_array | None = field(default=None, repr=False)
    size: int | None = None

    @property
    def tag(self) -> str:
        if self.kind in (Kind.CSL, Kind.MEANCSL):
            return f"{self.kind.value}(beta={self.beta:g})"
        return self.kind.value

    @property
    def block_diagonal(self) -> bool:
        return self.kind in (Kind.MEAN, Kind.MEANCSL)

    def matrix(self) -> sp.csr_array:
        """The preconditioner as an explicit sparse matrix."""
        if self.kind is Kind.NONE:
            return sp.eye_array(self.size, format="csr", dtype=complex)
        if self.block_diagonal:
            return kron(sp.eye_array(self.nblocks, format="csr"), self.block)
        return self.full

    def solve(self, x, trans: str = "N") -> np.ndarray:
        """``P^-1 x``, or ``P^-T x`` with ``trans="T"``; ``x`` may hold several columns."""
        x = np.asarray(x)
        if self.size is not None and x.shape[0] != self.size:
            raise ValueError(f"vector length {x.shape[0]} does not match preconditioner size {self.size}")
        if self.kind is Kind.NONE:
            return x.copy()
        if self.block_diagonal:
            if x.ndim == 1:
                return block_diag_solve(self.factor, x, trans)
            n, nb = self.factor.n, self.nblocks
            # (I kron S)^-1 on every column at once: stack the blocks side by side
            cols = x.reshape(nb, n, -1).transpose(1, 0, 2).reshape(n, -1)
            out = self.factor.solve(cols, trans=trans)
            return out.reshape(n, nb, -1).transpose(1, 0, 2).reshape(x.shape)
        return self.factor.solve(x, trans=trans)


def apply(p: Preconditioner | None, x) -> np.ndarray:
    """``P^-1 x``; ``None`` means no preconditioning."""
    if p is None:
        return np.array(x, copy=True)
    return p.solve(x)


def identity(size: int) -> Preconditioner:
    return Preconditioner(kind=Kind.NONE, size=size)


def build_csl(sys_: GalerkinSystem, beta: float = DEFAULT_BETA) -> Preconditioner:
    """Factor ``M(beta) = L - i B - (1 + i beta) K = A - i beta K``."""
    M = compress(sys_.A - 1j * beta * sys_.K)
    return Preconditioner(kind=Kind.CSL, beta=float(beta), factor=lu_factor(M),
                          full=M, size=sys_.size)


def _mean_block(sys_: GalerkinSystem, beta: float) -> sp.csr_array:
    L, D1, D2 = sys_.spatial_parts(sys_.mean_xi)
    return compress(L.astype(complex) - 1j * D1 - (1.0 + 1j * beta) * D2)


def build_mean_value(sys_: GalerkinSystem) -> Preconditioner:
    """``A_bar = I_{m+1} kron S(xi_bar)``; only ``S(xi_bar)`` is factored."""
    block = _mean_block(sys_, 0.0)
    return Preconditioner(kind=Kind.MEAN, factor=lu_factor(block), block=block,
                          nblocks=sys_.nblocks, size=sys_.size)


def build_mean_csl(sys_: GalerkinSystem, beta: float = DEFAULT_BETA) -> Preconditioner:
    """``M_0 = I_{m+1} kron (S(xi_bar) - i beta D2(xi_bar))``; block factored once."""
    block = _mean_block(sys_, beta)
    return Preconditioner(kind=Kind.MEANCSL, beta=float(beta), factor=lu_factor(block),
                          block=block, nblocks=sys_.nblocks, size=sys_.size)


def build(sys_: GalerkinSystem, kind, beta: float = DEFAULT_BETA) -> Preconditioner:
    kind = Kind(kind)
    if kind is Kind.NONE:
        return identity(sys_.size)
    if kind is Kind.CSL:
        return build_csl(sys_, beta)
    if kind is Kind.MEAN:
        return build_mean_value(sys_)
    return build_mean_csl(sys_, beta)
