"""Sparse complex matrix helpers on top of :mod:`scipy.sparse`.

Matrices are ``scipy.sparse.csr_array`` objects with complex128 (or float64)
entries.  Block structure, where it matters, is carried by the owner of the
matrix (see :class:`sghelmholtz.fdassembly.GalerkinSystem`).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp
from scipy.sparse.linalg import splu

__all__ = [
    "SingularMatrixError",
    "SparseLU",
    "as_csr",
    "compress",
    "kron",
    "matvec",
    "lu_factor",
    "block_diag_solve",
    "frobenius_norm",
    "to_dense",
    "write_mtx",
    "read_mtx",
    "DENSE_CAP",
    "ZERO_THRESHOLD",
]

#: Largest number of entries ``to_dense`` will materialise.
DENSE_CAP = 4096 * 4096
#: Entries below this magnitude are treated as stored zeros.
ZERO_THRESHOLD = 1e-300
# relative pivot size below which a factorization is rejected as singular
_PIVOT_RTOL = 1e-14


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a factorization meets an (exactly or numerically) zero pivot."""


def as_csr(a) -> sp.csr_array:
    if sp.issparse(a):
        return sp.csr_array(a)
    return sp.csr_array(np.atleast_2d(np.asarray(a)))


def compress(a) -> sp.csr_array:
    """Canonical CSR: sorted indices, summed duplicates, no entries below ``ZERO_THRESHOLD``."""
    a = sp.csr_array(a, copy=True)
    a.sum_duplicates()
    if a.nnz:
        a.data[np.abs(a.data) < ZERO_THRESHOLD] = 0
    a.eliminate_zeros()
    a.sort_indices()
    return a


def kron(a, b) -> sp.csr_array:
    """Kronecker product; ``a`` indexes the blocks."""
    a, b = as_csr(a), as_csr(b)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) >= np.iinfo(np.int64).max or a.nnz * b.nnz >= np.iinfo(np.int64).max:
        raise OverflowError("Kronecker product too large")
    return compress(sp.kron(a, b, format="csr"))


def matvec(a, x) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[0] != a.shape[1]:
        raise ValueError(f"dimension mismatch: matrix has {a.shape[1]} columns, vector {x.shape[0]}")
    return a @ x


class SparseLU:
    """``P M Q = L U`` with row pivoting and a fill-reducing column order.

    ``perm_r``/``perm_c`` follow SuperLU: ``(P M Q)[i, j] = M[perm_r^-1 ...]``;
    use :meth:`permutation_matrices` to obtain ``P`` and ``Q`` explicitly.
    """

    def __init__(self, lu, shape):
        self._lu = lu
        self.shape = shape

    @property
    def n(self) -> int:
        return self.shape[0]

    @property
    def L(self):
        return self._lu.L

    @property
    def U(self):
        return self._lu.U

    @property
    def perm_r(self) -> np.ndarray:
        return self._lu.perm_r

    @property
    def perm_c(self) -> np.ndarray:
        return self._lu.perm_c

    def permutation_matrices(self) -> tuple[sp.csr_array, sp.csr_array]:
        n = self.n
        ones = np.ones(n)
        P = sp.csr_array((ones, (self.perm_r, np.arange(n))), shape=(n, n))
        Q = sp.csr_array((ones, (np.arange(n), self.perm_c)), shape=(n, n))
        return P, Q

    def solve(self, b, trans: str = "N") -> np.ndarray:
        """Solve ``M x = b`` (``trans="N"``) or ``M^T x = b`` (``trans="T"``)."""
        b = np.asarray(b)
        if b.shape[0] != self.n:
            raise ValueError(f"right-hand side has {b.shape[0]} rows, expected {self.n}")
        if np.iscomplexobj(b) and not np.iscomplexobj(self._lu.U.data):
            # a real factor only accepts real right-hand sides
            re = self._lu.solve(np.ascontiguousarray(b.real), trans=trans)
            im = self._lu.solve(np.ascontiguousarray(b.imag), trans=trans)
            return re + 1j * im
        dtype = np.result_type(b.dtype, self._lu.U.dtype)
        return self._lu.solve(np.ascontiguousarray(b, dtype=dtype), trans=trans)


def lu_factor(m) -> SparseLU:
    """Sparse LU with partial pivoting and minimum-degree ordering of ``M^T + M``."""
    m = sp.csc_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got {m.shape}")
    try:
        lu = splu(m, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=1.0)
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from exc
    udiag = np.abs(lu.U.diagonal())
    if udiag.size and (udiag.min() <= _PIVOT_RTOL * udiag.max() or not np.all(np.isfinite(udiag))):
        raise SingularMatrixError(
            f"numerically singular pivot (|u_min|/|u_max| = {udiag.min() / udiag.max():.3e})"
        )
    return SparseLU(lu, m.shape)


def block_diag_solve(fact: SparseLU, x, trans: str = "N") -> np.ndarray:
    """Apply ``(I_{m+1} kron S)^-1`` to ``x`` using one factorization of ``S``.

    All ``m + 1`` segments are solved together as columns of one right-hand side.
    """
    x = np.asarray(x)
    n = fact.n
    if x.ndim != 1 or x.size % n:
        raise ValueError(f"vector length {x.size} is not a multiple of block size {n}")
    cols = x.reshape(-1, n).T
    return fact.solve(cols, trans=trans).T.reshape(-1)


def frobenius_norm(a) -> float:
    if sp.issparse(a):
        data = sp.csr_array(a).data
    else:
        data = np.asarray(a).ravel()
    return float(np.sqrt(np.sum(np.abs(data) ** 2)))


def to_dense(a, cap: int = DENSE_CAP) -> np.ndarray:
    rows, cols = a.shape
    if rows * cols > cap:
        raise MemoryError(f"refusing to densify a {rows}x{cols} matrix (cap {cap} entries)")
    if sp.issparse(a):
        return a.toarray()
    return np.array(a)


def write_mtx(path, a, comment: str = "") -> None:
    """Matrix Market export with 17 significant digits (exact round trip).

    Sparse matrices use the coordinate format, dense vectors the array format;
    the field is complex unless all values are real.
    """
    field = "complex" if np.iscomplexobj(a.data if sp.issparse(a) else a) else "real"
    if sp.issparse(a):
        obj = sp.coo_matrix(a)
    else:
        obj = np.asarray(a).reshape(len(a), -1)
    scipy.io.mmwrite(str(path), obj, comment=comment, field=field,
                     precision=17, symmetry="general")


def read_mtx(path):
    """Read a Matrix Market file; sparse results come back as CSR."""
    out = scipy.io.mmread(str(Path(path)))
    if sp.issparse(out):
        return sp.csr_array(out)
    return np.asarray(out)
