"""Finite differences in space, stochastic Galerkin in the random variables.

Unknowns are ordered with the PC index outermost and space innermost; in 2D
the x index runs fastest.  The Galerkin matrix is split as
``A = L - i B - K`` with real symmetric ``L`` (Laplacian), ``B`` (absorbing
boundary) and ``K`` (wavenumber) parts, each assembled on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .pcbasis import BasisSet, moment_matrix, project_scalar
from .randfield import RandomField
from .sparsecore import compress, kron, write_mtx

__all__ = [
    "BC",
    "Grid",
    "GalerkinSystem",
    "mesh_rule",
    "laplacian",
    "boundary_weights",
    "assemble_S",
    "assemble_rhs",
    "assemble_galerkin",
    "assemble_galerkin_then_fd_1d",
    "export_system",
]

# Gauss-point chunk used when expanding diagonal blocks (keeps peak memory bounded)
_CHUNK_ENTRIES = 8_000_000


class BC(str, Enum):
    DIRICHLET = "dirichlet"
    ABSORBING = "absorbing"


def mesh_rule(maxk: float) -> int:
    """Interior points per axis: ``q = 2**lev - 1``, ``lev = max(ceil(log2(15 maxk / (2 pi))), 1)``."""
    if not maxk > 0:
        raise ValueError(f"maximal wavenumber must be positive, got {maxk}")
    lev = max(math.ceil(math.log2((15 * maxk) / (2 * math.pi))), 1)
    return 2**lev - 1


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0, 1]^dim with ``q`` interior nodes per axis, ``x_j = j h``."""

    dim: int
    q: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"only 1D and 2D grids are supported, got dim={self.dim}")
        if self.q < 1:
            raise ValueError(f"need at least one interior node, got q={self.q}")

    @property
    def h(self) -> float:
        return 1.0 / (self.q + 1)

    @property
    def h_exact(self) -> Fraction:
        return Fraction(1, self.q + 1)

    def axis(self, bc: BC) -> np.ndarray:
        """Node indices along one axis: boundary included for absorbing conditions."""
        if BC(bc) is BC.ABSORBING:
            return np.arange(self.q + 2)
        return np.arange(1, self.q + 1)

    def axis_points(self, bc: BC) -> int:
        return self.axis(bc).size

    def npoints(self, bc: BC) -> int:
        return self.axis_points(bc) ** self.dim

    def node_indices(self, bc: BC) -> np.ndarray:
        """Integer node indices, shape ``(dim, N)``; in 2D the x index runs fastest."""
        ax = self.axis(bc)
        if self.dim == 1:
            return ax.reshape(1, -1)
        xx, yy = np.meshgrid(ax, ax, indexing="xy")
        return np.vstack([xx.ravel(), yy.ravel()])

    def nodes(self, bc: BC) -> np.ndarray:
        """Node coordinates, shape ``(N, dim)``."""
        return (self.node_indices(bc) * self.h).T


def _tridiag(n: int, diag: np.ndarray) -> sp.csr_array:
    off = -np.ones(n - 1)
    return sp.csr_array(sp.diags([off, diag, off], [-1, 0, 1], shape=(n, n)))


def _end_weights(grid: Grid, bc: BC) -> np.ndarray:
    # 1D weights 1/2 at the two boundary nodes (absorbing), ones otherwise
    w = np.ones(grid.axis_points(bc))
    if BC(bc) is BC.ABSORBING:
        w[0] = w[-1] = 0.5
    return w


def laplacian(grid: Grid, bc: BC) -> sp.csr_array:
    """Discrete ``-Laplacian`` ``T`` (1D) or ``L`` (2D) for the given boundary condition.

    1D Dirichlet: ``tridiag(-1, 2, -1) / h^2``; 1D absorbing has corner
    entries ``1 / h^2``.  2D: ``I kron T + T kron I`` (Dirichlet) and
    ``D kron T + T kron D`` with ``D = diag(1/2, 1, ..., 1, 1/2)`` (absorbing).
    """
    bc = BC(bc)
    n = grid.axis_points(bc)
    diag = np.full(n, 2.0)
    if bc is BC.ABSORBING:
        diag[0] = diag[-1] = 1.0
    T = _tridiag(n, diag) * (grid.q + 1) ** 2
    if grid.dim == 1:
        return compress(T)
    D = sp.csr_array(sp.diags(_end_weights(grid, bc)))
    return compress(kron(D, T) + kron(T, D))


def boundary_weights(grid: Grid, bc: BC) -> tuple[np.ndarray, np.ndarray]:
    """Nodal weights ``(w1, w2)`` with ``D1(xi) = diag(w1 k) / h`` and ``D2(xi) = diag(w2 k^2)``.

    ``w1`` marks the absorbing boundary (zero for Dirichlet); ``w2`` carries
    the 1/2 (edge) and 1/4 (corner) factors of the boundary rows.
    """
    bc = BC(bc)
    w = _end_weights(grid, bc)
    if grid.dim == 1:
        w2 = w
    else:
        w2 = np.outer(w, w).ravel()  # y-major, x fastest
    if bc is BC.DIRICHLET:
        w1 = np.zeros_like(w2)
    else:
        w1 = (w2 < 1.0).astype(float)
    return w1, w2


def _sample(grid: Grid, fld: RandomField, bc: BC) -> np.ndarray:
    if fld.dim != grid.dim:
        raise ValueError(f"field is {fld.dim}-D but grid is {grid.dim}-D")
    return fld.sample(grid.node_indices(bc), grid.q + 1)


def _wavenumber(coef: np.ndarray, xi) -> np.ndarray:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (coef.shape[0] - 1,):
        raise ValueError(f"xi must have {coef.shape[0] - 1} entries")
    return coef[0] + xi @ coef[1:]


def spatial_parts(grid: Grid, fld: RandomField, bc: BC, xi) -> tuple:
    """``(L, D1(xi), D2(xi))`` as real sparse matrices with ``S = L - i D1 - D2``."""
    k = _wavenumber(_sample(grid, fld, bc), xi)
    w1, w2 = boundary_weights(grid, bc)
    L = laplacian(grid, bc)
    D1 = compress(sp.diags(w1 * k * (grid.q + 1)))
    D2 = compress(sp.diags(w2 * k * k))
    return L, D1, D2


def assemble_S(grid: Grid, fld: RandomField, bc: BC, xi) -> sp.csr_array:
    """Deterministic FD matrix ``S(xi) = L - i D1(xi) - D2(xi)`` at one parameter value."""
    L, D1, D2 = spatial_parts(grid, fld, bc, xi)
    return compress(L.astype(complex) - 1j * D1 - D2)


def _nearest_index(a: Fraction, q: int) -> int:
    # nearest x_j = j / (q + 1); ties go to the smaller node
    scaled = a * (q + 1)
    lo = math.floor(scaled)
    return lo if scaled - lo <= Fraction(1, 2) else lo + 1


def assemble_rhs(grid: Grid, bc: BC, center=None) -> np.ndarray:
    """Point source ``delta(x - a)`` discretised as ``1/h^dim`` at the node nearest ``a``.

    The default centre is the domain midpoint, which gives the node
    ``t = ceil(q / 2)`` on each axis.  Absorbing boundary rows carry the same
    1/2 (and 1/4 at corners) weights as the boundary equations.
    """
    bc = BC(bc)
    if center is None:
        center = (Fraction(1, 2),) * grid.dim
    center = tuple(Fraction(str(c)) if isinstance(c, float) else Fraction(c)
                   for c in np.atleast_1d(center))
    if len(center) != grid.dim:
        raise ValueError("source centre dimension does not match the grid")
    idx = [_nearest_index(c, grid.q) for c in center]
    ax = grid.axis(bc)
    pos = []
    for t in idx:
        hit = np.nonzero(ax == t)[0]
        if hit.size == 0:
            raise ValueError(f"point source at node {t} lies on a Dirichlet boundary")
        pos.append(int(hit[0]))
    n_axis = ax.size
    flat = pos[0] if grid.dim == 1 else pos[1] * n_axis + pos[0]
    f = np.zeros(grid.npoints(bc))
    f[flat] = float((grid.q + 1) ** grid.dim)
    _, w2 = boundary_weights(grid, bc)
    return f * w2


@dataclass
class GalerkinSystem:
    """Stochastic Galerkin system ``A V = b`` with its real parts ``A = L - i B - K``."""

    A: sp.csr_array
    b: np.ndarray
    L: sp.csr_array
    B: sp.csr_array
    K: sp.csr_array
    grid: Grid
    basis: BasisSet
    bc: BC
    field: RandomField = field(repr=False)

    @property
    def n(self) -> int:
        """Spatial block size."""
        return self.grid.npoints(self.bc)

    @property
    def nblocks(self) -> int:
        return self.basis.size

    @property
    def size(self) -> int:
        return self.A.shape[0]

    @property
    def mean_xi(self) -> np.ndarray:
        # expected value of uniform variables on [-1, 1]
        return np.zeros(self.basis.s)

    def S(self, xi=None) -> sp.csr_array:
        xi = self.mean_xi if xi is None else xi
        return assemble_S(self.grid, self.field, self.bc, xi)

    def spatial_parts(self, xi=None) -> tuple:
        xi = self.mean_xi if xi is None else xi
        return spatial_parts(self.grid, self.field, self.bc, xi)

    def blocks(self, V) -> np.ndarray:
        """Reshape a solution vector into PC coefficient vectors, shape ``(m + 1, n)``."""
        return np.asarray(V).reshape(self.nblocks, self.n)

    def describe(self) -> str:
        lines = [
            f"dim = {self.grid.dim}",
            f"q = {self.grid.q}",
            f"h = 1/{self.grid.q + 1}",
            f"bc = {self.bc.value}",
            f"s = {self.basis.s}",
            f"r = {self.basis.r}",
            f"nbasis = {self.nblocks}",
            f"n = {self.n}",
            f"size = {self.size}",
            f"nnz = {self.A.nnz}",
            f"field = {self.field.label}",
        ]
        lines += [f"field.{k} = {v!r}" for k, v in self.field.params.items()]
        return "\n".join(lines) + "\n"


def _moment_terms(basis: BasisSet):
    """Moment matrices of ``1``, ``xi_l`` and ``xi_l xi_l'`` (``l <= l'``)."""
    s = basis.s
    first = []
    for ell in range(s):
        p = [0] * s
        p[ell] = 1
        first.append(moment_matrix(basis, p))
    second = {}
    for a in range(s):
        for c in range(a, s):
            p = [0] * s
            p[a] += 1
            p[c] += 1
            second[(a, c)] = moment_matrix(basis, p)
    return first, second


def _block_diag_pattern(mats: list[np.ndarray], weights: list[np.ndarray]) -> sp.csr_array:
    """``sum_t mats[t] kron diag(weights[t])`` assembled entry by entry.

    Entries that are exactly zero (zero moment or zero weight) are never stored.
    """
    keep = [t for t, w in enumerate(weights) if np.any(w != 0)]
    nb = mats[0].shape[0]
    npts = weights[0].size
    if not keep:
        return sp.csr_array((nb * npts, nb * npts))
    G = np.stack([mats[t] for t in keep])  # (T, M, M)
    W = np.stack([weights[t] for t in keep])  # (T, N)
    I, J = np.nonzero(np.any(G != 0, axis=0))
    coef = G[:, I, J].T  # (pairs, T)
    rows, cols, vals = [], [], []
    chunk = max(1, _CHUNK_ENTRIES // max(npts, 1))
    pts = np.arange(npts, dtype=np.int64)
    for start in range(0, I.size, chunk):
        sl = slice(start, start + chunk)
        block = coef[sl] @ W  # (chunk, N)
        pi, pp = np.nonzero(block)
        rows.append(I[sl][pi].astype(np.int64) * npts + pts[pp])
        cols.append(J[sl][pi].astype(np.int64) * npts + pts[pp])
        vals.append(block[pi, pp])
    size = nb * npts
    out = sp.csr_array(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )
    return compress(out)


def assemble_galerkin(grid: Grid, fld: RandomField, bc: BC, basis: BasisSet,
                      rhs: np.ndarray | None = None) -> GalerkinSystem:
    """Galerkin projection of the FD system ``S(xi) U = F_0``.

    ``L = I kron L_h``; ``B`` and ``K`` have diagonal blocks
    ``B_ij = diag(<w1 k phi_j, phi_i>) / h`` and ``K_ij = diag(<w2 k^2 phi_j, phi_i>)``.
    Since ``k`` is affine in xi, every projection is a combination of the
    exact moment matrices of ``1``, ``xi_l`` and ``xi_l xi_l'``.
    """
    bc = BC(bc)
    if basis.s != fld.s:
        raise ValueError(f"basis has {basis.s} variables, field has {fld.s}")
    coef = _sample(grid, fld, bc)
    w1, w2 = boundary_weights(grid, bc)
    k0, kl = coef[0], coef[1:]
    s = basis.s
    eye = np.eye(basis.size)
    first, second = _moment_terms(basis)

    b_mats = [eye] + first
    b_weights = [w1 * k0 * (grid.q + 1)] + [w1 * kl[ell] * (grid.q + 1) for ell in range(s)]
    k_mats = [eye] + first
    k_weights = [w2 * k0 * k0] + [w2 * 2.0 * k0 * kl[ell] for ell in range(s)]
    for (a, c), G in second.items():
        k_mats.append(G)
        factor = 1.0 if a == c else 2.0
        k_weights.append(w2 * factor * kl[a] * kl[c])

    Lsp = laplacian(grid, bc)
    Lpart = kron(sp.eye_array(basis.size, format="csr"), Lsp)
    Kpart = _block_diag_pattern(k_mats, k_weights)
    Bpart = _block_diag_pattern(b_mats, b_weights)
    A = compress(Lpart.astype(complex) - 1j * Bpart - Kpart)

    if rhs is None:
        rhs = assemble_rhs(grid, bc)
    b = np.zeros(A.shape[0], dtype=complex)
    b[: rhs.size] = rhs
    return GalerkinSystem(A=A, b=b, L=Lpart, B=Bpart, K=Kpart, grid=grid,
                          basis=basis, bc=bc, field=fld)


def assemble_galerkin_then_fd_1d(grid: Grid, fld: RandomField, bc: BC,
                                 basis: BasisSet) -> GalerkinSystem:
    """Discretise the coupled PDE system ``-v'' - C(x) v = F`` node by node.

    ``c_ij(x) = <k(x)^2 phi_i, phi_j>`` and ``b_ij(x) = <k(x) phi_i, phi_j>``
    are built at every node from the expansion of the affine ``k`` and its
    square, with the moments of ``xi_l`` and ``xi_l xi_l'`` taken by Gauss
    quadrature (projecting ``k^2`` as a whole would lose digits to
    cancellation against the large ``k_0^2`` term).  The boundary rows read
    ``(v(x_0) - v(x_1)) / h^2 - (i/h) B(x_0) v(x_0) - C(x_0) v(x_0) / 2 = F(x_0) / 2``.
    """
    bc = BC(bc)
    if grid.dim != 1:
        raise ValueError("the Galerkin-then-FD path is implemented in 1D only")
    coef = _sample(grid, fld, bc)
    ax = grid.axis(bc)
    npts = ax.size
    nb = basis.size
    s = basis.s
    inv_h = float(grid.q + 1)
    inv_h2 = inv_h * inv_h
    eye = np.eye(nb)
    lin = [project_scalar(basis, lambda xi, a=a: xi[:, a], degree=1) for a in range(s)]
    quad = {(a, c): project_scalar(basis, lambda xi, a=a, c=c: xi[:, a] * xi[:, c], degree=2)
            for a in range(s) for c in range(a, s)}

    def idx(j, ell):
        return j * npts + ell

    Lr, Lc, Lv = [], [], []
    Br, Bc, Bv = [], [], []
    Kr, Kc, Kv = [], [], []
    for ell in range(npts):
        c0, cl = coef[0, ell], coef[1:, ell]
        Bx = c0 * eye
        C = c0 * c0 * eye
        for a in range(s):
            Bx = Bx + cl[a] * lin[a]
            C = C + 2.0 * c0 * cl[a] * lin[a]
        for (a, c), G in quad.items():
            C = C + (1.0 if a == c else 2.0) * cl[a] * cl[c] * G
        boundary = bc is BC.ABSORBING and ell in (0, npts - 1)
        for j in range(nb):
            row = idx(j, ell)
            if boundary:
                nbr = 1 if ell == 0 else npts - 2
                Lr += [row, row]
                Lc += [row, idx(j, nbr)]
                Lv += [inv_h2, -inv_h2]
            else:
                Lr.append(row)
                Lc.append(row)
                Lv.append(2.0 * inv_h2)
                for nbr in (ell - 1, ell + 1):
                    if 0 <= nbr < npts:
                        Lr.append(row)
                        Lc.append(idx(j, nbr))
                        Lv.append(-inv_h2)
            for i in range(nb):
                if C[i, j] != 0.0:
                    Kr.append(row)
                    Kc.append(idx(i, ell))
                    Kv.append(0.5 * C[i, j] if boundary else C[i, j])
                if boundary and Bx[i, j] != 0.0:
                    Br.append(row)
                    Bc.append(idx(i, ell))
                    Bv.append(inv_h * Bx[i, j])
    size = nb * npts
    Lpart = compress(sp.csr_array((Lv, (Lr, Lc)), shape=(size, size)))
    Kpart = compress(sp.csr_array((Kv, (Kr, Kc)), shape=(size, size)))
    Bpart = compress(sp.csr_array((np.asarray(Bv, dtype=float), (Br, Bc)), shape=(size, size)))
    A = compress(Lpart.astype(complex) - 1j * Bpart - Kpart)
    rhs = assemble_rhs(grid, bc)
    b = np.zeros(size, dtype=complex)
    b[:npts] = rhs
    return GalerkinSystem(A=A, b=b, L=Lpart, B=Bpart, K=Kpart, grid=grid,
                          basis=basis, bc=bc, field=fld)


def export_system(sys_: GalerkinSystem, outdir) -> Path:
    """Write ``A``, ``L``, ``B``, ``K``, ``b`` as Matrix Market plus ``system.txt``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_mtx(outdir / "A.mtx", sys_.A)
    write_mtx(outdir / "L.mtx", sys_.L)
    write_mtx(outdir / "B.mtx", sys_.B)
    write_mtx(outdir / "K.mtx", sys_.K)
    write_mtx(outdir / "b.mtx", sys_.b)
    (outdir / "system.txt").write_text(sys_.describe())
    return outdir
