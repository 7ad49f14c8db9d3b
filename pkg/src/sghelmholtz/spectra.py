"""Dense spectral diagnostics at desk scale.

Eigenvalues of preconditioned matrices and their position relative to the
disk ``|z - 1/2| <= 1/2``, 2-norm condition numbers, and the Frobenius-norm
bound for the mean value preconditioner.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .fdassembly import GalerkinSystem
from .pcbasis import gauss_rule
from .precond import Preconditioner, build_mean_value
from .sparsecore import frobenius_norm, lu_factor, to_dense

__all__ = [
    "EIG_CAP",
    "SpectrumReport",
    "FrobeniusBound",
    "dense_eigs",
    "eig_backward_error",
    "preconditioned_matrix",
    "preconditioned_spectrum",
    "mobius",
    "arc_violation",
    "condition_number2",
    "frobenius_bound_check",
    "write_spectrum_csv",
]

#: Largest dimension accepted by the dense routines.
EIG_CAP = 2500


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise MemoryError(f"dimension {n} exceeds the dense cap {cap}")


def dense_eigs(a, cap: int = EIG_CAP) -> np.ndarray:
    """All eigenvalues of a square matrix (Hessenberg reduction + shifted QR, LAPACK ``geev``)."""
    a = to_dense(a, cap * cap) if sp.issparse(a) else np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    _check_cap(a.shape[0], cap)
    if a.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    try:
        return la.eigvals(a, check_finite=True).astype(complex)
    except la.LinAlgError as exc:
        raise RuntimeError(f"eigenvalue iteration did not converge: {exc}") from exc


def eig_backward_error(a, lam: complex, iters: int = 3, seed: int = 0) -> float:
    """``||A v - lam v|| / ||A||_2`` for ``v`` from inverse iteration at ``lam``.

    A tiny relative perturbation keeps the shifted matrix nonsingular when
    ``lam`` is an exact eigenvalue.
    """
    a = np.asarray(a.toarray() if sp.issparse(a) else a, dtype=complex)
    n = a.shape[0]
    anorm = np.linalg.norm(a, 2)
    if anorm == 0:
        return 0.0
    shift = lam + (1 + 1j) * 1e-13 * anorm
    lu = la.lu_factor(a - shift * np.eye(n), check_finite=False)
    v = np.random.default_rng(seed).standard_normal(n) + 0j
    for _ in range(iters):
        v = la.lu_solve(lu, v)
        v /= np.linalg.norm(v)
    return float(np.linalg.norm(a @ v - lam * v) / anorm)


def preconditioned_matrix(A, p: Preconditioner, side: str = "right", cap: int = EIG_CAP) -> np.ndarray:
    """Dense ``A P^-1`` (``side="right"``) or ``P^-1 A`` (``side="left"``)."""
    _check_cap(A.shape[0], cap)
    Ad = to_dense(A, cap * cap).astype(complex)
    if side == "left":
        return p.solve(Ad)
    if side != "right":
        raise ValueError(f"unknown side {side!r}")
    # A P^-1 = (P^-T A^T)^T
    return np.ascontiguousarray(p.solve(np.ascontiguousarray(Ad.T), trans="T").T)


def mobius(z, beta: float):
    """``mu(z) = (z - 1) / (z - (1 + i beta))``."""
    z2 = 1.0 + 1j * beta
    z = np.asarray(z, dtype=complex)
    if np.any(z == z2):
        raise ZeroDivisionError(f"z = {z2} is the pole of the Moebius map")
    out = (z - 1.0) / (z - z2)
    return out[()] if out.ndim == 0 else out


def arc_violation(eigs, beta: float) -> float:
    """Angular distance (radians) of eigenvalues outside the arc from ``mu(0)`` to 1 through 0.

    Angles are measured around the centre 1/2.  The arc runs
    counter-clockwise from 1 (angle 0) through 0 (angle pi) to ``mu(0)``.
    """
    if not beta > 0:
        raise ValueError("the arc is defined for a positive shift")
    # mu(0) - 1/2 = (1 - beta^2) / (2 (1 + beta^2)) - i beta / (1 + beta^2)
    end = math.atan2(-beta / (1 + beta * beta), (1 - beta * beta) / (2 * (1 + beta * beta)))
    end %= 2 * math.pi
    ang = np.angle(np.asarray(eigs, dtype=complex) - 0.5) % (2 * math.pi)
    # eigenvalues numerically at 1 may land just below angle 2 pi
    ang = np.where(ang > 2 * math.pi - 1e-9, 0.0, ang)
    over = np.maximum(ang - end, 0.0)
    return float(over.max()) if over.size else 0.0


@dataclass
class SpectrumReport:
    """Eigenvalues of a preconditioned matrix and their inclusion metrics.

    ``max_disk_violation`` is ``max(|lam - 1/2| - 1/2)``; positive values
    leave the closed disk.  ``circle_deviation`` is ``max(||lam - 1/2| - 1/2|)``.
    ``beta_disk_violation`` is ``max(beta/2 - |lam - (1 - i beta/2)|)``;
    positive values enter the open disk bounded by the image of the imaginary axis.
    """

    eigenvalues: np.ndarray = field(repr=False)
    beta: float
    max_disk_violation: float
    circle_deviation: float
    beta_disk_violation: float

    @property
    def size(self) -> int:
        return int(self.eigenvalues.size)

    def summary(self) -> str:
        return (
            f"eigenvalues {self.size}\n"
            f"beta {self.beta:.17g}\n"
            f"max_disk_violation {self.max_disk_violation:.17g}\n"
            f"circle_deviation {self.circle_deviation:.17g}\n"
            f"beta_disk_violation {self.beta_disk_violation:.17g}\n"
        )


def _report(eigs: np.ndarray, beta: float) -> SpectrumReport:
    dist = np.abs(eigs - 0.5)
    centre = 1.0 - 0.5j * beta
    return SpectrumReport(
        eigenvalues=eigs,
        beta=float(beta),
        max_disk_violation=float(np.max(dist - 0.5)),
        circle_deviation=float(np.max(np.abs(dist - 0.5))),
        beta_disk_violation=float(np.max(abs(beta) / 2 - np.abs(eigs - centre))),
    )


def preconditioned_spectrum(sys_: GalerkinSystem, p: Preconditioner, side: str = "right",
                            cap: int = EIG_CAP) -> SpectrumReport:
    """Spectrum of ``A P^-1`` with its disk, circle and shifted-disk metrics."""
    eigs = dense_eigs(preconditioned_matrix(sys_.A, p, side, cap), cap)
    return _report(eigs, p.beta)


def condition_number2(a, cap: int = EIG_CAP) -> float:
    """``sigma_max / sigma_min`` from a dense SVD; ``inf`` for singular input."""
    a = to_dense(a, cap * cap) if sp.issparse(a) else np.asarray(a)
    _check_cap(max(a.shape), cap)
    sv = la.svdvals(a)
    if sv.size == 0:
        return 1.0
    if sv[-1] == 0 or sv[-1] <= sv[0] * np.finfo(float).eps * 0.01:
        return math.inf
    return float(sv[0] / sv[-1])


@dataclass
class FrobeniusBound:
    """``lhs = ||Abar^-1 A - I||_F`` against ``rhs = C_m ||S(xi_bar)^-1||_F ||  ||dS||_F ||_L2``."""

    lhs: float
    rhs: float
    Cm: float
    inv_norm: float
    delta_norm: float
    roundoff: float = 0.0

    @property
    def holds(self) -> bool:
        # roundoff bounds the floating-point error in forming Abar^-1 A
        return self.lhs <= self.rhs * (1 + 1e-10) + self.roundoff


def _product_norms(basis) -> float:
    # sum_{i,j} E[phi_i^2 phi_j^2]; the integrand has degree 4r per variable
    nodes, weights = gauss_rule(basis.s, 2 * basis.r + 1)
    phi2 = basis.evaluate(nodes) ** 2
    col = phi2.T @ (weights[:, None] * phi2)
    return float(col.sum())


def frobenius_bound_check(sys_: GalerkinSystem, cap: int = EIG_CAP) -> FrobeniusBound:
    """Evaluate both sides of the Frobenius-norm bound for the mean value preconditioner.

    ``||  ||S(xi) - S(xi_bar)||_F ||_L2`` uses a Gauss rule that is exact for the
    degree-4 polynomial ``||S(xi) - S(xi_bar)||_F^2`` of affine fields.
    """
    _check_cap(sys_.size, cap)
    basis = sys_.basis
    mbar = build_mean_value(sys_)
    lhs_mat = mbar.solve(to_dense(sys_.A, cap * cap).astype(complex))
    lhs_mat[np.diag_indices_from(lhs_mat)] -= 1.0
    lhs = float(np.linalg.norm(lhs_mat, "fro"))

    Sbar = sys_.S(sys_.mean_xi)
    inv = lu_factor(Sbar).solve(np.eye(Sbar.shape[0], dtype=complex))
    inv_norm = float(np.linalg.norm(inv, "fro"))

    nodes, weights = gauss_rule(basis.s, 3)
    sq = 0.0
    for xi, w in zip(nodes, weights):
        sq += w * frobenius_norm(sys_.S(xi) - Sbar) ** 2
    delta_norm = math.sqrt(sq)

    Cm = math.sqrt(basis.size) * math.sqrt(_product_norms(basis))
    roundoff = 100 * np.finfo(float).eps * math.sqrt(basis.size) * inv_norm * frobenius_norm(sys_.A)
    return FrobeniusBound(lhs=lhs, rhs=Cm * inv_norm * delta_norm, Cm=Cm,
                          inv_norm=inv_norm, delta_norm=delta_norm, roundoff=roundoff)


def write_spectrum_csv(path, eigs) -> None:
    """Two-column CSV ``re, im`` with 17 significant digits."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im"])
        for z in np.asarray(eigs, dtype=complex):
            w.writerow([f"{z.real:.17g}", f"{z.imag:.17g}"])
