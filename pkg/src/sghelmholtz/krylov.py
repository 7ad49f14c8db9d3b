"""Full (unrestarted) GMRES with left/right preconditioning, and the
stationary iteration ``B x+ = b - (A - B) x`` with a block preconditioner."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .precond import Preconditioner
from .sparsecore import lu_factor

__all__ = ["SolveReport", "gmres", "stationary", "direct_solve", "write_history_csv"]


@dataclass
class SolveReport:
    """Outcome of one solve.

    ``residuals[i]`` is the relative residual after ``i`` iterations
    (``residuals[0] == 1`` for a zero start).  For GMRES these are the
    values read off the Givens cascade; ``final_residual`` is recomputed
    explicitly from the returned solution.
    """

    solution: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    iterations: int
    converged: bool
    side: str = "none"
    wall_time: float = 0.0
    precond: str = "none"
    final_residual: float = float("nan")
    errors: np.ndarray | None = field(default=None, repr=False)
    diverged: bool = False


def _givens(a: complex, b: complex) -> tuple[float, complex, complex]:
    # [c s; -conj(s) c] [a; b] = [rho; 0] with real c
    absa = abs(a)
    if b == 0:
        return 1.0, 0.0, a
    if absa == 0:
        return 0.0, 1.0, b
    nrm = math.hypot(absa, abs(b))
    c = absa / nrm
    phase = a / absa
    s = phase * np.conj(b) / nrm
    return c, s, phase * nrm


def gmres(A, b, p: Preconditioner | None = None, side: str = "right",
          tol: float = 1e-12, maxit: int | None = None) -> SolveReport:
    """Full GMRES from a zero initial guess.

    Right preconditioning solves ``A P^-1 y = b``, ``x = P^-1 y`` and
    monitors ``||b - A x|| / ||b||``.  Left preconditioning solves
    ``P^-1 A x = P^-1 b`` and monitors ``||P^-1 (b - A x)|| / ||P^-1 b||``.
    Arnoldi uses modified Gram-Schmidt with a second pass whenever the
    vector norm drops below ``1/sqrt(2)`` of its value.
    """
    t0 = time.monotonic()
    b = np.asarray(b, dtype=complex)
    N = b.shape[0]
    if A.shape != (N, N):
        raise ValueError(f"matrix shape {A.shape} does not match right-hand side length {N}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    maxit = N if maxit is None else min(int(maxit), N)
    if p is None or p.kind.value == "none":
        side, p = "none", None
    if side not in ("left", "right", "none"):
        raise ValueError(f"unknown preconditioning side {side!r}")

    def precon(v):
        return v if p is None else p.solve(v)

    def operator(v):
        if side == "right":
            return A @ precon(v)
        if side == "left":
            return precon(A @ v)
        return A @ v

    def true_residual(x):
        r = b - A @ x
        if side == "left":
            r = precon(r)
        return np.linalg.norm(r) / ref

    r0 = precon(b) if side == "left" else b.copy()
    ref = np.linalg.norm(r0)
    tag = "none" if p is None else p.tag
    if ref == 0:
        return SolveReport(np.zeros(N, dtype=complex), np.array([0.0]), 0, True,
                           side, time.monotonic() - t0, tag, 0.0)

    V = [r0 / ref]
    H = np.zeros((maxit + 1, maxit), dtype=complex)
    cs = np.zeros(maxit)
    sn = np.zeros(maxit, dtype=complex)
    g = np.zeros(maxit + 1, dtype=complex)
    g[0] = ref
    history = [1.0]
    converged = False
    verify = False  # estimate is below tol but the true residual was not
    x = np.zeros(N, dtype=complex)
    k = 0

    def assemble(k):
        y = np.linalg.solve(np.triu(H[:k, :k]), g[:k]) if k else np.zeros(0)
        u = np.zeros(N, dtype=complex)
        for j in range(k):
            u += y[j] * V[j]
        return precon(u) if side == "right" else u

    for j in range(maxit):
        w = operator(V[j])
        before = np.linalg.norm(w)
        for i in range(j + 1):
            h = np.vdot(V[i], w)
            H[i, j] += h
            w -= h * V[i]
        after = np.linalg.norm(w)
        if after < before / math.sqrt(2.0):
            for i in range(j + 1):
                h = np.vdot(V[i], w)
                H[i, j] += h
                w -= h * V[i]
            after = np.linalg.norm(w)
        H[j + 1, j] = after

        for i in range(j):
            hi, hn = H[i, j], H[i + 1, j]
            H[i, j] = cs[i] * hi + sn[i] * hn
            H[i + 1, j] = -np.conj(sn[i]) * hi + cs[i] * hn
        c, s, rho = _givens(H[j, j], H[j + 1, j])
        cs[j], sn[j] = c, s
        H[j, j], H[j + 1, j] = rho, 0.0
        g[j + 1] = -np.conj(s) * g[j]
        g[j] = c * g[j]
        k = j + 1
        est = abs(g[j + 1]) / ref
        history.append(est)

        if rho == 0:
            # singular least-squares problem: A (or the preconditioned operator) is singular
            k = j
            break
        breakdown = after <= 1e-14 * before
        if est <= tol or breakdown or verify:
            x = assemble(k)
            if true_residual(x) <= tol:
                converged = True
                break
            if breakdown:
                break
            verify = True
        if not breakdown:
            V.append(w / after)

    if not converged:
        x = assemble(k)
    final = true_residual(x)
    converged = converged or final <= tol
    return SolveReport(
        solution=x, residuals=np.asarray(history), iterations=k, converged=converged,
        side=side, wall_time=time.monotonic() - t0, precond=tag, final_residual=final,
    )


def direct_solve(A, b) -> np.ndarray:
    """Sparse LU solve; the reference for all iterative paths."""
    return lu_factor(A).solve(np.asarray(b, dtype=complex))


def stationary(A, mean: Preconditioner, b, maxit: int = 200, tol: float = 1e-12,
               x0=None, reference=None, divergence_factor: float = 1e6) -> SolveReport:
    """Iterate ``B x_{i+1} = b - (A - B) x_i`` with ``B`` the given preconditioner.

    The default start is ``x_0 = B^-1 b``.  When ``reference`` is given the
    relative max-norm errors ``||x_i - x_ref||_inf / ||x_ref||_inf`` are
    recorded.  The run stops when the relative residual reaches ``tol``, or
    is flagged diverged once the residual exceeds its running minimum by
    ``divergence_factor``.
    """
    t0 = time.monotonic()
    b = np.asarray(b, dtype=complex)
    bnorm = np.linalg.norm(b)
    x = mean.solve(b) if x0 is None else np.asarray(x0, dtype=complex).copy()
    ref_inf = None if reference is None else np.max(np.abs(reference))

    def err(x):
        return np.max(np.abs(x - reference)) / ref_inf

    r = b - A @ x
    res = [np.linalg.norm(r) / bnorm]
    errs = [] if reference is None else [err(x)]
    best = res[0]
    converged = res[0] <= tol
    diverged = False
    it = 0
    while not converged and it < maxit:
        x = x + mean.solve(r)
        it += 1
        r = b - A @ x
        res.append(np.linalg.norm(r) / bnorm)
        if reference is not None:
            errs.append(err(x))
        best = min(best, res[-1])
        if res[-1] <= tol:
            converged = True
        elif not np.isfinite(res[-1]) or res[-1] > divergence_factor * best:
            diverged = True
            break
    return SolveReport(
        solution=x, residuals=np.asarray(res), iterations=it, converged=converged,
        side="stationary", wall_time=time.monotonic() - t0, precond=mean.tag,
        final_residual=res[-1], errors=None if reference is None else np.asarray(errs),
        diverged=diverged,
    )


def write_history_csv(path, values, header=("iteration", "relative_residual")) -> None:
    """Two-column CSV with 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i, v in enumerate(values):
            w.writerow([i, f"{float(v):.17g}"])
