"""Experiment drivers: solves, parameter sweeps, coefficient decay and moments.

Every driver writes into ``<out>/<experiment>/``; CSV files have a header
row and 17 significant digits.
"""

from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import precond as pc
from .fdassembly import BC, GalerkinSystem, Grid, assemble_galerkin, mesh_rule
from .krylov import SolveReport, direct_solve, gmres, stationary, write_history_csv
from .pcbasis import build_basis
from .randfield import (
    RandomField,
    constant_field_1d,
    deterministic_field_1d,
    max_wavenumber,
    mean_max_wavenumber,
    wedge_field_2d,
)
from .sparsecore import write_mtx

__all__ = [
    "ExperimentConfig",
    "make_field",
    "make_system",
    "solve_system",
    "run_solve",
    "run_sweep",
    "run_decay",
    "run_stats",
    "coefficient_norms",
    "degree_magnitudes",
    "decay_slope",
    "moments",
]

SOLVERS = ("direct", "gmres", "stationary")
MESH_MODES = ("mean", "max")


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment.

    ``degree`` is the total polynomial degree ``r`` (``m = r`` in 1D).
    ``tol``/``maxit`` default to ``1e-12``/system size in 1D and
    ``1e-8``/200 in 2D.  ``q`` overrides the mesh rule; otherwise the rule is
    evaluated at the largest mean wavenumber (``mesh="mean"``) or at the
    largest wavenumber over all outcomes (``mesh="max"``).
    """

    experiment: str = "solve"
    dim: int = 1
    kbar: float = 50.0
    k1: float = 30.0
    k2: float = 15.0
    k3: float = 20.0
    theta: float = 0.1
    degree: int = 3
    beta: float = pc.DEFAULT_BETA
    bc: str = "absorbing"
    precond: str = "mean"
    side: str = "right"
    solver: str = "gmres"
    tol: float | None = None
    maxit: int | None = None
    q: int | None = None
    mesh: str = "mean"
    out: str = "results"
    write_matrix: bool = False

    def validate(self) -> "ExperimentConfig":
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.dim == 1:
            if not self.kbar > 0:
                raise ValueError(f"kbar must be positive, got {self.kbar}")
            if not 0 <= self.theta < 1:
                raise ValueError(f"theta must lie in [0, 1) in 1D, got {self.theta}")
        else:
            if min(self.k1, self.k2, self.k3) <= 0:
                raise ValueError("k1, k2, k3 must be positive")
            if not abs(self.theta) < 1:
                raise ValueError(f"|theta| must be below 1, got {self.theta}")
        if self.degree < 0:
            raise ValueError(f"degree must be nonnegative, got {self.degree}")
        BC(self.bc)
        pc.Kind(self.precond)
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be left or right, got {self.side!r}")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.maxit is not None and self.maxit < 1:
            raise ValueError("maxit must be at least 1")
        if self.q is not None and self.q < 1:
            raise ValueError("q must be at least 1")
        if self.mesh not in MESH_MODES:
            raise ValueError(f"mesh must be one of {MESH_MODES}, got {self.mesh!r}")
        return self

    @property
    def directory(self) -> Path:
        return Path(self.out) / self.experiment


def make_field(cfg: ExperimentConfig) -> RandomField:
    if cfg.dim == 1:
        if cfg.theta == 0:
            return deterministic_field_1d(cfg.kbar)
        return constant_field_1d(cfg.kbar, cfg.theta)
    return wedge_field_2d(cfg.k1, cfg.k2, cfg.k3, cfg.theta)


def grid_for(cfg: ExperimentConfig, fld: RandomField) -> Grid:
    if cfg.q is not None:
        return Grid(cfg.dim, cfg.q)
    maxk = mean_max_wavenumber(fld) if cfg.mesh == "mean" else max_wavenumber(fld)
    return Grid(cfg.dim, mesh_rule(maxk))


def make_system(cfg: ExperimentConfig) -> GalerkinSystem:
    cfg.validate()
    fld = make_field(cfg)
    return assemble_galerkin(grid_for(cfg, fld), fld, BC(cfg.bc), build_basis(fld.s, cfg.degree))


def _defaults(cfg: ExperimentConfig, size: int) -> tuple[float, int]:
    if cfg.dim == 1:
        return (cfg.tol or 1e-12, cfg.maxit or size)
    return (cfg.tol or 1e-8, cfg.maxit or 200)


def solve_system(sys_: GalerkinSystem, cfg: ExperimentConfig, reference=None) -> SolveReport:
    """Solve ``A x = b`` with the solver and preconditioner named in ``cfg``."""
    tol, maxit = _defaults(cfg, sys_.size)
    t0 = time.monotonic()
    if cfg.solver == "direct":
        x = direct_solve(sys_.A, sys_.b)
        r = np.linalg.norm(sys_.b - sys_.A @ x) / np.linalg.norm(sys_.b)
        return SolveReport(solution=x, residuals=np.array([r]), iterations=0, converged=True,
                           side="none", wall_time=time.monotonic() - t0, precond="none",
                           final_residual=r)
    if cfg.solver == "stationary":
        rep = stationary(sys_.A, pc.build_mean_value(sys_), sys_.b, maxit=maxit, tol=tol,
                         reference=reference)
    else:
        p = pc.build(sys_, cfg.precond, cfg.beta)
        rep = gmres(sys_.A, sys_.b, p, cfg.side, tol, maxit)
    # include the factorization in the reported time
    rep.wall_time = time.monotonic() - t0
    return rep


def _write_rows(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _summary(path: Path, items: dict) -> None:
    lines = []
    for k, v in items.items():
        lines.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
    path.write_text("\n".join(lines) + "\n")


def run_solve(cfg: ExperimentConfig) -> SolveReport:
    """Assemble, solve and write ``summary.txt``, ``residuals.csv`` and ``solution.mtx``."""
    cfg.validate()
    outdir = cfg.directory
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.monotonic()
    sys_ = make_system(cfg)
    t_asm = time.monotonic() - t0
    reference = direct_solve(sys_.A, sys_.b) if cfg.solver == "stationary" else None
    rep = solve_system(sys_, cfg, reference)

    write_history_csv(outdir / "residuals.csv", rep.residuals)
    if rep.errors is not None:
        write_history_csv(outdir / "errors.csv", rep.errors, ("iteration", "relative_error"))
    write_mtx(outdir / "solution.mtx", rep.solution)
    if cfg.write_matrix:
        write_mtx(outdir / "matrix.mtx", sys_.A)
    items = {k: v for k, v in asdict(cfg).items() if v is not None}
    items.update(
        q=sys_.grid.q, size=sys_.size, nnz=sys_.A.nnz, nbasis=sys_.nblocks,
        assembly_time=t_asm, solve_time=rep.wall_time, iterations=rep.iterations,
        converged=rep.converged, diverged=rep.diverged, precond_tag=rep.precond,
        final_residual=float(rep.final_residual),
    )
    _summary(outdir / "summary.txt", items)
    return rep


def run_sweep(cfg: ExperimentConfig, kbars=None, degrees=None,
              preconds=("none", "csl", "meancsl", "mean"), solve: bool = True) -> list[dict]:
    """Sweep over mean wavenumbers (1D) or polynomial degrees; writes ``sweep.csv``.

    Each row records n.basis, the size and nnz of ``A``, the assembly time and,
    when ``solve`` is set, GMRES iterations and times per preconditioner.
    """
    cfg.validate()
    if (kbars is None) == (degrees is None):
        raise ValueError("give exactly one of kbars or degrees")
    values = list(kbars if kbars is not None else degrees)
    key = "kbar" if kbars is not None else "degree"
    rows = []
    for v in values:
        c = replace(cfg, **{key: float(v) if key == "kbar" else int(v)})
        t0 = time.monotonic()
        sys_ = make_system(c)
        row = {key: v, "q": sys_.grid.q, "nbasis": sys_.nblocks, "size": sys_.size,
               "nnz": sys_.A.nnz, "assembly_time": time.monotonic() - t0}
        if solve:
            for kind in preconds:
                rep = solve_system(sys_, replace(c, solver="gmres", precond=kind))
                row[f"it_{kind}"] = rep.iterations
                row[f"time_{kind}"] = rep.wall_time
        rows.append(row)
        del sys_
    outdir = cfg.directory
    outdir.mkdir(parents=True, exist_ok=True)
    header = list(rows[0]) if rows else [key]
    _write_rows(outdir / "sweep.csv", header, [[r[h] for h in header] for r in rows])
    return rows


def coefficient_norms(sys_: GalerkinSystem, x) -> np.ndarray:
    """``||V_i||_inf`` for every PC coefficient vector."""
    return np.abs(sys_.blocks(x)).max(axis=1)


def degree_magnitudes(sys_: GalerkinSystem, x) -> np.ndarray:
    """``gamma_j = max{||V_i||_inf : deg phi_i = j}`` for ``j = 0..r``."""
    norms = coefficient_norms(sys_, x)
    deg = sys_.basis.degrees
    return np.array([norms[deg == j].max() for j in range(sys_.basis.r + 1)])


def decay_slope(values) -> float:
    """Least-squares slope of ``log(values)`` against the index."""
    v = np.asarray(values, dtype=float)
    return float(np.polyfit(np.arange(v.size), np.log(v), 1)[0])


def run_decay(cfg: ExperimentConfig, differences: bool = False) -> dict:
    """Coefficient magnitudes of the solution; writes ``decay.csv``.

    1D: ``||v_i||_inf`` per coefficient.  2D: ``gamma_j`` per total degree.
    With ``differences`` the solutions for degrees ``0..r`` are computed and
    ``||x_{r-1} - x_r||_2`` (the shorter vector padded with zeros) is written to
    ``differences.csv``.
    """
    cfg.validate()
    outdir = cfg.directory
    outdir.mkdir(parents=True, exist_ok=True)
    sys_ = make_system(cfg)
    x = solve_system(sys_, cfg).solution
    if cfg.dim == 1:
        mags = coefficient_norms(sys_, x)
        label = "index"
    else:
        mags = degree_magnitudes(sys_, x)
        label = "degree"
    _write_rows(outdir / "decay.csv", [label, "magnitude"], [[i, float(v)] for i, v in enumerate(mags)])
    result = {"magnitudes": mags, "slope": decay_slope(mags)}
    del sys_
    if differences:
        diffs = []
        prev = None
        for r in range(cfg.degree + 1):
            xr = solve_system(make_system(replace(cfg, degree=r)), cfg).solution
            if prev is not None:
                pad = np.zeros_like(xr)
                pad[: prev.size] = prev
                diffs.append((r, float(np.linalg.norm(pad - xr))))
            prev = xr
        _write_rows(outdir / "differences.csv", ["degree", "difference"], diffs)
        result["differences"] = diffs
    return result


def moments(sys_: GalerkinSystem, x) -> dict[str, np.ndarray]:
    """Mean and variance of the real and imaginary parts on the spatial grid.

    ``phi_0 = 1`` and the basis is orthonormal, so the mean is ``V_0`` and the
    variance is ``sum_{i >= 1} V_i^2`` (taken separately for each part).
    """
    V = sys_.blocks(x)
    side = sys_.grid.axis(sys_.bc).size
    shape = (side,) * sys_.grid.dim
    # 2D grids: x index fastest, so rows are y and columns are x
    out = {
        "mean_re": V[0].real.reshape(shape),
        "mean_im": V[0].imag.reshape(shape),
        "var_re": (V[1:].real ** 2).sum(axis=0).reshape(shape),
        "var_im": (V[1:].imag ** 2).sum(axis=0).reshape(shape),
    }
    return out


def run_stats(cfg: ExperimentConfig) -> dict[str, np.ndarray]:
    """Write mean and variance grids (``mean_re.csv`` ...) of the Galerkin solution."""
    cfg.validate()
    outdir = cfg.directory
    outdir.mkdir(parents=True, exist_ok=True)
    sys_ = make_system(cfg)
    x = solve_system(sys_, cfg).solution
    grids = moments(sys_, x)
    for name, g in grids.items():
        g2 = np.atleast_2d(g)
        _write_rows(outdir / f"{name}.csv", [f"c{j}" for j in range(g2.shape[1])],
                    [[float(v) for v in row] for row in g2])
    return grids
