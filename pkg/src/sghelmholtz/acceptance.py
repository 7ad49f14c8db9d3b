"""Acceptance checks with pinned configurations and tolerances.

Each ``check_N`` returns a :class:`CheckResult`; :func:`run_all` runs the
requested checks and :func:`format_line` renders the one-line summary.
Wall-clock limits are part of each check.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import precond as pc
from .experiments import ExperimentConfig, decay_slope, degree_magnitudes, make_system, solve_system
from .fdassembly import BC, Grid, assemble_galerkin, assemble_galerkin_then_fd_1d, mesh_rule
from .krylov import direct_solve, gmres, stationary
from .pcbasis import basis_size, build_basis
from .randfield import constant_field_1d, deterministic_field_1d, wedge_field_2d
from .spectra import (
    condition_number2,
    dense_eigs,
    frobenius_bound_check,
    preconditioned_spectrum,
)

__all__ = ["CheckResult", "CHECKS", "run_all", "format_line"]

BETA = 0.5


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0
    limit: float = math.inf
    values: dict = field(default_factory=dict, repr=False)


def _finish(number, title, ok, detail, t0, limit, **values) -> CheckResult:
    elapsed = time.monotonic() - t0
    if elapsed > limit:
        ok = False
        detail += f"; runtime {elapsed:.1f}s over {limit:.0f}s"
    return CheckResult(number, title, bool(ok), detail, elapsed, limit, values)


def format_line(res: CheckResult) -> str:
    status = "PASS" if res.passed else "FAIL"
    return f"[{status}] criterion {res.number:2d} {res.title}: {res.detail} ({res.seconds:.1f}s)"


# -- 1, 2: structure ---------------------------------------------------------

def check_1() -> CheckResult:
    t0 = time.monotonic()
    want = [1, 4, 10, 20, 35, 56, 84, 120, 165]
    got = [build_basis(3, r).size for r in range(9)]
    ok = got == want and [basis_size(3, r) for r in range(9)] == want
    return _finish(1, "basis cardinality", ok, f"sizes {got}", t0, 1.0, sizes=got)


def check_2() -> CheckResult:
    t0 = time.monotonic()
    want_size = [16641, 66564, 166410, 332820]
    want_nnz = [82689, 364038, 993300, 2119728]
    fld = wedge_field_2d(30, 15, 20, 0.1)
    q = mesh_rule(33)
    sizes, nnzs = [], []
    for r in range(4):
        sys_ = assemble_galerkin(Grid(2, q), fld, BC.ABSORBING, build_basis(3, r))
        sizes.append(sys_.size)
        nnzs.append(int(sys_.A.nnz))
        del sys_
    ok = q == 127 and sizes == want_size and nnzs == want_nnz
    return _finish(2, "matrix structure", ok, f"q={q} sizes {sizes} nnz {nnzs}", t0, 60.0,
                   sizes=sizes, nnz=nnzs)


# -- 3, 4: GMRES on the 1D model problem ----------------------------------

def _gmres_system():
    # mesh rule evaluated at the mean wavenumber kbar = 50 -> q = 127
    fld = constant_field_1d(50, 0.1)
    return assemble_galerkin(Grid(1, mesh_rule(50)), fld, BC.ABSORBING, build_basis(1, 3))


@lru_cache(maxsize=1)
def _gmres_runs():
    t0 = time.monotonic()
    sys_ = _gmres_system()
    xd = direct_solve(sys_.A, sys_.b)
    runs = {}
    for kind in ("none", "csl", "meancsl", "mean"):
        p = pc.build(sys_, kind, BETA)
        runs[kind] = gmres(sys_.A, sys_.b, p, "right", 1e-12)
    return sys_, xd, runs, time.monotonic() - t0


def check_3() -> CheckResult:
    t0 = time.monotonic()
    sys_, _, runs, spent = _gmres_runs()
    its = {k: r.iterations for k, r in runs.items()}
    bounds = {"none": (200, 300), "csl": (35, 65), "meancsl": (35, 65), "mean": (15, 35)}
    ok = all(runs[k].converged and lo <= its[k] <= hi for k, (lo, hi) in bounds.items())
    detail = f"N={sys_.size} (q={sys_.grid.q}) iterations " + ", ".join(f"{k}={v}" for k, v in its.items())
    res = _finish(3, "GMRES iteration counts", ok, detail, t0, 120.0, iterations=its)
    res.seconds = max(res.seconds, spent)
    if res.seconds > 120.0:
        res.passed = False
    return res


def check_4() -> CheckResult:
    t0 = time.monotonic()
    _, xd, runs, _ = _gmres_runs()
    scale = np.max(np.abs(xd))
    errs = {k: float(np.max(np.abs(xd - r.solution))) for k, r in runs.items()}
    ok = all(e <= 1e-12 * scale for e in errs.values())
    detail = f"||x||_inf={scale:.3e}, rel. errors " + ", ".join(
        f"{k}={e / scale:.2e}" for k, e in errs.items())
    return _finish(4, "solution agreement", ok, detail, t0, 120.0, errors=errs, scale=scale)


# -- 5, 6, 7: spectra ---------------------------------------------------------

def _spectral_system(bc, theta=0.1, kbar=50):
    fld = constant_field_1d(kbar, theta) if theta else deterministic_field_1d(kbar)
    return assemble_galerkin(Grid(1, mesh_rule(kbar)), fld, bc, build_basis(1, 3))


def check_5() -> CheckResult:
    t0 = time.monotonic()
    sys_ = _spectral_system(BC.ABSORBING)
    rep = preconditioned_spectrum(sys_, pc.build_csl(sys_, BETA))
    ok = rep.max_disk_violation <= 1e-8 and rep.beta_disk_violation <= 1e-8 and rep.size == sys_.size
    detail = (f"N={sys_.size}, max(|l-1/2|-1/2)={rep.max_disk_violation:.2e}, "
              f"max(b/2-|l-(1-ib/2)|)={rep.beta_disk_violation:.2e}")
    return _finish(5, "spectrum inclusion", ok, detail, t0, 300.0)


def check_6() -> CheckResult:
    t0 = time.monotonic()
    sys_ = _spectral_system(BC.DIRICHLET)
    rep = preconditioned_spectrum(sys_, pc.build_csl(sys_, BETA))
    ok = rep.circle_deviation <= 1e-8
    detail = f"N={sys_.size}, max||l-1/2|-1/2|={rep.circle_deviation:.2e}"
    return _finish(6, "spectrum on circle", ok, detail, t0, 300.0)


def _match(eigs, ref) -> float:
    # optimal one-to-one pairing; the largest paired distance
    cost = np.abs(eigs[:, None] - ref[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def check_7() -> CheckResult:
    t0 = time.monotonic()
    sys0 = _spectral_system(BC.ABSORBING, theta=0.0)
    m1 = sys0.nblocks
    p0 = pc.build_mean_csl(sys0, BETA)
    # eigenvalues of one block S(0) (S(0) - i beta D2)^-1, each expected m+1 times
    block = sys0.S().toarray().astype(complex)
    mu = dense_eigs(np.linalg.solve(p0.block.toarray().T, block.T).T)
    ref = np.repeat(mu, m1)
    e0 = preconditioned_spectrum(sys0, p0).eigenvalues
    d0 = _match(e0, ref)
    sys1 = _spectral_system(BC.ABSORBING, theta=0.1)
    e1 = preconditioned_spectrum(sys1, pc.build_csl(sys1, BETA)).eigenvalues
    d1 = _match(e1, ref)
    ok = d0 <= 1e-7 and d1 <= 0.1
    detail = f"theta=0 grouping {d0:.2e}, theta=0.1 cluster distance {d1:.3f}"
    return _finish(7, "eigenvalue clustering", ok, detail, t0, 300.0)


# -- 8: Frobenius bound ------------------------------------------------------

def check_8() -> CheckResult:
    t0 = time.monotonic()
    ok = True
    parts = []
    for q in (15, 31):
        for m in (2, 3):
            ratios = []
            for theta in (0.05, 0.1, 0.2):
                sys_ = assemble_galerkin(Grid(1, q), constant_field_1d(10, theta), BC.ABSORBING,
                                         build_basis(1, m))
                fb = frobenius_bound_check(sys_)
                ok &= fb.holds
                ratios.append(fb.lhs / theta)
            spread = (max(ratios) - min(ratios)) / min(ratios)
            ok &= spread < 0.5
            parts.append(f"q={q},m={m}: lhs/theta spread {spread:.3f}")
    return _finish(8, "Frobenius bound", ok, "; ".join(parts), t0, 60.0)


# -- 9: stationary iteration ---------------------------------------------------

def check_9() -> CheckResult:
    t0 = time.monotonic()
    detail = []
    ok = True
    for theta in (0.1, 0.2):
        sys_ = assemble_galerkin(Grid(2, mesh_rule(33)), wedge_field_2d(30, 15, 20, theta),
                                 BC.ABSORBING, build_basis(3, 2))
        xd = direct_solve(sys_.A, sys_.b)
        rep = stationary(sys_.A, pc.build_mean_value(sys_), sys_.b, maxit=200, reference=xd)
        if theta == 0.1:
            hit = np.nonzero(rep.errors < 1e-6)[0]
            ok &= hit.size > 0 and hit[0] <= 200 and not rep.diverged
            detail.append(f"theta=0.1 error<1e-6 at step {int(hit[0]) if hit.size else None}, "
                          f"final {rep.errors[-1]:.1e}")
        else:
            ok &= rep.diverged
            detail.append(f"theta=0.2 diverged={rep.diverged} after {rep.iterations} steps")
        del sys_
    return _finish(9, "stationary iteration", ok,
                   "wedge (30,15,20), q=127, r=2; " + "; ".join(detail), t0, 600.0)


# -- 10: coefficient decay -------------------------------------------------------

def check_10() -> CheckResult:
    t0 = time.monotonic()
    slopes = {}
    for theta in (0.1, 0.5):
        cfg = ExperimentConfig(dim=1, kbar=100, theta=theta, degree=40, solver="direct")
        sys_ = make_system(cfg)
        x = solve_system(sys_, cfg).solution
        slopes[theta] = decay_slope(np.abs(sys_.blocks(x)).max(axis=1))
    ok1 = slopes[0.1] < 0 and slopes[0.5] > slopes[0.1]
    cfg = ExperimentConfig(dim=2, theta=0.1, degree=8, precond="mean", solver="gmres", tol=1e-8,
                           maxit=200)
    sys_ = make_system(cfg)
    rep = solve_system(sys_, cfg)
    gam = degree_magnitudes(sys_, rep.solution)
    del sys_
    ups = int(np.sum(np.diff(gam) >= 0))
    ok2 = rep.converged and ups <= 1
    detail = (f"1D slopes theta=0.1 {slopes[0.1]:.3f}, theta=0.5 {slopes[0.5]:.3f}; "
              f"2D r=8 gamma non-decreasing steps {ups} (GMRES {rep.iterations} it.)")
    return _finish(10, "coefficient decay", ok1 and ok2, detail, t0, 300.0,
                   slopes=slopes, gamma=gam)


# -- 11: discretization order ----------------------------------------------------------

def check_11() -> CheckResult:
    t0 = time.monotonic()
    fld = constant_field_1d(10, 0.1)
    basis = build_basis(1, 3)
    worst = 0.0
    same = True
    for bc in (BC.DIRICHLET, BC.ABSORBING):
        a = assemble_galerkin(Grid(1, 15), fld, bc, basis).A
        b = assemble_galerkin_then_fd_1d(Grid(1, 15), fld, bc, basis).A
        same &= (a != 0).toarray().tolist() == (b != 0).toarray().tolist()
        worst = max(worst, float(abs(a - b).max()))
    ok = same and worst <= 1e-14
    return _finish(11, "discretization-order equivalence", ok,
                   f"same pattern {same}, max |entry difference| {worst:.2e}", t0, 10.0)


# -- 12: condition numbers ----------------------------------------------------------

def check_12() -> CheckResult:
    t0 = time.monotonic()
    sys_ = assemble_galerkin(Grid(1, mesh_rule(150)), constant_field_1d(150, 0.1), BC.ABSORBING,
                             build_basis(1, 3))
    kap = {
        "A": condition_number2(sys_.A),
        "mean": condition_number2(pc.build_mean_value(sys_).matrix()),
        "csl": condition_number2(pc.build_csl(sys_, BETA).full),
        "meancsl": condition_number2(pc.build_mean_csl(sys_, BETA).matrix()),
    }
    reference = {"A": 2428, "mean": 2220, "csl": 109, "meancsl": 91}
    order = kap["meancsl"] < kap["csl"] and 10 * kap["csl"] <= kap["mean"] <= 1.2 * kap["A"]
    close = all(abs(kap[k] - v) <= 0.05 * v for k, v in reference.items())
    detail = f"N={sys_.size} (q={sys_.grid.q}) " + ", ".join(f"{k}={v:.1f}" for k, v in kap.items())
    return _finish(12, "condition numbers", order and close, detail, t0, 600.0, kappa=kap)


CHECKS = {i: globals()[f"check_{i}"] for i in range(1, 13)}


def run_all(numbers=None) -> list[CheckResult]:
    out = []
    for n in numbers or sorted(CHECKS):
        out.append(CHECKS[n]())
    return out
