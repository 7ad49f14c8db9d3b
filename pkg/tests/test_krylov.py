import csv

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from sghelmholtz import precond as pc
from sghelmholtz.krylov import direct_solve, gmres, stationary, write_history_csv
from sghelmholtz.sparsecore import SingularMatrixError, lu_factor


def test_identity_converges_in_one_step():
    A = sp.eye_array(5, format="csr")
    rep = gmres(A, np.arange(1, 6), tol=1e-12)
    assert rep.iterations == 1 and rep.converged
    assert rep.final_residual <= 1e-15
    assert np.allclose(rep.solution, np.arange(1, 6), rtol=1e-15, atol=0)


def test_small_dense_system_against_direct_solve():
    rng = np.random.default_rng(4)
    M = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    b = rng.standard_normal(4)
    rep = gmres(sp.csr_array(M), b, tol=1e-14)
    assert np.max(np.abs(rep.solution - np.linalg.solve(M, b))) < 1e-10
    assert rep.iterations <= 4


def test_zero_rhs():
    rep = gmres(sp.eye_array(3, format="csr"), np.zeros(3))
    assert rep.converged and rep.iterations == 0


def test_argument_checks():
    A = sp.eye_array(3, format="csr")
    with pytest.raises(ValueError):
        gmres(A, np.ones(4))
    with pytest.raises(ValueError):
        gmres(A, np.ones(3), tol=0)


def test_maxit_reached_reports_not_converged(model_1d):
    rep = gmres(model_1d.A, model_1d.b, None, tol=1e-12, maxit=10)
    assert not rep.converged and rep.iterations == 10
    assert rep.final_residual > 1e-12


@pytest.mark.parametrize("kind", ["none", "csl", "meancsl", "mean"])
@pytest.mark.parametrize("side", ["left", "right"])
def test_history_monotone_and_solution_accurate(model_1d, kind, side):
    p = pc.build(model_1d, kind, 0.5)
    rep = gmres(model_1d.A, model_1d.b, p, side, 1e-12)
    assert rep.converged
    h = rep.residuals
    assert h[0] == 1.0
    assert np.all(np.diff(h) <= 1e-15)
    assert rep.final_residual <= 1e-12
    x = direct_solve(model_1d.A, model_1d.b)
    assert np.max(np.abs(x - rep.solution)) <= 2e-12 * np.max(np.abs(x))


def test_unpreconditioned_iteration_count_matches_scipy(model_1d):
    # independent Krylov implementation: same minimal-residual iterates
    ours = gmres(model_1d.A, model_1d.b, None, tol=1e-12)
    count = [0]

    def cb(_):
        count[0] += 1

    sla.gmres(model_1d.A, model_1d.b, rtol=1e-12, atol=0, restart=model_1d.size, maxiter=1,
              callback=cb, callback_type="pr_norm")
    assert abs(ours.iterations - count[0]) <= 1


def test_none_preconditioner_history_is_identical(model_1d):
    a = gmres(model_1d.A, model_1d.b, None, "right", 1e-10, 50)
    b = gmres(model_1d.A, model_1d.b, pc.identity(model_1d.size), "right", 1e-10, 50)
    assert np.array_equal(a.residuals, b.residuals)


def test_exact_preconditioner_one_step(deterministic_1d):
    p = pc.build_mean_value(deterministic_1d)
    for side in ("left", "right"):
        rep = gmres(deterministic_1d.A, deterministic_1d.b, p, side, 1e-12)
        assert rep.iterations == 1 and rep.converged


def test_left_residual_is_preconditioned(small_1d):
    p = pc.build_csl(small_1d, 0.5)
    rep = gmres(small_1d.A, small_1d.b, p, "left", 1e-8)
    r = p.solve(small_1d.b - small_1d.A @ rep.solution)
    assert rep.final_residual == pytest.approx(np.linalg.norm(r) / np.linalg.norm(p.solve(small_1d.b)))


def test_direct_solve():
    b = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(direct_solve(sp.eye_array(3, format="csr"), b), b)
    with pytest.raises(SingularMatrixError):
        direct_solve(sp.csr_array(np.zeros((3, 3))), b)


def test_stationary_exact_preconditioner(deterministic_1d):
    rep = stationary(deterministic_1d.A, pc.build_mean_value(deterministic_1d), deterministic_1d.b)
    assert rep.converged and rep.iterations <= 1


def test_stationary_contraction_rate(small_1d):
    A = small_1d.A.toarray()
    p = pc.build_mean_value(small_1d)
    G = np.eye(A.shape[0]) - p.solve(A)
    rho = np.max(np.abs(np.linalg.eigvals(G)))
    assert rho < 1
    x = direct_solve(small_1d.A, small_1d.b)
    rep = stationary(small_1d.A, p, small_1d.b, maxit=200, tol=1e-300, reference=x)
    e = rep.errors
    # asymptotic error reduction per step over the last steps before round-off
    good = np.nonzero(e > 1e-11)[0]
    tail = e[good[-11:]]
    rate = (tail[-1] / tail[0]) ** (1 / (len(tail) - 1))
    assert rate == pytest.approx(rho, rel=0.2)


def test_stationary_divergence_flag():
    A = sp.csr_array(np.diag([1.0, 5.0]))
    B = pc.Preconditioner(kind=pc.Kind.CSL, factor=lu_factor(sp.csr_array(np.eye(2))), size=2)
    rep = stationary(A, B, np.ones(2), maxit=100)
    assert rep.diverged and not rep.converged


def test_history_csv(tmp_path):
    write_history_csv(tmp_path / "h.csv", [1.0, 0.1, 1 / 3])
    rows = list(csv.reader(open(tmp_path / "h.csv")))
    assert rows[0] == ["iteration", "relative_residual"]
    assert float(rows[3][1]) == 1 / 3
