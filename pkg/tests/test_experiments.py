import numpy as np
import pytest

from sghelmholtz.cli import main
from sghelmholtz.experiments import (
    ExperimentConfig,
    decay_slope,
    degree_magnitudes,
    make_system,
    moments,
    run_decay,
    run_solve,
    run_stats,
    run_sweep,
    solve_system,
)
from sghelmholtz.krylov import direct_solve
from sghelmholtz.sparsecore import read_mtx


@pytest.mark.parametrize("bad", [
    dict(dim=3), dict(kbar=-1), dict(theta=1.2), dict(degree=-1), dict(bc="neumann"),
    dict(precond="ilu"), dict(side="both"), dict(solver="cg"), dict(tol=0), dict(maxit=0),
    dict(q=0), dict(mesh="fine"), dict(dim=2, theta=1.0), dict(dim=2, k2=0),
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        ExperimentConfig(**bad).validate()


def test_mesh_modes():
    assert make_system(ExperimentConfig(kbar=50, theta=0.1)).grid.q == 127
    assert make_system(ExperimentConfig(kbar=50, theta=0.1, mesh="max")).grid.q == 255
    assert make_system(ExperimentConfig(kbar=50, q=15)).grid.q == 15
    assert make_system(ExperimentConfig(dim=2, degree=0, q=7)).size == 81


def test_run_solve_mean_value(tmp_path):
    cfg = ExperimentConfig(out=str(tmp_path), precond="mean", theta=0.1, degree=3, write_matrix=True)
    rep = run_solve(cfg)
    assert rep.converged and 15 <= rep.iterations <= 35
    d = tmp_path / "solve"
    for name in ("summary.txt", "residuals.csv", "solution.mtx", "matrix.mtx"):
        assert (d / name).exists()
    assert np.array_equal(read_mtx(d / "solution.mtx").ravel(), rep.solution)
    summary = (d / "summary.txt").read_text()
    assert "iterations = %d" % rep.iterations in summary and "q = 127" in summary


def test_run_solve_is_reproducible(tmp_path):
    a = ExperimentConfig(out=str(tmp_path / "a"), precond="csl")
    b = ExperimentConfig(out=str(tmp_path / "b"), precond="csl")
    run_solve(a)
    run_solve(b)
    for name in ("residuals.csv", "solution.mtx"):
        assert (tmp_path / "a/solve" / name).read_bytes() == (tmp_path / "b/solve" / name).read_bytes()


def test_run_solve_stationary(tmp_path):
    cfg = ExperimentConfig(out=str(tmp_path), solver="stationary", kbar=10, theta=0.1, tol=1e-10)
    rep = run_solve(cfg)
    assert rep.converged
    assert (tmp_path / "solve" / "errors.csv").exists()


def test_sweep_over_degrees(tmp_path):
    cfg = ExperimentConfig(dim=2, out=str(tmp_path), experiment="table")
    rows = run_sweep(cfg, degrees=[0, 1], solve=False)
    assert [r["nbasis"] for r in rows] == [1, 4]
    assert [r["size"] for r in rows] == [16641, 66564]
    assert rows[1]["nnz"] == 364038
    assert (tmp_path / "table" / "sweep.csv").read_text().startswith("degree,q,nbasis,size,nnz")
    with pytest.raises(ValueError):
        run_sweep(cfg)


def test_sweep_over_wavenumbers(tmp_path):
    rows = run_sweep(ExperimentConfig(out=str(tmp_path)), kbars=[10, 20])
    assert [r["q"] for r in rows] == [31, 63]
    for r in rows:
        assert r["it_mean"] < r["it_csl"] < r["it_none"]


def test_decay_1d(tmp_path):
    res = run_decay(ExperimentConfig(out=str(tmp_path), kbar=20, theta=0.1, degree=10, solver="direct"))
    assert res["slope"] < 0
    assert len(res["magnitudes"]) == 11


def test_decay_2d_differences(tmp_path):
    cfg = ExperimentConfig(dim=2, k1=8, k2=4, k3=6, degree=2, out=str(tmp_path), solver="direct")
    res = run_decay(cfg, differences=True)
    sys_ = make_system(cfg)
    x = direct_solve(sys_.A, sys_.b)
    gam = degree_magnitudes(sys_, x)
    assert gam[0] == np.abs(sys_.blocks(x)[0]).max()
    assert np.allclose(res["magnitudes"], gam)
    diffs = [d for _, d in res["differences"]]
    assert len(diffs) == 2 and diffs[1] < diffs[0]


def test_decay_slope():
    assert decay_slope(np.exp(-0.5 * np.arange(6))) == pytest.approx(-0.5)


def test_stats_variance_and_deterministic_limit(tmp_path):
    cfg = ExperimentConfig(dim=2, k1=8, k2=4, k3=6, degree=1, theta=1e-6, q=7, out=str(tmp_path), experiment="stats",
                           solver="direct")
    grids = run_stats(cfg)
    assert grids["mean_re"].shape == (9, 9)
    assert np.all(grids["var_re"] >= 0) and np.all(grids["var_im"] >= 0)
    assert grids["var_re"].max() < 1e-10
    # the mean tends to the deterministic solution at xi = 0
    sys_ = make_system(cfg)
    u0 = direct_solve(sys_.S(), sys_.b[: sys_.n])
    assert np.max(np.abs(grids["mean_re"].ravel() - u0.real)) <= 1e-8
    assert np.max(np.abs(grids["mean_im"].ravel() - u0.imag)) <= 1e-8
    assert (tmp_path / "stats" / "var_im.csv").exists()


def test_moments_of_a_known_vector():
    sys_ = make_system(ExperimentConfig(kbar=10, q=3, degree=2))
    V = np.array([[1, 2, 3, 4, 5], [1, 0, 0, 0, 1j], [2, 0, 0, 0, 0]], dtype=complex).ravel()
    m = moments(sys_, V)
    assert m["mean_re"].tolist() == [1, 2, 3, 4, 5]
    assert m["var_re"].tolist() == [5, 0, 0, 0, 0]
    assert m["var_im"].tolist() == [0, 0, 0, 0, 1]


def test_gmres_defaults_by_dimension():
    sys_ = make_system(ExperimentConfig(kbar=20))
    rep = solve_system(sys_, ExperimentConfig(kbar=20, precond="none"))
    assert rep.final_residual <= 1e-12


def test_cli_commands(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["solve", "--kbar", "20", "--precond", "csl", "--out", out]) == 0
    assert "converged=True" in capsys.readouterr().out
    assert main(["spectrum", "--kbar", "10", "--precond", "csl", "--out", out]) == 0
    assert (tmp_path / "spectrum" / "spectrum.csv").exists()
    assert main(["sweep", "--kbars", "10", "--out", out]) == 0
    assert main(["decay", "--kbar", "10", "--degree", "6", "--solver", "direct", "--out", out]) == 0
    assert main(["stats", "--dim", "2", "--q", "7", "--degree", "1", "--out", out]) == 0
    assert main(["solve", "--theta", "1.5", "--out", out]) == 1
    assert main(["accept", "--criteria", "1"]) == 0
    assert "[PASS] criterion  1" in capsys.readouterr().out
