import math

import mpmath
import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from sghelmholtz import precond as pc
from sghelmholtz.spectra import (
    arc_violation,
    condition_number2,
    dense_eigs,
    eig_backward_error,
    frobenius_bound_check,
    mobius,
    preconditioned_matrix,
    preconditioned_spectrum,
    write_spectrum_csv,
)


def charpoly_roots(M):
    """Eigenvalues as roots of the characteristic polynomial (Faddeev-LeVerrier, 50 digits)."""
    with mpmath.workdps(50):
        n = M.shape[0]
        A = mpmath.matrix([[mpmath.mpc(complex(v)) for v in row] for row in M])
        coeffs = [mpmath.mpc(1)]
        Mk = mpmath.zeros(n, n)
        I = mpmath.eye(n)
        for k in range(1, n + 1):
            Mk = A * Mk + coeffs[-1] * I
            c = -sum((A * Mk)[i, i] for i in range(n)) / k
            coeffs.append(c)
        roots = mpmath.polyroots(coeffs, maxsteps=200, extraprec=200)
        return np.array([complex(r) for r in roots])


def max_pair_distance(a, b):
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return cost[r, c].max()


def test_trivial_spectra():
    assert sorted(dense_eigs(np.diag([1.0, 2.0, 3.0])).real) == pytest.approx([1, 2, 3])
    rot = dense_eigs(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert max_pair_distance(rot, np.array([1j, -1j])) < 1e-15


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_matrix_against_characteristic_polynomial(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    assert max_pair_distance(dense_eigs(M), charpoly_roots(M)) < 1e-8


def test_cap_and_shape():
    with pytest.raises(MemoryError):
        dense_eigs(np.eye(10), cap=5)
    with pytest.raises(ValueError):
        dense_eigs(np.ones((2, 3)))


def test_backward_error_of_sampled_pairs(small_1d):
    X = preconditioned_matrix(small_1d.A, pc.build_csl(small_1d, 0.5))
    eigs = dense_eigs(X)
    for lam in eigs[:: max(1, eigs.size // 5)]:
        assert eig_backward_error(X, lam) <= 1e-8


def test_mobius_values():
    assert mobius(1.0, 0.5) == 0
    assert mobius(0.0, 0.5) == pytest.approx(0.8 - 0.4j, abs=1e-15)
    for beta in (0.5, 1.0, -2.0, 3.7):
        assert abs(mobius(0.0, beta) - 0.5) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ZeroDivisionError):
        mobius(1 + 0.5j, 0.5)


def test_mobius_maps_real_axis_to_circle():
    z = np.linspace(-50, 50, 101)
    assert np.max(np.abs(np.abs(mobius(z, 0.5) - 0.5) - 0.5)) < 1e-14


def test_condition_numbers():
    assert condition_number2(np.eye(4)) == pytest.approx(1.0)
    assert condition_number2(np.diag([10.0, 0.1])) == pytest.approx(100.0)
    assert condition_number2(np.diag([1.0, 0.0])) == math.inf


def test_inclusion_for_absorbing_conditions(small_1d):
    rep = preconditioned_spectrum(small_1d, pc.build_csl(small_1d, 0.5))
    assert rep.size == small_1d.size
    assert rep.max_disk_violation <= 1e-8
    assert rep.beta_disk_violation <= 1e-8


def test_circle_and_arc_for_dirichlet_conditions(small_dirichlet):
    rep = preconditioned_spectrum(small_dirichlet, pc.build_csl(small_dirichlet, 0.5))
    assert rep.circle_deviation <= 1e-8
    assert arc_violation(rep.eigenvalues, 0.5) <= 1e-8


def test_arc_violation_detects_points_off_the_arc():
    assert arc_violation([1.0, 0.0, 0.5 + 0.5j, mobius(0.0, 0.5)], 0.5) < 1e-12
    # between mu(0) and 1 on the short side
    assert arc_violation([0.5 + 0.5 * np.exp(-0.3j)], 0.5) > 0.1


def test_left_and_right_spectra_agree(small_1d):
    p = pc.build_mean_csl(small_1d, 0.5)
    right = dense_eigs(preconditioned_matrix(small_1d.A, p, "right"))
    left = dense_eigs(preconditioned_matrix(small_1d.A, p, "left"))
    assert max_pair_distance(right, left) < 1e-7


def test_right_preconditioned_matrix_matches_dense_product(small_1d):
    p = pc.build_csl(small_1d, 0.5)
    ref = small_1d.A.toarray() @ np.linalg.inv(p.matrix().toarray())
    assert np.max(np.abs(preconditioned_matrix(small_1d.A, p) - ref)) < 1e-10


def test_multiplicity_for_deterministic_wavenumber(deterministic_1d):
    p = pc.build_mean_csl(deterministic_1d, 0.5)
    eigs = preconditioned_spectrum(deterministic_1d, p).eigenvalues
    mu = dense_eigs(deterministic_1d.S().toarray() @ np.linalg.inv(p.block.toarray()))
    assert max_pair_distance(eigs, np.repeat(mu, deterministic_1d.nblocks)) < 1e-7


def test_frobenius_bound(small_1d, deterministic_1d):
    fb = frobenius_bound_check(small_1d)
    assert fb.holds and fb.lhs < fb.rhs
    assert fb.Cm > math.sqrt(small_1d.nblocks)
    zero = frobenius_bound_check(deterministic_1d)
    assert zero.lhs < 1e-12 and zero.rhs == 0 and zero.holds


def test_product_constant_matches_mpmath(small_1d):
    # C_m^2 / (m + 1) = sum_ij E[phi_i^2 phi_j^2], computed here by adaptive quadrature
    def p(n, x):
        return mpmath.sqrt(2 * n + 1) * mpmath.legendre(n, x)

    total = sum(mpmath.quad(lambda x: p(i, x) ** 2 * p(j, x) ** 2, [-1, 1]) / 2
                for i in range(4) for j in range(4))
    fb = frobenius_bound_check(small_1d)
    assert fb.Cm ** 2 / 4 == pytest.approx(float(total), rel=1e-13)


def test_spectrum_csv(tmp_path):
    write_spectrum_csv(tmp_path / "s.csv", [1 + 2j, 1 / 3])
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "re,im"
    assert complex(float(lines[2].split(",")[0]), 0) == 1 / 3
