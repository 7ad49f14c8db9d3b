import pytest

from sghelmholtz.fdassembly import BC, Grid, assemble_galerkin, mesh_rule
from sghelmholtz.pcbasis import build_basis
from sghelmholtz.randfield import constant_field_1d, deterministic_field_1d


@pytest.fixture(scope="session")
def model_1d():
    """kbar = 50, theta = 0.1, m = 3 on the mesh of the mean wavenumber (q = 127)."""
    return assemble_galerkin(Grid(1, mesh_rule(50)), constant_field_1d(50, 0.1), BC.ABSORBING,
                             build_basis(1, 3))


@pytest.fixture(scope="session")
def small_1d():
    return assemble_galerkin(Grid(1, 15), constant_field_1d(10, 0.1), BC.ABSORBING, build_basis(1, 3))


@pytest.fixture(scope="session")
def small_dirichlet():
    return assemble_galerkin(Grid(1, 15), constant_field_1d(10, 0.1), BC.DIRICHLET, build_basis(1, 3))


@pytest.fixture(scope="session")
def deterministic_1d():
    return assemble_galerkin(Grid(1, 31), deterministic_field_1d(20), BC.ABSORBING, build_basis(1, 3))
