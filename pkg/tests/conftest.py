import numpy as np
import pytest

from illusion_lab import conductivity as cond
from illusion_lab import mesh as msh


@pytest.fixture(scope="session")
def mesh_coarse():
    """Two-region disk, the default geometry at a quick resolution."""
    return msh.build_disk_mesh(2.0, [1.0], 0.4)


@pytest.fixture(scope="session")
def mesh_coarse_refined(mesh_coarse):
    return msh.refine(mesh_coarse)


@pytest.fixture(scope="session")
def mesh_two_interfaces():
    """Conforms to both the inclusion circle and the eps=0.5 image circle."""
    return msh.build_disk_mesh(2.0, [0.5, 1.0], 0.25)


@pytest.fixture(scope="session")
def unit_field():
    return cond.homogeneous_field(1.0)


@pytest.fixture(scope="session")
def case1_field():
    return cond.make_case(1, 1.0, 2.0, r_D=1.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260811)
