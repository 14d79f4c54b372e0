import numpy as np
import pytest

from illusion_lab import conductivity as cond
from illusion_lab import dtn
from illusion_lab import fem
from illusion_lab import mesh as msh


@pytest.fixture(scope="module")
def dtn_unit(mesh_coarse, unit_field):
    return dtn.schur_dtn(mesh_coarse, unit_field)


@pytest.fixture(scope="module")
def dtn_case1(mesh_coarse, case1_field):
    return dtn.schur_dtn(mesh_coarse, case1_field)


def test_symmetry_and_conservation(dtn_case1):
    lam = dtn_case1.matrix
    scale = np.abs(lam).max()
    assert np.abs(lam - lam.T).max() <= 1e-12 * scale
    assert np.abs(lam @ np.ones(dtn_case1.n_boundary)).max() <= 1e-9 * scale


def test_positive_semidefinite(dtn_case1):
    eigs = np.linalg.eigvalsh(0.5 * (dtn_case1.matrix + dtn_case1.matrix.T))
    assert eigs.min() >= -1e-9 * np.abs(dtn_case1.matrix).max()


def test_energy_identity(mesh_coarse, case1_field, dtn_case1, rng):
    system = fem.assemble(mesh_coarse, case1_field)
    for _ in range(5):
        f = rng.normal(0.0, 1.0, dtn_case1.n_boundary)
        quad = f @ (dtn_case1.matrix @ f)
        energy = fem.dirichlet_energy(system, fem.solve_dirichlet(system, f))
        assert quad == pytest.approx(energy, rel=1e-9)


def test_constant_datum_zero_flux(dtn_unit):
    f = np.ones(dtn_unit.n_boundary)
    assert np.abs(dtn_unit.matrix @ f).max() <= 1e-9 * np.abs(dtn_unit.matrix).max()
    assert dtn.dtn_eigenvalue_estimate(dtn_unit, 0) == pytest.approx(0.0, abs=1e-9)


def test_homogeneous_eigenvalue_estimates(dtn_unit):
    # continuum eigenvalues are k/2 on the radius-2 disk
    assert dtn.dtn_eigenvalue_estimate(dtn_unit, 3) == pytest.approx(1.5, rel=0.02)
    ests = [dtn.dtn_eigenvalue_estimate(dtn_unit, k) for k in range(1, 9)]
    assert all(b > a for a, b in zip(ests, ests[1:]))


def test_oracle_homogeneous():
    assert dtn.oracle_homogeneous(1, 2.0) == 0.5
    assert dtn.oracle_homogeneous(0, 2.0) == 0.0
    assert dtn.oracle_homogeneous(4, 2.0) == 2.0
    with pytest.raises(ValueError):
        dtn.oracle_homogeneous(1, -1.0)


def test_oracle_layered_limits():
    for k in range(1, 17):
        collapse = dtn.oracle_layered(k, 1.3, 1.3, 0.7, 2.0)
        assert abs(collapse - 1.3 * k / 2.0) <= 1e-9
        tiny = dtn.oracle_layered(k, 1.0, 2.0, 1e-7, 2.0)
        assert abs(tiny - k / 2.0) <= 1e-9
    val = dtn.oracle_layered(1, 1.0, 2.0, 1.0, 2.0)
    assert 0.5 < val < 1.0
    assert val == pytest.approx(13.0 / 22.0, abs=1e-15)


def test_oracle_layered_validation():
    with pytest.raises(ValueError, match="positive integer"):
        dtn.oracle_layered(0, 1.0, 2.0, 1.0, 2.0)
    with pytest.raises(ValueError, match="conductivities"):
        dtn.oracle_layered(1, -1.0, 2.0, 1.0, 2.0)
    with pytest.raises(ValueError, match="r0"):
        dtn.oracle_layered(1, 1.0, 2.0, 3.0, 2.0)


def test_layered_estimates_match_oracle_under_refinement(case1_field):
    mesh = msh.build_disk_mesh(2.0, [1.0], 0.4)
    errors = []
    for _ in range(3):
        d = dtn.schur_dtn(mesh, case1_field)
        errors.append(max(
            abs(dtn.dtn_eigenvalue_estimate(d, k) - dtn.oracle_layered(k, 1.0, 2.0, 1.0, 2.0))
            / dtn.oracle_layered(k, 1.0, 2.0, 1.0, 2.0)
            for k in range(1, 5)))
        mesh = msh.refine(mesh)
    assert errors[0] > errors[1] > errors[2]
    assert errors[-1] < 0.02


def test_distance_zero_for_same_operator(dtn_case1):
    assert dtn.dtn_distance(dtn_case1, dtn_case1, 8) == 0.0


def test_distance_separates_inclusion_from_homogeneous(mesh_coarse, dtn_unit, dtn_case1):
    oracle_gap = max(abs(dtn.oracle_layered(k, 1.0, 2.0, 1.0, 2.0) - k / 2.0)
                     for k in range(1, 9))
    dist = dtn.dtn_distance(dtn_unit, dtn_case1, 8)
    assert dist >= 0.5 * oracle_gap
    # refinement keeps the separation (mesh-stable signal)
    fine = msh.refine(mesh_coarse)
    dist_fine = dtn.dtn_distance(dtn.schur_dtn(fine, cond.homogeneous_field(1.0)),
                                 dtn.schur_dtn(fine, cond.make_case(1, 1.0, 2.0, r_D=1.0)), 8)
    assert dist_fine == pytest.approx(dist, rel=0.1)


def test_distance_pseudometric(mesh_coarse):
    fields = [cond.make_case(1, 1.0, b, r_D=1.0) for b in (1.5, 2.0, 3.0)]
    ds = [dtn.schur_dtn(mesh_coarse, f) for f in fields]
    d01 = dtn.dtn_distance(ds[0], ds[1], 6)
    d10 = dtn.dtn_distance(ds[1], ds[0], 6)
    assert d01 == pytest.approx(d10, rel=1e-12)
    d02 = dtn.dtn_distance(ds[0], ds[2], 6)
    d12 = dtn.dtn_distance(ds[1], ds[2], 6)
    assert d02 <= d01 + d12 + 1e-12


def test_distance_requires_shared_boundary(mesh_coarse, unit_field):
    other = msh.build_disk_mesh(2.0, [1.0], 0.3)
    d1 = dtn.schur_dtn(mesh_coarse, unit_field)
    d2 = dtn.schur_dtn(other, unit_field)
    with pytest.raises(ValueError, match="boundary node set"):
        dtn.dtn_distance(d1, d2, 8)


def test_probe_depth_validation(dtn_unit):
    with pytest.raises(ValueError, match="probe depth"):
        dtn.dtn_distance(dtn_unit, dtn_unit, dtn_unit.n_boundary)
    with pytest.raises(ValueError, match="not resolved"):
        dtn.dtn_eigenvalue_estimate(dtn_unit, dtn_unit.n_boundary)


def test_provenance_ids(mesh_coarse, unit_field, case1_field):
    d1 = dtn.schur_dtn(mesh_coarse, unit_field)
    d2 = dtn.schur_dtn(mesh_coarse, case1_field)
    assert d1.mesh_id == d2.mesh_id
    assert d1.field_id != d2.field_id


def test_csv_exports(tmp_path, dtn_case1):
    path = tmp_path / "dtn.csv"
    dtn.dtn_to_csv(dtn_case1, path)
    lines = path.read_text().splitlines()
    assert len(lines) == dtn_case1.n_boundary + 1
    header = lines[0].split(",")
    assert header[0] == "angle"
    assert len(header) == dtn_case1.n_boundary + 1
    recovered = np.array([float(v) for v in lines[1].split(",")[1:]])
    assert np.array_equal(recovered, dtn_case1.matrix[0])

    eig_path = tmp_path / "eig.csv"
    rows = [(1, 0.5000001, 0.5), (2, 1.01, None)]
    dtn.eigenvalue_table_to_csv(rows, eig_path)
    text = eig_path.read_text().splitlines()
    assert text[0] == "k,estimate,oracle,rel_error"
    assert text[2].endswith(",,")
