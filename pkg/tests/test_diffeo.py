import numpy as np
import pytest

from illusion_lab import conductivity as cond
from illusion_lab import diffeo as dif


def random_disk_points(rng, n, R=2.0, r_min=0.0):
    r = rng.uniform(r_min, R, n)
    th = rng.uniform(0.0, 2 * np.pi, n)
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


def away_from_breakpoints(diffeo, pts, margin=1e-6):
    r = np.hypot(pts[:, 0], pts[:, 1])
    interior = np.asarray(diffeo.profile.interior_breakpoints())
    if interior.size == 0:
        return pts
    keep = np.abs(r[:, None] - interior[None, :]).min(axis=1) > margin
    return pts[keep]


def test_cloak_map_values():
    f = dif.make_cloak_map(0.5, 1.0, 2.0)
    assert np.allclose(dif.apply(f, [1.0, 0.0]), [0.5, 0.0], atol=1e-15)
    assert np.allclose(dif.apply(f, [1.5, 0.0]), [1.25, 0.0], atol=1e-15)
    assert np.allclose(dif.inverse_apply(f, [0.5, 0.0]), [1.0, 0.0], atol=1e-15)


@pytest.mark.parametrize("eps", [0.1, 0.25, 0.5, 0.9])
def test_cloak_fixes_outer_boundary(eps):
    f = dif.make_cloak_map(eps, 1.0, 2.0)
    for th in np.linspace(0.0, 2 * np.pi, 7):
        x = [2.0 * np.cos(th), 2.0 * np.sin(th)]
        assert np.allclose(dif.apply(f, x), x, atol=1e-12)


def test_interior_diffeo_profile():
    g = dif.make_interior_diffeo(0.3, 1.0, 2.0)
    assert g.profile.value(np.array([0.5]))[0] == pytest.approx(0.575, abs=1e-15)
    assert g.profile.value(np.array([1.0]))[0] == pytest.approx(1.0, abs=1e-15)
    assert g.profile.value(np.array([1.7]))[0] == pytest.approx(1.7, abs=1e-15)
    # one-sided slopes at the inclusion circle: 1 - c inside, 1 outside
    assert g.profile.derivative(np.array([1.0 - 1e-9]))[0] == pytest.approx(0.7, abs=1e-6)
    assert g.profile.derivative(np.array([1.0 + 1e-9]))[0] == pytest.approx(1.0, abs=1e-12)


def test_interior_c_zero_is_identity(rng):
    g = dif.make_interior_diffeo(0.0, 1.0, 2.0)
    pts = random_disk_points(rng, 128)
    assert np.array_equal(dif.apply_many(g, pts), pts)


def test_constructor_rejections():
    for eps in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(dif.DiffeoError, match="eps"):
            dif.make_cloak_map(eps)
    for c in (1.0, -1.0, 2.0):
        with pytest.raises(dif.DiffeoError, match="< 1"):
            dif.make_interior_diffeo(c)
    with pytest.raises(dif.DiffeoError, match="r_D"):
        dif.make_cloak_map(0.5, r_D=3.0, R=2.0)


def test_apply_rejects_points_outside_disk():
    f = dif.make_cloak_map(0.5)
    with pytest.raises(dif.DiffeoError, match="outside"):
        dif.apply(f, [2.5, 0.0])


def test_round_trip(rng):
    for f in (dif.identity_diffeo(2.0), dif.make_cloak_map(0.5),
              dif.make_cloak_map(0.1), dif.make_interior_diffeo(0.3),
              dif.make_interior_diffeo(-0.6)):
        pts = random_disk_points(rng, 1000)
        back = dif.inverse_apply_many(f, dif.apply_many(f, pts))
        assert np.abs(back - pts).max() < 1e-12 * 2.0


def test_jacobian_identity_and_cloak():
    ident = dif.identity_diffeo(2.0)
    assert np.allclose(dif.jacobian(ident, [0.3, 0.4]), np.eye(2), atol=1e-15)
    f = dif.make_cloak_map(0.5)
    j = dif.jacobian(f, [0.5, 0.0])
    assert np.allclose(j, 0.5 * np.eye(2), atol=1e-15)
    assert np.linalg.det(j) == pytest.approx(0.25, abs=1e-15)


def test_jacobian_fd_oracle_values():
    ident = dif.identity_diffeo(2.0)
    assert np.abs(dif.jacobian_fd(ident, [0.7, -0.2]) - np.eye(2)).max() < 1e-10
    f = dif.make_cloak_map(0.5)
    assert np.abs(dif.jacobian_fd(f, [0.3, 0.4]) - 0.5 * np.eye(2)).max() < 1e-9


def test_jacobian_matches_finite_differences(rng):
    for f in (dif.make_cloak_map(0.5), dif.make_interior_diffeo(0.3),
              dif.compose(dif.make_cloak_map(0.5), dif.make_interior_diffeo(0.3))):
        pts = away_from_breakpoints(f, random_disk_points(rng, 1000, r_min=0.05), 1e-4)
        analytic = dif.jacobian_many(f, pts)
        fd = np.array([dif.jacobian_fd(f, p) for p in pts])
        rel = np.abs(analytic - fd).max(axis=(1, 2)) / np.abs(analytic).max(axis=(1, 2))
        assert rel.max() < 1e-6


def test_jacobian_rejects_breakpoint_circle():
    f = dif.make_cloak_map(0.5)
    with pytest.raises(dif.DiffeoError, match="perturb"):
        dif.jacobian(f, [1.0, 0.0])


def test_origin_handling():
    f = dif.make_cloak_map(0.5)
    assert np.array_equal(dif.apply(f, [0.0, 0.0]), [0.0, 0.0])
    assert np.array_equal(dif.inverse_apply(f, [0.0, 0.0]), [0.0, 0.0])
    # the scaling branch extends continuously to the center: DF -> eps*I
    assert np.allclose(dif.jacobian(f, [0.0, 0.0]), 0.5 * np.eye(2), atol=1e-12)


def test_pushforward_identity_is_identity(rng, case1_field):
    ident = dif.identity_diffeo(2.0)
    pushed = dif.pushforward(ident, case1_field)
    pts = random_disk_points(rng, 256)
    assert np.array_equal(pushed.evaluate_many(pts), case1_field.evaluate_many(pts))
    assert pushed.case == "pushed"


def test_pushforward_scaling_invariance(rng, unit_field):
    # isotropic conductivity is invariant under the pure scaling branch
    f = dif.make_cloak_map(0.5)
    pts = random_disk_points(rng, 128, R=0.45)
    pushed = dif.pushforward(f, unit_field).evaluate_many(pts)
    assert np.abs(pushed - np.eye(2)).max() < 1e-15


def test_pushforward_annulus_eigenvalues(unit_field):
    f = dif.make_cloak_map(0.5)
    y = np.column_stack([np.linspace(0.55, 1.95, 24), np.zeros(24)])
    eigs = np.sort(np.linalg.eigvalsh(dif.pushforward(f, unit_field).evaluate_many(y)), axis=1)
    x = dif.inverse_apply_many(f, y)
    r = np.hypot(x[:, 0], x[:, 1])
    drho = f.profile.derivative(r)
    rho = f.profile.value(r)
    expected = np.sort(np.column_stack([drho * r / rho, rho / (drho * r)]), axis=1)
    assert np.abs(eigs - expected).max() < 1e-12
    assert np.abs(eigs[:, 0] * eigs[:, 1] - 1.0).max() < 1e-10


def test_pushforward_preserves_determinant_and_spd(rng):
    base = cond.make_case(5, {"kind": "aniso_const", "m": [[2.0, 0.5], [0.5, 1.0]]},
                          {"kind": "radial_poly", "coeffs": [1.0, 0.0, 0.125]}, r_D=1.0)
    for f in (dif.make_cloak_map(0.5), dif.make_interior_diffeo(0.4)):
        pushed = dif.pushforward(f, base)
        pts = away_from_breakpoints(f, random_disk_points(rng, 512, r_min=0.02), 1e-6)
        # keep image points whose preimage is off the breakpoint circles too
        pre = dif.inverse_apply_many(f, pts)
        mats = pushed.evaluate_many(pts)
        assert np.array_equal(mats[:, 0, 1], mats[:, 1, 0])
        eigs = np.linalg.eigvalsh(mats)
        assert eigs.min() > 0.0
        det_dev = np.abs(np.linalg.det(mats) - np.linalg.det(base.evaluate_many(pre)))
        assert det_dev.max() < 1e-10


def test_pushforward_ellipticity_grows_as_cloak_shrinks(unit_field):
    y = np.column_stack([np.linspace(0.95, 1.9, 12), np.zeros(12)])
    maxima = []
    for eps in (0.5, 0.25, 0.1):
        pushed = dif.pushforward(dif.make_cloak_map(eps), unit_field)
        rep = cond.check_ellipticity(pushed, y, lower=1e-3, upper=1e3)
        assert rep.passed
        maxima.append(rep.lambda_max)
    assert maxima[0] < maxima[1] < maxima[2]


def test_compose_and_invert(rng):
    f = dif.make_cloak_map(0.5)
    g = dif.make_interior_diffeo(0.3)
    ident = dif.identity_diffeo(2.0)
    pts = random_disk_points(rng, 512)
    fg = dif.compose(f, g)
    assert np.abs(dif.apply_many(fg, pts)
                  - dif.apply_many(f, dif.apply_many(g, pts))).max() < 1e-14
    assert np.array_equal(dif.apply_many(dif.compose(f, ident), pts),
                          dif.apply_many(f, pts))
    finv = dif.invert(f)
    assert np.abs(dif.apply_many(dif.compose(f, finv), pts) - pts).max() < 1e-12 * 2.0


def test_pushforward_functoriality(rng):
    base = cond.make_case(5, {"kind": "aniso_const", "m": [[2.0, 0.5], [0.5, 1.0]]},
                          {"kind": "radial_poly", "coeffs": [1.0, 0.0, 0.125]}, r_D=1.0)
    f = dif.make_cloak_map(0.5)
    g = dif.make_interior_diffeo(0.3)
    fg = dif.compose(f, g)
    lhs = dif.pushforward(fg, base)
    rhs = dif.pushforward(f, dif.pushforward(g, base))
    pts = away_from_breakpoints(fg, random_disk_points(rng, 512, r_min=0.02), 1e-6)
    pts = away_from_breakpoints(f, pts, 1e-6)
    assert np.abs(lhs.evaluate_many(pts) - rhs.evaluate_many(pts)).max() < 1e-10


def test_validate_diffeo_passes_good_maps():
    assert dif.validate_diffeo(dif.identity_diffeo(2.0)).passed
    rep = dif.validate_diffeo(dif.make_cloak_map(0.1))
    assert rep.passed
    assert rep.max_jacobian_norm == pytest.approx(1.9, abs=1e-9)
    assert rep.min_abs_det > 0.0


def test_validate_diffeo_fails_non_boundary_identity():
    shrink = dif.from_profile([0.0, 2.0], [(0.0, 0.9)], R=2.0)
    rep = dif.validate_diffeo(shrink)
    assert not rep.passed
    assert any("identity on the outer boundary" in msg for msg in rep.failures)


def test_diffeo_from_config():
    f = dif.diffeo_from_config({"kind": "cloak", "eps": 0.5, "r_D": 1.0, "R": 2.0})
    assert f.kind == "cloak"
    g = dif.diffeo_from_config({"kind": "identity"})
    assert g.R == 2.0
    with pytest.raises(dif.DiffeoError, match="unknown"):
        dif.diffeo_from_config({"kind": "swirl"})
