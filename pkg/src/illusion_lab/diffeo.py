"""Radial diffeomorphisms of the disk and tensor push-forwards.

A map F(x) = profile(|x|) * x/|x| is represented by its 1-d radial profile,
a piecewise strictly-increasing function on [0, R]. Primitive profiles are
piecewise polynomials (degree <= 2, closed-form inverses); composition and
inversion wrap profiles functionally, staying exact. The Jacobian is
rank-one in the radial frame: DF = rho'(r) P_r + (rho(r)/r) P_t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Relative tolerance (times R) for breakpoint-circle exclusion and the
# identity-on-boundary/round-trip contracts.
TOL_REL = 1e-12


class DiffeoError(ValueError):
    """Invalid diffeomorphism parameters or evaluation outside the contract."""


class _PiecewisePolyProfile:
    """Monotone piecewise polynomial rho on [0, R], degree <= 2 per piece.

    ``coeffs[i]`` are ascending-power coefficients on
    [breakpoints[i], breakpoints[i+1]].
    """

    def __init__(self, breakpoints, coeffs):
        self.breakpoints = np.asarray(breakpoints, dtype=np.float64)
        if self.breakpoints.ndim != 1 or len(self.breakpoints) < 2:
            raise DiffeoError("profile needs at least two breakpoints")
        if np.any(np.diff(self.breakpoints) <= 0.0):
            raise DiffeoError(f"breakpoints must be strictly increasing, got {breakpoints}")
        self.coeffs = [np.asarray(c, dtype=np.float64) for c in coeffs]
        if len(self.coeffs) != len(self.breakpoints) - 1:
            raise DiffeoError("need one coefficient tuple per piece")
        for c in self.coeffs:
            if c.size > 3:
                raise DiffeoError("profile pieces must have degree <= 2")
        # piece values at breakpoints, for piece lookup on inversion
        self.knot_values = np.array([self._piece_val(i, self.breakpoints[i])
                                     for i in range(len(self.coeffs))]
                                    + [self._piece_val(len(self.coeffs) - 1, self.breakpoints[-1])])
        for i in range(1, len(self.coeffs)):
            left = self._piece_val(i - 1, self.breakpoints[i])
            if abs(left - self.knot_values[i]) > 1e-12 * max(1.0, abs(left)):
                raise DiffeoError(f"profile is discontinuous at breakpoint {self.breakpoints[i]}")

    def _piece_val(self, i, r):
        return float(np.polynomial.polynomial.polyval(r, self.coeffs[i]))

    def _piece_index(self, r):
        idx = np.searchsorted(self.breakpoints, r, side="right") - 1
        return np.clip(idx, 0, len(self.coeffs) - 1)

    def value(self, r):
        r = np.asarray(r, dtype=np.float64)
        idx = self._piece_index(r)
        out = np.zeros_like(r)
        for i, c in enumerate(self.coeffs):
            m = idx == i
            if m.any():
                out[m] = np.polynomial.polynomial.polyval(r[m], c)
        return out

    def derivative(self, r):
        r = np.asarray(r, dtype=np.float64)
        idx = self._piece_index(r)
        out = np.zeros_like(r)
        for i, c in enumerate(self.coeffs):
            m = idx == i
            if m.any():
                d = np.polynomial.polynomial.polyder(c) if c.size > 1 else np.zeros(1)
                out[m] = np.polynomial.polynomial.polyval(r[m], d)
        return out

    def inverse(self, s):
        s = np.asarray(s, dtype=np.float64)
        idx = np.clip(np.searchsorted(self.knot_values, s, side="right") - 1,
                      0, len(self.coeffs) - 1)
        out = np.zeros_like(s)
        for i, c in enumerate(self.coeffs):
            m = idx == i
            if not m.any():
                continue
            si = s[m]
            if c.size <= 2:
                c0 = c[0]
                c1 = c[1] if c.size > 1 else 0.0
                if c1 == 0.0:
                    raise DiffeoError("cannot invert a constant profile piece")
                out[m] = (si - c0) / c1
            else:
                c0, c1, c2 = c
                # increasing branch of c2 r^2 + c1 r + (c0 - s) = 0; the
                # product form avoids cancellation for small s - c0
                disc = c1 * c1 - 4.0 * c2 * (c0 - si)
                root = np.sqrt(np.maximum(disc, 0.0))
                out[m] = 2.0 * (si - c0) / (c1 + root)
        return out

    def interior_breakpoints(self):
        return self.breakpoints[1:-1]


class _ComposedProfile:
    """rho = outer o inner, evaluated functionally (exact composition)."""

    def __init__(self, outer, inner):
        self.outer = outer
        self.inner = inner
        pulled = inner.inverse(np.asarray(outer.interior_breakpoints(), dtype=np.float64))
        pts = np.concatenate([inner.breakpoints[[0, -1]],
                              inner.interior_breakpoints(), pulled])
        self.breakpoints = np.unique(np.sort(pts))

    def value(self, r):
        return self.outer.value(self.inner.value(r))

    def derivative(self, r):
        inner_val = self.inner.value(r)
        return self.outer.derivative(inner_val) * self.inner.derivative(r)

    def inverse(self, s):
        return self.inner.inverse(self.outer.inverse(s))

    def interior_breakpoints(self):
        return self.breakpoints[1:-1]


class _InverseProfile:
    """rho = base^{-1}, exact as long as the base inverts in closed form."""

    def __init__(self, base):
        self.base = base
        self.breakpoints = np.sort(base.value(base.breakpoints))

    def value(self, r):
        return self.base.inverse(r)

    def derivative(self, r):
        return 1.0 / self.base.derivative(self.base.inverse(r))

    def inverse(self, s):
        return self.base.value(s)

    def interior_breakpoints(self):
        return self.breakpoints[1:-1]


@dataclass(frozen=True)
class RadialDiffeo:
    """Radial map of the disk of radius R defined by a monotone profile."""

    R: float
    kind: str
    params: dict = field(repr=True)
    profile: object = field(repr=False)

    def config(self):
        return {"kind": self.kind, **self.params}


def identity_diffeo(R=2.0):
    profile = _PiecewisePolyProfile([0.0, float(R)], [(0.0, 1.0)])
    return RadialDiffeo(R=float(R), kind="identity", params={}, profile=profile)


def from_profile(breakpoints, coeffs, R, kind="custom", params=None):
    """Diffeo from raw piecewise-polynomial profile data (mostly for tests;
    run validate_diffeo on the result)."""
    profile = _PiecewisePolyProfile(breakpoints, coeffs)
    return RadialDiffeo(R=float(R), kind=kind, params=dict(params or {}), profile=profile)


def make_cloak_map(eps, r_D=1.0, R=2.0):
    """Cloak map: linear squeeze of the disk of radius r_D onto eps*r_D,
    affine stretch of the remaining annulus, identity on the outer circle.

    eps must lie strictly in (0, 1); the singular eps=0 limit is excluded.
    """
    eps = float(eps)
    r_D = float(r_D)
    R = float(R)
    if not 0.0 < eps < 1.0:
        raise DiffeoError(f"eps must lie in (0, 1), got {eps}")
    if not 0.0 < r_D < R:
        raise DiffeoError(f"need 0 < r_D < R, got r_D={r_D}, R={R}")
    slope = (R - eps * r_D) / (R - r_D)
    profile = _PiecewisePolyProfile(
        [0.0, r_D, R],
        [(0.0, eps), (eps * r_D - slope * r_D, slope)],
    )
    return RadialDiffeo(R=R, kind="cloak", params={"eps": eps, "r_D": r_D, "R": R},
                        profile=profile)


def make_interior_diffeo(c, r_D=1.0, R=2.0):
    """Diffeo supported inside the inclusion: rho(r) = r + c*r*(1 - r/r_D)
    on [0, r_D], identity outside. Requires |c| < 1 so rho' stays positive.
    """
    c = float(c)
    r_D = float(r_D)
    R = float(R)
    if abs(c) >= 1.0:
        raise DiffeoError(f"|c| must be < 1 to keep the profile monotone, got {c}")
    if not 0.0 < r_D < R:
        raise DiffeoError(f"need 0 < r_D < R, got r_D={r_D}, R={R}")
    if c == 0.0:
        return identity_diffeo(R)
    profile = _PiecewisePolyProfile(
        [0.0, r_D, R],
        [(0.0, 1.0 + c, -c / r_D), (0.0, 1.0)],
    )
    return RadialDiffeo(R=R, kind="interior", params={"c": c, "r_D": r_D, "R": R},
                        profile=profile)


def diffeo_from_config(config, default_R=2.0):
    """Build a diffeo from ``{"kind": "cloak"|"interior"|"identity", ...}``."""
    if not isinstance(config, dict) or "kind" not in config:
        raise DiffeoError(f"diffeo config must be a dict with a 'kind' key, got {config!r}")
    kind = config["kind"]
    if kind == "identity":
        return identity_diffeo(config.get("R", default_R))
    if kind == "cloak":
        return make_cloak_map(config["eps"], config.get("r_D", 1.0), config.get("R", default_R))
    if kind == "interior":
        return make_interior_diffeo(config["c"], config.get("r_D", 1.0), config.get("R", default_R))
    raise DiffeoError(f"unknown diffeo kind {kind!r}")


def _radii(points, R, *, check_domain=True):
    pts = np.asarray(points, dtype=np.float64)
    r = np.hypot(pts[:, 0], pts[:, 1])
    if check_domain and np.any(r > R * (1.0 + TOL_REL)):
        bad = pts[int(np.argmax(r))]
        raise DiffeoError(f"point ({bad[0]}, {bad[1]}) lies outside the disk of radius {R}")
    return pts, r


def apply_many(diffeo, points):
    pts, r = _radii(points, diffeo.R)
    out = np.zeros_like(pts)
    positive = r > 0.0
    scale = np.ones_like(r)
    scale[positive] = diffeo.profile.value(r[positive]) / r[positive]
    out = pts * scale[:, None]
    return out


def apply(diffeo, point):
    """Map a single point: F(x) = rho(|x|) x / |x|."""
    return apply_many(diffeo, np.asarray(point, dtype=np.float64)[None, :])[0]


def inverse_apply_many(diffeo, points):
    pts, s = _radii(points, diffeo.R)
    out = np.zeros_like(pts)
    positive = s > 0.0
    scale = np.ones_like(s)
    scale[positive] = diffeo.profile.inverse(s[positive]) / s[positive]
    out = pts * scale[:, None]
    return out


def inverse_apply(diffeo, point):
    """Map a single point through F^{-1} (closed-form piecewise inversion)."""
    return inverse_apply_many(diffeo, np.asarray(point, dtype=np.float64)[None, :])[0]


def invert(diffeo):
    """The inverse map as a RadialDiffeo (exact functional inverse profile)."""
    return RadialDiffeo(R=diffeo.R, kind="inverse", params={"of": diffeo.kind, **diffeo.params},
                        profile=_InverseProfile(diffeo.profile))


def compose(outer, inner):
    """Composition outer o inner as a RadialDiffeo (profiles compose)."""
    if abs(outer.R - inner.R) > TOL_REL * max(outer.R, inner.R):
        raise DiffeoError(f"cannot compose diffeos on different disks ({outer.R} vs {inner.R})")
    return RadialDiffeo(R=outer.R, kind="composed",
                        params={"outer": outer.kind, "inner": inner.kind},
                        profile=_ComposedProfile(outer.profile, inner.profile))


def _check_breakpoints(diffeo, r):
    tol = TOL_REL * diffeo.R
    interior = np.asarray(diffeo.profile.interior_breakpoints(), dtype=np.float64)
    if interior.size == 0:
        return
    dist = np.abs(r[:, None] - interior[None, :]).min(axis=1)
    if np.any(dist < tol):
        bad = float(r[int(np.argmin(dist))])
        raise DiffeoError(
            f"Jacobian requested on a profile breakpoint circle (|x|={bad}); "
            f"perturb the evaluation point off the circle")


def jacobian_many(diffeo, points):
    pts, r = _radii(points, diffeo.R)
    _check_breakpoints(diffeo, r)
    out = np.empty((len(pts), 2, 2))
    tiny = TOL_REL * diffeo.R
    at_center = r < tiny
    if at_center.any():
        d0 = float(diffeo.profile.derivative(np.asarray([0.5 * tiny]))[0])
        out[at_center] = d0 * np.eye(2)
    rest = ~at_center
    if rest.any():
        rr = r[rest]
        drho = diffeo.profile.derivative(rr)
        ratio = diffeo.profile.value(rr) / rr
        ux = pts[rest, 0] / rr
        uy = pts[rest, 1] / rr
        # DF = (rho/r) I + (rho' - rho/r) u u^t; the rank-one form keeps the
        # identity map's Jacobian exactly the identity matrix
        gap = drho - ratio
        out[rest, 0, 0] = ratio + gap * ux * ux
        out[rest, 0, 1] = gap * ux * uy
        out[rest, 1, 0] = out[rest, 0, 1]
        out[rest, 1, 1] = ratio + gap * uy * uy
    return out


def jacobian(diffeo, point):
    """Analytic Jacobian DF(x); points on interior breakpoint circles are
    rejected (DF is defined almost everywhere)."""
    return jacobian_many(diffeo, np.asarray(point, dtype=np.float64)[None, :])[0]


def jacobian_fd(diffeo, point, step=1e-6):
    """Central-difference Jacobian, the test oracle for ``jacobian``."""
    x = np.asarray(point, dtype=np.float64)
    out = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = step
        out[:, j] = (apply(diffeo, x + e) - apply(diffeo, x - e)) / (2.0 * step)
    return out


def pushforward(diffeo, sigma):
    """Push-forward field (DF sigma DF^t)/det(DF) evaluated at preimages.

    Evaluation is lazy: each query point y is pulled back to x = F^{-1}(y),
    where the Jacobian and the base field are evaluated. The result is
    symmetrized exactly and keeps positive-definiteness (congruence by an
    invertible matrix over a positive determinant).
    """
    from .conductivity import TensorField

    def fn(pts):
        x = inverse_apply_many(diffeo, pts)
        jac = jacobian_many(diffeo, x)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        if np.any(det == 0.0):
            bad = pts[int(np.argmax(det == 0.0))]
            raise DiffeoError(f"det DF vanishes at preimage of ({bad[0]}, {bad[1]})")
        base = sigma.evaluate_many(x)
        out = np.einsum("mij,mjk,mlk->mil", jac, base, jac) / det[:, None, None]
        sym = 0.5 * (out[:, 0, 1] + out[:, 1, 0])
        out[:, 0, 1] = sym
        out[:, 1, 0] = sym
        return out

    return TensorField(case="pushed", label=f"pushed({diffeo.kind}, {sigma.label})",
                       isotropic=False, r_D=None, _fn=fn)


@dataclass(frozen=True)
class DiffeoValidation:
    passed: bool
    failures: tuple
    boundary_gap: float
    monotone: bool
    max_jacobian_norm: float
    min_abs_det: float


def validate_diffeo(diffeo, n_samples=1000, seed=0, det_floor=1e-12):
    """Sample-based check of the diffeomorphism conditions.

    Verifies identity on the outer circle, a strictly increasing profile,
    bounded Jacobian norm, and |det DF| above ``det_floor``; reports the
    worst observed values.
    """
    rng = np.random.default_rng(seed)
    R = diffeo.R
    failures = []

    rho_R = float(diffeo.profile.value(np.asarray([R]))[0])
    boundary_gap = abs(rho_R - R)
    if boundary_gap > TOL_REL * R:
        failures.append("not identity on the outer boundary")
    rho_0 = float(diffeo.profile.value(np.asarray([0.0]))[0])
    if abs(rho_0) > TOL_REL * R:
        failures.append("profile does not fix the origin")

    radii = np.sort(rng.uniform(0.0, R, n_samples))
    values = diffeo.profile.value(radii)
    monotone = bool(np.all(np.diff(values) > 0.0))
    if not monotone:
        failures.append("profile is not strictly increasing")

    # avoid breakpoint circles when sampling the Jacobian
    interior = np.asarray(diffeo.profile.interior_breakpoints(), dtype=np.float64)
    keep = np.ones(n_samples, dtype=bool)
    if interior.size:
        keep = np.abs(radii[:, None] - interior[None, :]).min(axis=1) > 1e-9 * R
    angles = rng.uniform(0.0, 2.0 * np.pi, n_samples)[keep]
    pts = np.column_stack([radii[keep] * np.cos(angles), radii[keep] * np.sin(angles)])
    jac = jacobian_many(diffeo, pts)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    norms = np.linalg.norm(jac, ord=2, axis=(1, 2))
    max_norm = float(norms.max())
    min_det = float(np.abs(det).min())
    if not np.all(np.isfinite(norms)):
        failures.append("Jacobian is unbounded at a sample")
    if min_det < det_floor:
        failures.append(f"|det DF| falls below the floor {det_floor}")

    return DiffeoValidation(passed=not failures, failures=tuple(failures),
                            boundary_gap=boundary_gap, monotone=monotone,
                            max_jacobian_norm=max_norm, min_abs_det=min_det)
