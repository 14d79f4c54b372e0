"""Position-dependent 2x2 SPD conductivity tensors.

Fields are built from named closed-form evaluators (``iso_const``,
``aniso_const``, ``radial_poly``) combined into the six piecewise layouts
of the case taxonomy: background + inclusion inside the circle of radius
``r_D`` (cases 1, 2, 4, 5) or a single whole-domain field (cases 3, 6).
Points exactly on the inclusion circle evaluate to the background value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class FieldError(ValueError):
    """Invalid conductivity specification or evaluation failure."""


@dataclass(frozen=True)
class TensorField:
    """Pure evaluator ``x -> sigma(x)`` for a symmetric 2x2 tensor field.

    ``evaluate_many`` maps ``(m, 2)`` points to ``(m, 2, 2)`` matrices;
    evaluation is deterministic and side-effect free, so fields are safe
    to share between concurrent solves.
    """

    case: object  # 1..6 or "pushed"
    label: str
    isotropic: bool
    r_D: float | None
    _fn: callable = field(repr=False)

    def evaluate_many(self, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise FieldError(f"expected (m, 2) points, got shape {pts.shape}")
        out = self._fn(pts)
        return out

    def evaluate(self, point):
        return self.evaluate_many(np.asarray(point, dtype=np.float64)[None, :])[0]


@dataclass(frozen=True)
class EllipticityReport:
    passed: bool
    lambda_min: float
    lambda_max: float
    point_min: tuple
    point_max: tuple
    lower: float
    upper: float


@dataclass(frozen=True)
class JumpReport:
    passed: bool
    min_rel_gap: float
    worst_point: tuple


def _as_spd_matrix(m, context):
    a = np.asarray(m, dtype=np.float64)
    if a.shape != (2, 2):
        raise FieldError(f"{context}: matrix must be 2x2, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise FieldError(f"{context}: matrix has non-finite entries")
    if abs(a[0, 1] - a[1, 0]) != 0.0:
        raise FieldError(f"{context}: matrix is not symmetric: {a.tolist()}")
    if a[0, 0] <= 0.0 or np.linalg.det(a) <= 0.0:
        raise FieldError(f"{context}: matrix is not positive definite: {a.tolist()}")
    return a


def _make_iso_const(params, context):
    value = float(params["value"])
    if not np.isfinite(value) or value <= 0.0:
        raise FieldError(f"{context}: iso_const value must be positive, got {value}")
    mat = value * np.eye(2)

    def fn(pts):
        return np.broadcast_to(mat, (len(pts), 2, 2)).copy()

    return fn, True, f"iso_const({value:g})"


def _make_aniso_const(params, context):
    mat = _as_spd_matrix(params["m"], context)

    def fn(pts):
        return np.broadcast_to(mat, (len(pts), 2, 2)).copy()

    return fn, bool(mat[0, 1] == 0.0 and mat[0, 0] == mat[1, 1]), f"aniso_const({mat.tolist()})"


def _make_radial_poly(params, context):
    coeffs = np.asarray(params["coeffs"], dtype=np.float64)
    if coeffs.ndim != 1 or coeffs.size == 0 or not np.all(np.isfinite(coeffs)):
        raise FieldError(f"{context}: radial_poly coeffs must be a finite 1-d sequence")

    def fn(pts):
        r = np.hypot(pts[:, 0], pts[:, 1])
        val = np.polynomial.polynomial.polyval(r, coeffs)
        out = np.zeros((len(pts), 2, 2))
        out[:, 0, 0] = val
        out[:, 1, 1] = val
        return out

    return fn, True, f"radial_poly({coeffs.tolist()})"


_KINDS = {
    "iso_const": _make_iso_const,
    "aniso_const": _make_aniso_const,
    "radial_poly": _make_radial_poly,
}

_SCALAR_KINDS = {"iso_const", "radial_poly"}
_CONST_KINDS = {"iso_const", "aniso_const"}

# allowed evaluator kinds per case: (background kinds, inclusion kinds or None)
_CASE_RULES = {
    1: (_CONST_KINDS & _SCALAR_KINDS, _CONST_KINDS & _SCALAR_KINDS),
    2: (_SCALAR_KINDS, _SCALAR_KINDS),
    3: (_SCALAR_KINDS, None),
    4: (_CONST_KINDS, _CONST_KINDS),
    5: (set(_KINDS), set(_KINDS)),
    6: (set(_KINDS), None),
}


def _normalize_spec(spec, context):
    if isinstance(spec, dict):
        return spec
    arr = np.asarray(spec, dtype=np.float64)
    if arr.ndim == 0:
        return {"kind": "iso_const", "value": float(arr)}
    if arr.shape == (2, 2):
        return {"kind": "aniso_const", "m": arr.tolist()}
    raise FieldError(f"{context}: cannot interpret spec {spec!r}")


def _build_evaluator(spec, context):
    spec = _normalize_spec(spec, context)
    kind = spec.get("kind")
    if kind not in _KINDS:
        raise FieldError(f"{context}: unknown evaluator kind {kind!r}")
    try:
        fn, iso, label = _KINDS[kind](spec, context)
    except KeyError as exc:
        raise FieldError(f"{context}: missing parameter {exc} for kind {kind!r}") from None
    return kind, fn, iso, label


def make_case(case_id, background, inclusion=None, r_D=None):
    """Construct a piecewise conductivity field for one of the six cases.

    Parameters
    ----------
    case_id : int
        1: scalar constants, 2: scalar functions, 3: one scalar function,
        4: constant matrices, 5: matrix functions, 6: one matrix function.
    background, inclusion : dict or scalar or 2x2 array
        Evaluator specs ``{"kind": ..., ...}``; plain numbers and 2x2
        arrays are shorthand for iso_const / aniso_const.
    r_D : float, optional
        Inclusion radius; required for cases 1, 2, 4, 5 and forbidden for
        cases 3 and 6. The inclusion value applies strictly inside
        ``|x| < r_D``.
    """
    if case_id not in _CASE_RULES:
        raise FieldError(f"case must be 1..6, got {case_id!r}")
    bg_kinds, inc_kinds = _CASE_RULES[case_id]

    bg_kind, bg_fn, bg_iso, bg_label = _build_evaluator(background, f"case {case_id} background")
    if bg_kind not in bg_kinds:
        raise FieldError(
            f"case {case_id} background must be one of {sorted(bg_kinds)}, got {bg_kind!r}")

    if inc_kinds is None:
        if inclusion is not None or r_D is not None:
            raise FieldError(f"case {case_id} takes no inclusion or r_D")
        return TensorField(case=case_id, label=f"case{case_id}({bg_label})",
                           isotropic=bg_iso, r_D=None, _fn=bg_fn)

    if inclusion is None:
        raise FieldError(f"case {case_id} requires an inclusion spec")
    if r_D is None or not np.isfinite(r_D) or r_D <= 0.0:
        raise FieldError(f"case {case_id} requires a positive inclusion radius r_D, got {r_D!r}")
    inc_kind, inc_fn, inc_iso, inc_label = _build_evaluator(inclusion, f"case {case_id} inclusion")
    if inc_kind not in inc_kinds:
        raise FieldError(
            f"case {case_id} inclusion must be one of {sorted(inc_kinds)}, got {inc_kind!r}")

    r_D = float(r_D)

    def fn(pts):
        out = bg_fn(pts)
        inside = np.hypot(pts[:, 0], pts[:, 1]) < r_D
        if inside.any():
            out[inside] = inc_fn(pts[inside])
        return out

    label = f"case{case_id}({bg_label}, {inc_label}, r_D={r_D:g})"
    return TensorField(case=case_id, label=label, isotropic=bg_iso and inc_iso,
                       r_D=r_D, _fn=fn)


def field_from_config(config):
    """Build a TensorField from the JSON config schema.

    ``{"case": 5, "background": {"kind": ...}, "inclusion": {...}, "r_D": 1.0}``
    """
    if not isinstance(config, dict) or "case" not in config:
        raise FieldError(f"conductivity config must be a dict with a 'case' key, got {config!r}")
    unknown = set(config) - {"case", "background", "inclusion", "r_D"}
    if unknown:
        raise FieldError(f"unknown conductivity config keys {sorted(unknown)}")
    if "background" not in config:
        raise FieldError("conductivity config requires a 'background' spec")
    return make_case(config["case"], config["background"],
                     config.get("inclusion"), config.get("r_D"))


def homogeneous_field(value=1.0):
    """Uniform isotropic field value*I on the whole domain."""
    return make_case(3, {"kind": "iso_const", "value": float(value)})


def _eigenvalue_range(mats):
    """Eigenvalues of symmetric 2x2 matrices, closed form: (min, max) arrays."""
    p = mats[:, 0, 0]
    q = 0.5 * (mats[:, 0, 1] + mats[:, 1, 0])
    s = mats[:, 1, 1]
    mid = 0.5 * (p + s)
    rad = np.sqrt((0.5 * (p - s)) ** 2 + q ** 2)
    return mid - rad, mid + rad


def check_ellipticity(field, sample_points, lower=1e-3, upper=1e3):
    """Check the uniform eigenvalue bounds over a sample point set.

    Returns an EllipticityReport with the extreme eigenvalues and the
    points attaining them; raises FieldError naming the point if the
    field evaluates to non-finite entries.
    """
    pts = np.asarray(sample_points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise FieldError(f"sample_points must be a non-empty (m, 2) array, got shape {pts.shape}")
    mats = field.evaluate_many(pts)
    finite = np.isfinite(mats).all(axis=(1, 2))
    if not finite.all():
        bad = pts[int(np.argmin(finite))]
        raise FieldError(f"field {field.label} is non-finite at point ({bad[0]}, {bad[1]})")
    lo, hi = _eigenvalue_range(mats)
    i_min = int(np.argmin(lo))
    i_max = int(np.argmax(hi))
    lam_min = float(lo[i_min])
    lam_max = float(hi[i_max])
    passed = lower < lam_min and lam_max < upper
    return EllipticityReport(passed=passed, lambda_min=lam_min, lambda_max=lam_max,
                             point_min=tuple(pts[i_min]), point_max=tuple(pts[i_max]),
                             lower=float(lower), upper=float(upper))


def check_jump_condition(background, inclusion, interface_points, rel_tol=1e-9):
    """Determinant-jump test det(B) != det(A) at interface sample points.

    Both fields are evaluated at the given points (callers sample just
    inside/outside the interface as appropriate); the test passes when the
    relative determinant gap exceeds ``rel_tol`` at every point.
    """
    pts = np.asarray(interface_points, dtype=np.float64)
    det_a = np.linalg.det(background.evaluate_many(pts))
    det_b = np.linalg.det(inclusion.evaluate_many(pts))
    gap = np.abs(det_b - det_a) / np.maximum(np.maximum(np.abs(det_a), np.abs(det_b)), 1e-300)
    i = int(np.argmin(gap))
    return JumpReport(passed=bool(gap[i] > rel_tol), min_rel_gap=float(gap[i]),
                      worst_point=tuple(pts[i]))
