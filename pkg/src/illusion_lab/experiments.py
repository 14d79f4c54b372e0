"""Named experiment scenarios for the cloaking and illusion claims.

Each scenario builds interface-fitted meshes across refinement levels,
computes the discrete DtN operators involved, and grades itself against
tolerances calibrated on the same meshes: the calibration scale is the
observed absolute eigenvalue error of the computed operators against the
analytic disk oracles, maximized over the probed modes. Verdicts are pure
functions of the recorded numbers (``derive_verdicts``), so persisted
reports can be re-graded byte-for-byte.

Scenario defaults follow the concrete geometry of the source setting:
disk radius 2, inclusion radius 1, cloak parameter 0.5.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dtn as dtn_mod
from .conductivity import check_jump_condition, field_from_config, homogeneous_field
from .diffeo import diffeo_from_config, inverse_apply_many, pushforward, validate_diffeo
from .mesh import build_disk_mesh, refine
from .render import render_field_svg


class ConfigError(ValueError):
    """Unusable experiment configuration."""


MAX_REFINEMENTS = 5

SCENARIOS = {}


def _scenario(name):
    def register(fn):
        SCENARIOS[name] = fn
        return fn
    return register


@dataclass
class ExperimentConfig:
    """Scenario configuration; geometry fields left as None adopt the
    scenario's own defaults (the trend scenario uses a fixed finer mesh,
    the refinement-ladder scenarios start at target_h=0.1 with two
    refinements)."""

    scenario: str
    R: float = 2.0
    r_D: float = 1.0
    eps: float = 0.5
    eps_list: tuple = (0.8, 0.4, 0.2, 0.1)
    target_h: float | None = None
    refinements: int | None = None
    probes: int | None = None
    seed: int = 0
    sigma: dict | None = None
    sigma_2: dict | None = None
    diffeo: dict | None = None
    out_dir: str | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"unknown scenario {self.scenario!r}; available: {sorted(SCENARIOS)}")
        if not 0.0 < self.r_D < self.R:
            raise ConfigError(f"need 0 < r_D < R, got r_D={self.r_D}, R={self.R}")
        if not 0.0 < self.eps < 1.0:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        self.eps_list = tuple(float(e) for e in self.eps_list)
        if any(not 0.0 < e < 1.0 for e in self.eps_list):
            raise ConfigError(f"eps_list entries must lie in (0, 1), got {self.eps_list}")
        if any(a <= b for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise ConfigError(f"eps_list must be strictly decreasing, got {self.eps_list}")
        if self.target_h is not None and self.target_h <= 0.0:
            raise ConfigError(f"target_h must be positive, got {self.target_h}")
        if self.refinements is not None and not 0 <= self.refinements <= MAX_REFINEMENTS:
            raise ConfigError(
                f"refinements must be in 0..{MAX_REFINEMENTS} (desk-scale guard), "
                f"got {self.refinements}")
        if self.probes is not None and self.probes < 1:
            raise ConfigError(f"probes must be >= 1, got {self.probes}")

    def resolve_geometry(self, default_h=0.1, default_refinements=2):
        target_h = self.target_h if self.target_h is not None else default_h
        refinements = (self.refinements if self.refinements is not None
                       else default_refinements)
        return target_h, refinements


_GEOMETRY_KEYS = {"R", "r_D", "eps", "eps_list", "target_h", "refinements"}


def config_from_dict(data):
    """Parse the JSON layout: scenario, geometry sub-object, specs."""
    if not isinstance(data, dict):
        raise ConfigError(f"experiment config must be an object, got {type(data).__name__}")
    known = {"scenario", "geometry", "sigma", "sigma_2", "diffeo", "probes", "seed", "out_dir"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if "scenario" not in data:
        raise ConfigError("config requires a 'scenario' name")
    kwargs = {k: data[k] for k in ("sigma", "sigma_2", "diffeo", "probes", "seed", "out_dir")
              if k in data}
    geometry = data.get("geometry", {})
    bad = set(geometry) - _GEOMETRY_KEYS
    if bad:
        raise ConfigError(f"unknown geometry keys {sorted(bad)}")
    kwargs.update(geometry)
    return ExperimentConfig(scenario=data["scenario"], **kwargs)


def _config_echo(config, target_h, refinements, **resolved):
    echo = {
        "scenario": config.scenario,
        "geometry": {"R": config.R, "r_D": config.r_D, "eps": config.eps,
                     "eps_list": list(config.eps_list), "target_h": target_h,
                     "refinements": refinements},
        "seed": config.seed,
    }
    echo.update(resolved)
    return echo


@dataclass
class ExperimentReport:
    scenario: str
    config: dict
    levels: list
    summary: dict
    verdicts: dict
    passed: bool
    timings: dict = field(default_factory=dict)

    def to_json_dict(self):
        # timings stay out: byte-identical reports for identical configs
        return {"scenario": self.scenario, "config": self.config,
                "levels": self.levels, "summary": self.summary,
                "verdicts": self.verdicts, "passed": self.passed}


# ---------------------------------------------------------------------------
# shared machinery

def _mesh_ladder(R, interfaces, target_h, refinements):
    meshes = [build_disk_mesh(R, interfaces, target_h)]
    for _ in range(refinements):
        meshes.append(refine(meshes[-1]))
    return meshes


def _estimates(dtn_matrix, kmax):
    return {k: dtn_mod.dtn_eigenvalue_estimate(dtn_matrix, k) for k in range(1, kmax + 1)}


def _calibration(est_oracle_pairs):
    """Max absolute eigenvalue error over all (estimates, oracle_fn) pairs."""
    worst = 0.0
    for ests, oracle in est_oracle_pairs:
        for k, est in ests.items():
            worst = max(worst, abs(est - oracle(k)))
    return worst


def _oracle_gate(est_oracle_pairs, k_gate=8):
    """Max relative eigenvalue error for k <= k_gate (the 5% discipline)."""
    worst = 0.0
    for ests, oracle in est_oracle_pairs:
        for k in range(1, min(k_gate, max(ests)) + 1):
            worst = max(worst, abs(ests[k] - oracle(k)) / abs(oracle(k)))
    return worst


def _energy_gap_max(d1, d2, probes):
    """Max over probes of |f^t L1 f - f^t L2 f| with f normalized in the
    boundary mass norm (the per-datum quadratic-form gap)."""
    worst = 0.0
    for k in range(0, probes + 1):
        for parity in ("cos",) if k == 0 else ("cos", "sin"):
            f = dtn_mod._probe(d1, k, parity)
            f = f / np.sqrt(f @ (d1.mass @ f))
            worst = max(worst, abs(f @ (d1.matrix @ f) - f @ (d2.matrix @ f)))
    return worst


def _eig_csv_rows(ests, oracle):
    return [(k, est, oracle(k) if oracle else None) for k, est in sorted(ests.items())]


def _maybe_out(config):
    if config.out_dir is None:
        return None
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _default_sigma(config):
    return {"case": 4, "background": {"kind": "iso_const", "value": 1.0},
            "inclusion": {"kind": "iso_const", "value": 2.0}, "r_D": config.r_D}


def _layered_params(sigma_cfg):
    """(a, b, r0) when the config is an isotropic-constant two-layer field."""
    bg = sigma_cfg.get("background", {})
    inc = sigma_cfg.get("inclusion", {})
    if (sigma_cfg.get("case") in (1, 2, 4, 5)
            and bg.get("kind") == "iso_const" and inc.get("kind") == "iso_const"):
        return float(bg["value"]), float(inc["value"]), float(sigma_cfg["r_D"])
    return None


def analytic_oracle_fn(sigma_cfg, R):
    """Continuum eigenvalue function for configs the disk oracles cover."""
    layered = _layered_params(sigma_cfg)
    if layered is not None:
        a, b, r0 = layered
        if a == b:
            return lambda k: a * dtn_mod.oracle_homogeneous(k, R)
        return lambda k: dtn_mod.oracle_layered(k, a, b, r0, R)
    if sigma_cfg.get("case") in (3, 6) and sigma_cfg.get("background", {}).get("kind") == "iso_const":
        a = float(sigma_cfg["background"]["value"])
        return lambda k: a * dtn_mod.oracle_homogeneous(k, R)
    return None


def _validated_diffeo(diffeo_cfg, R, seed):
    f = diffeo_from_config(diffeo_cfg, default_R=R)
    if abs(f.R - R) > 1e-12 * R:
        raise ConfigError(
            f"diffeo {diffeo_cfg} lives on a disk of radius {f.R}, but the "
            f"experiment geometry uses R={R}")
    report = validate_diffeo(f, seed=seed)
    if not report.passed:
        raise ConfigError(
            f"diffeo {diffeo_cfg} failed validation: {', '.join(report.failures)} "
            f"(boundary_gap={report.boundary_gap:.3e}, min |det DF|={report.min_abs_det:.3e})")
    return f


# ---------------------------------------------------------------------------
# verdicts (pure functions of recorded numbers)

_INVARIANCE_FACTOR = 3.0
_DISTINGUISH_FACTOR = 10.0
_GATE_REL = 0.05
_ORACLE_EXACT = 1e-9
_SLOPE_FLOOR = 1.5
_PROPERTY_GAP_FLOOR = 0.05


def _monotone_decreasing(values, strict=True):
    return all(b < a if strict else b <= a for a, b in zip(values, values[1:]))


def derive_verdicts(scenario, levels, summary):
    """Recompute the pass/fail verdicts from recorded data."""
    v = {}
    if scenario == "convergence_study":
        for name in ("homogeneous", "layered"):
            rels = [lv[f"{name}_max_rel_k8"] for lv in levels]
            v[f"{name}_within_2pct_finest"] = rels[-1] < 0.02
            v[f"{name}_error_halves"] = all(b <= a / 2.0 for a, b in zip(rels, rels[1:]))
            v[f"{name}_rate_ge_1p5"] = summary[f"{name}_rate"] >= _SLOPE_FLOOR
        v["oracle_collapse_exact"] = summary["oracle_collapse_dev"] <= _ORACLE_EXACT
        v["oracle_small_r0_exact"] = summary["oracle_small_r0_dev"] <= _ORACLE_EXACT
    elif scenario in ("prop2_invariance", "full_pushforward_illusion", "property_illusion"):
        v["distance_within_3x_calibration"] = all(
            lv["distance"] <= _INVARIANCE_FACTOR * lv["calibration"] for lv in levels)
        v["energy_gap_within_3x_calibration"] = all(
            lv["energy_gap_max"] <= _INVARIANCE_FACTOR * lv["calibration"] for lv in levels)
        if len(levels) > 1:
            v["distance_monotone_decreasing"] = _monotone_decreasing(
                [lv["distance"] for lv in levels])
        v["calibration_gate"] = all(lv["oracle_rel_err_k8"] < _GATE_REL for lv in levels)
        if scenario == "full_pushforward_illusion":
            v["background_anisotropic"] = summary["max_anisotropy_ratio"] > 1.0
            v["eigenvalue_product_unit"] = summary["eig_product_max_dev"] <= 1e-10
        if scenario == "property_illusion":
            v["property_gap_gt_5pct"] = summary["max_rel_property_gap"] > _PROPERTY_GAP_FLOOR
            v["determinant_preserved"] = summary["det_preservation_dev"] <= _ORACLE_EXACT
            v["jump_condition_base"] = summary["jump_base_pass"]
            v["jump_condition_pushed"] = summary["jump_pushed_pass"]
    elif scenario == "domain_distinguish":
        final = levels[-1]
        v["jump_condition_both"] = summary["jump_1_pass"] and summary["jump_2_pass"]
        v["distance_ge_10x_calibration"] = (
            final["distance"] >= _DISTINGUISH_FACTOR * final["calibration"])
        v["matches_oracle_gap_5pct"] = (
            abs(final["distance"] - summary["oracle_gap"]) <= 0.05 * summary["oracle_gap"])
        if len(levels) > 1:
            v["distance_stable"] = (
                abs(levels[-1]["distance"] - levels[-2]["distance"])
                <= 0.05 * levels[-1]["distance"])
        v["calibration_gate"] = all(lv["oracle_rel_err_k8"] < _GATE_REL for lv in levels)
    elif scenario == "small_inclusion_trend":
        v["distance_strictly_decreasing"] = _monotone_decreasing(
            [lv["distance"] for lv in levels])
        v["fitted_slope_ge_1p5"] = summary["fitted_slope"] >= _SLOPE_FLOOR
        v["calibration_gate"] = all(lv["oracle_rel_err_k8"] < _GATE_REL for lv in levels)
    else:
        raise ConfigError(f"unknown scenario {scenario!r}")
    return v, all(v.values())


# ---------------------------------------------------------------------------
# scenarios

@_scenario("convergence_study")
def run_convergence_study(config):
    """Eigenvalue errors against both disk oracles across refinements.

    Supplies the calibrated-discretization-error discipline every other
    scenario relies on, and validates the layered oracle's collapse limits.
    """
    t0 = time.perf_counter()
    probes = config.probes or dtn_mod.DEFAULT_PROBE_DEPTH
    kmax = max(probes, 8)
    R, r_D = config.R, config.r_D
    sigma_cfg = config.sigma or {"case": 1, "background": {"kind": "iso_const", "value": 1.0},
                                 "inclusion": {"kind": "iso_const", "value": 2.0},
                                 "r_D": r_D}
    layered = _layered_params(sigma_cfg)
    if layered is None:
        raise ConfigError("convergence_study needs an isotropic-constant layered sigma")
    a, b, r0 = layered
    sig_lay = field_from_config(sigma_cfg)
    sig_hom = homogeneous_field(1.0)
    oracle_hom = lambda k: dtn_mod.oracle_homogeneous(k, R)
    oracle_lay = lambda k: dtn_mod.oracle_layered(k, a, b, r0, R)

    out = _maybe_out(config)
    levels = []
    timings = {}
    target_h, refinements = config.resolve_geometry()
    meshes = _mesh_ladder(R, [r0], target_h, refinements)
    for lvl, mesh in enumerate(meshes):
        t1 = time.perf_counter()
        d_hom = dtn_mod.schur_dtn(mesh, sig_hom)
        d_lay = dtn_mod.schur_dtn(mesh, sig_lay)
        est_hom = _estimates(d_hom, kmax)
        est_lay = _estimates(d_lay, kmax)
        record = {
            "level": lvl, "h": mesh.h, "n_nodes": mesh.n_nodes,
            "n_triangles": mesh.n_triangles, "n_boundary": len(mesh.boundary_nodes),
            "homogeneous_max_rel_k8": _oracle_gate([(est_hom, oracle_hom)]),
            "layered_max_rel_k8": _oracle_gate([(est_lay, oracle_lay)]),
            "homogeneous_calibration": _calibration([(est_hom, oracle_hom)]),
            "layered_calibration": _calibration([(est_lay, oracle_lay)]),
            "eigenvalues_homogeneous": {str(k): est_hom[k] for k in est_hom},
            "eigenvalues_layered": {str(k): est_lay[k] for k in est_lay},
        }
        levels.append(record)
        timings[f"level_{lvl}_s"] = time.perf_counter() - t1
        if out is not None:
            dtn_mod.eigenvalue_table_to_csv(
                _eig_csv_rows(est_hom, oracle_hom), out / f"eigenvalues_homogeneous_level{lvl}.csv")
            dtn_mod.eigenvalue_table_to_csv(
                _eig_csv_rows(est_lay, oracle_lay), out / f"eigenvalues_layered_level{lvl}.csv")

    def rate(errs):
        hs = np.log([lv["h"] for lv in levels])
        es = np.log(errs)
        return float(np.polyfit(hs, es, 1)[0]) if len(levels) > 1 else float("nan")

    summary = {
        "homogeneous_rate": rate([lv["homogeneous_max_rel_k8"] for lv in levels]),
        "layered_rate": rate([lv["layered_max_rel_k8"] for lv in levels]),
        "oracle_collapse_dev": max(
            abs(dtn_mod.oracle_layered(k, a, a, r0, R) - a * oracle_hom(k))
            for k in range(1, kmax + 1)),
        "oracle_small_r0_dev": max(
            abs(dtn_mod.oracle_layered(k, a, b, 1e-6 * R, R) - a * oracle_hom(k))
            for k in range(1, kmax + 1)),
        "probes": probes,
    }
    verdicts, passed = derive_verdicts(config.scenario, levels, summary)
    timings["total_s"] = time.perf_counter() - t0
    return ExperimentReport(scenario=config.scenario,
                            config=_config_echo(config, target_h, refinements,
                                                sigma=sigma_cfg, probes=probes),
                            levels=levels, summary=summary, verdicts=verdicts,
                            passed=passed, timings=timings)


def _run_invariance(config, sigma_cfg, diffeo_cfg, interfaces, extras=None):
    """Shared body of the push-forward invariance scenarios."""
    t0 = time.perf_counter()
    probes = config.probes or dtn_mod.DEFAULT_PROBE_DEPTH
    R = config.R
    sig_base = field_from_config(sigma_cfg)
    f_map = _validated_diffeo(diffeo_cfg, R, config.seed)
    sig_pushed = pushforward(f_map, sig_base)
    oracle = analytic_oracle_fn(sigma_cfg, R)
    if oracle is None:
        raise ConfigError(
            "invariance scenarios need a base sigma covered by the disk oracles "
            "(isotropic-constant layers) to calibrate their tolerances")

    out = _maybe_out(config)
    levels = []
    timings = {}
    target_h, refinements = config.resolve_geometry()
    meshes = _mesh_ladder(R, interfaces, target_h, refinements)
    for lvl, mesh in enumerate(meshes):
        t1 = time.perf_counter()
        d_base = dtn_mod.schur_dtn(mesh, sig_base)
        d_pushed = dtn_mod.schur_dtn(mesh, sig_pushed)
        est_base = _estimates(d_base, probes)
        est_pushed = _estimates(d_pushed, probes)
        pairs = [(est_base, oracle), (est_pushed, oracle)]
        levels.append({
            "level": lvl, "h": mesh.h, "n_nodes": mesh.n_nodes,
            "n_boundary": len(mesh.boundary_nodes),
            "distance": dtn_mod.dtn_distance(d_base, d_pushed, probes),
            "calibration": _calibration(pairs),
            "energy_gap_max": _energy_gap_max(d_base, d_pushed, probes),
            "oracle_rel_err_k8": _oracle_gate(pairs),
        })
        timings[f"level_{lvl}_s"] = time.perf_counter() - t1
        if out is not None:
            dtn_mod.dtn_to_csv(d_base, out / f"dtn_base_level{lvl}.csv")
            dtn_mod.dtn_to_csv(d_pushed, out / f"dtn_pushed_level{lvl}.csv")

    summary = {"probes": probes}
    if extras is not None:
        summary.update(extras(meshes[-1], sig_base, sig_pushed, f_map, out))
    verdicts, passed = derive_verdicts(config.scenario, levels, summary)
    timings["total_s"] = time.perf_counter() - t0
    return ExperimentReport(scenario=config.scenario,
                            config=_config_echo(config, target_h, refinements,
                                                sigma=sigma_cfg, diffeo=diffeo_cfg,
                                                probes=probes),
                            levels=levels, summary=summary, verdicts=verdicts,
                            passed=passed, timings=timings)


@_scenario("prop2_invariance")
def run_prop2_invariance(config):
    """DtN invariance of sigma under a boundary-fixing diffeomorphism.

    Compares the operator of the base field with that of its push-forward
    on meshes conforming to both the inclusion circle and its image.
    """
    sigma_cfg = config.sigma or _default_sigma(config)
    diffeo_cfg = config.diffeo or {"kind": "cloak", "eps": config.eps,
                                   "r_D": config.r_D, "R": config.R}
    interfaces = sorted({config.eps * config.r_D, config.r_D}
                        if diffeo_cfg.get("kind") == "cloak"
                        else {config.r_D})
    return _run_invariance(config, sigma_cfg, diffeo_cfg, interfaces)


@_scenario("full_pushforward_illusion")
def run_full_pushforward_illusion(config):
    """Domain illusion: the full push-forward (anisotropic background plus
    relocated inclusion) reproduces the DtN map while the apparent
    inclusion shrinks to the image circle. Renders the pushed field."""
    sigma_cfg = config.sigma or _default_sigma(config)
    diffeo_cfg = config.diffeo or {"kind": "cloak", "eps": config.eps,
                                   "r_D": config.r_D, "R": config.R}
    interfaces = sorted({config.eps * config.r_D, config.r_D})

    def extras(mesh, sig_base, sig_pushed, f_map, out):
        r_in = config.eps * config.r_D
        radii = np.linspace(r_in * 1.05, config.R * 0.995, 48)
        radii = radii[np.abs(radii - config.r_D) > 1e-6]
        angles = np.linspace(0.0, 2.0 * np.pi, 7)[:-1]
        pts = np.array([[r * np.cos(t), r * np.sin(t)] for r in radii for t in angles])
        eigs = np.linalg.eigvalsh(sig_pushed.evaluate_many(pts))
        # 2-d push-forwards preserve the determinant: the eigenvalue product
        # must equal det of the base field at the preimage (1 on the annulus)
        det_pre = np.linalg.det(sig_base.evaluate_many(inverse_apply_many(f_map, pts)))
        summary = {
            "max_anisotropy_ratio": float((eigs[:, 1] / eigs[:, 0]).max()),
            "eig_product_max_dev": float(np.abs(eigs[:, 0] * eigs[:, 1] - det_pre).max()),
            "apparent_inclusion_radius": r_in,
        }
        if out is not None:
            render_field_svg(mesh, sig_pushed, out / "sigma_pushed.svg")
            render_field_svg(mesh, sig_base, out / "sigma_base.svg")
        return summary

    return _run_invariance(config, sigma_cfg, diffeo_cfg, interfaces, extras)


@_scenario("property_illusion")
def run_property_illusion(config):
    """Property illusion: an interior diffeomorphism changes the inclusion
    tensor pointwise while leaving the DtN map invariant; records the
    pointwise property gap and the 2-d determinant signature."""
    sigma_cfg = config.sigma or _default_sigma(config)
    diffeo_cfg = config.diffeo or {"kind": "interior", "c": 0.3,
                                   "r_D": config.r_D, "R": config.R}

    def extras(mesh, sig_base, sig_pushed, f_map, out):
        rng = np.random.default_rng(config.seed)
        r = config.r_D * np.sqrt(rng.uniform(0.01, 0.95, 512))
        t = rng.uniform(0.0, 2.0 * np.pi, 512)
        pts = np.column_stack([r * np.cos(t), r * np.sin(t)])
        b1 = sig_base.evaluate_many(pts)
        b2 = sig_pushed.evaluate_many(pts)
        gaps = np.linalg.norm(b2 - b1, axis=(1, 2)) / np.linalg.norm(b1, axis=(1, 2))
        det_dev = np.abs(np.linalg.det(b2)
                         - np.linalg.det(sig_base.evaluate_many(
                             inverse_apply_many(f_map, pts)))).max()
        just_in = np.column_stack([np.cos(t), np.sin(t)]) * config.r_D * (1.0 - 1e-6)
        background = homogeneous_field(1.0)
        jump_base = check_jump_condition(background, sig_base, just_in)
        jump_pushed = check_jump_condition(background, sig_pushed, just_in)
        return {
            "max_rel_property_gap": float(gaps.max()),
            "det_preservation_dev": float(det_dev),
            "jump_base_pass": bool(jump_base.passed),
            "jump_pushed_pass": bool(jump_pushed.passed),
        }

    return _run_invariance(config, sigma_cfg, diffeo_cfg, [config.r_D], extras)


@_scenario("domain_distinguish")
def run_domain_distinguish(config):
    """With a known background, different inclusion disks yield DtN maps
    separated by far more than the discretization error, matching the
    analytic eigenvalue gap.

    Probes default to depth 8 here: the distinguishability bound compares
    a converged operator gap against the calibration scale, which is only
    meaningful on the frequency band the convergence study certifies.
    """
    t0 = time.perf_counter()
    probes = config.probes if config.probes is not None else 8
    R = config.R
    sigma_1 = config.sigma or {"case": 1, "background": {"kind": "iso_const", "value": 1.0},
                               "inclusion": {"kind": "iso_const", "value": 2.0},
                               "r_D": config.r_D}
    sigma_2 = config.sigma_2 or {**sigma_1, "r_D": config.r_D / 2.0}
    lay1 = _layered_params(sigma_1)
    lay2 = _layered_params(sigma_2)
    if lay1 is None or lay2 is None:
        raise ConfigError("domain_distinguish needs isotropic-constant layered fields")
    sig1 = field_from_config(sigma_1)
    sig2 = field_from_config(sigma_2)
    oracle1 = analytic_oracle_fn(sigma_1, R)
    oracle2 = analytic_oracle_fn(sigma_2, R)

    # the distinguishability hypothesis: a determinant jump on both interfaces
    angles = np.linspace(0.0, 2.0 * np.pi, 33)[:-1]
    background = homogeneous_field(lay1[0])
    jump_reports = []
    for r0 in (lay1[2], lay2[2]):
        ring = np.column_stack([np.cos(angles), np.sin(angles)]) * r0 * (1.0 - 1e-9)
        fld = sig1 if r0 == lay1[2] else sig2
        jump_reports.append(check_jump_condition(background, fld, ring))

    out = _maybe_out(config)
    interfaces = sorted({lay1[2], lay2[2]})
    levels = []
    timings = {}
    target_h, refinements = config.resolve_geometry()
    meshes = _mesh_ladder(R, interfaces, target_h, refinements)
    for lvl, mesh in enumerate(meshes):
        t1 = time.perf_counter()
        d1 = dtn_mod.schur_dtn(mesh, sig1)
        d2 = dtn_mod.schur_dtn(mesh, sig2)
        est1 = _estimates(d1, probes)
        est2 = _estimates(d2, probes)
        pairs = [(est1, oracle1), (est2, oracle2)]
        levels.append({
            "level": lvl, "h": mesh.h, "n_nodes": mesh.n_nodes,
            "n_boundary": len(mesh.boundary_nodes),
            "distance": dtn_mod.dtn_distance(d1, d2, probes),
            "calibration": _calibration(pairs),
            "oracle_rel_err_k8": _oracle_gate(pairs),
        })
        timings[f"level_{lvl}_s"] = time.perf_counter() - t1
        if out is not None:
            dtn_mod.eigenvalue_table_to_csv(_eig_csv_rows(est1, oracle1),
                                            out / f"eigenvalues_sigma1_level{lvl}.csv")
            dtn_mod.eigenvalue_table_to_csv(_eig_csv_rows(est2, oracle2),
                                            out / f"eigenvalues_sigma2_level{lvl}.csv")

    summary = {
        "probes": probes,
        "oracle_gap": max(abs(oracle1(k) - oracle2(k)) for k in range(1, probes + 1)),
        "jump_1_pass": bool(jump_reports[0].passed),
        "jump_2_pass": bool(jump_reports[1].passed),
        "final_distance": levels[-1]["distance"],
    }
    verdicts, passed = derive_verdicts(config.scenario, levels, summary)
    timings["total_s"] = time.perf_counter() - t0
    return ExperimentReport(scenario=config.scenario,
                            config=_config_echo(config, target_h, refinements,
                                                sigma=sigma_1, sigma_2=sigma_2,
                                                probes=probes),
                            levels=levels, summary=summary, verdicts=verdicts,
                            passed=passed, timings=timings)


@_scenario("small_inclusion_trend")
def run_small_inclusion_trend(config):
    """Near-cloaking trend: the DtN distance between a shrinking inclusion
    and the homogeneous disk decays like the inclusion area."""
    t0 = time.perf_counter()
    probes = config.probes or dtn_mod.DEFAULT_PROBE_DEPTH
    R, r_D = config.R, config.r_D
    inclusion = (config.sigma or {}).get("inclusion", {"kind": "iso_const", "value": 2.0})
    a_bg = (config.sigma or {}).get("background", {"kind": "iso_const", "value": 1.0})
    sig_hom = field_from_config({"case": 3, "background": a_bg})

    out = _maybe_out(config)
    levels = []
    timings = {}
    # fixed fine mesh per inclusion size: no refinement ladder by default
    target_h, refinements = config.resolve_geometry(default_h=0.05, default_refinements=0)
    for eps in config.eps_list:
        t1 = time.perf_counter()
        r_eps = eps * r_D
        sigma_cfg = {"case": 1, "background": a_bg, "inclusion": inclusion, "r_D": r_eps}
        sig = field_from_config(sigma_cfg)
        oracle = analytic_oracle_fn(sigma_cfg, R)
        oracle_hom = analytic_oracle_fn({"case": 3, "background": a_bg}, R)
        mesh = build_disk_mesh(R, [r_eps], target_h)
        for _ in range(refinements):
            mesh = refine(mesh)
        d_inc = dtn_mod.schur_dtn(mesh, sig)
        d_hom = dtn_mod.schur_dtn(mesh, sig_hom)
        pairs = [(p, o) for p, o in [(_estimates(d_inc, probes), oracle),
                                     (_estimates(d_hom, probes), oracle_hom)]
                 if o is not None]
        levels.append({
            "eps": eps, "h": mesh.h, "n_nodes": mesh.n_nodes,
            "distance": dtn_mod.dtn_distance(d_inc, d_hom, probes),
            "calibration": _calibration(pairs),
            "oracle_rel_err_k8": _oracle_gate(pairs),
        })
        timings[f"eps_{eps}_s"] = time.perf_counter() - t1

    dists = [lv["distance"] for lv in levels]
    eps_arr = np.asarray(config.eps_list)
    pairwise = [float(np.log(dists[i] / dists[i + 1]) / np.log(eps_arr[i] / eps_arr[i + 1]))
                if dists[i + 1] > 0 else float("inf")
                for i in range(len(dists) - 1)]
    if len(dists) > 1 and all(d > 0 for d in dists):
        fitted = float(np.polyfit(np.log(eps_arr), np.log(dists), 1)[0])
    else:
        fitted = float("nan")
    summary = {"probes": probes, "pairwise_slopes": pairwise, "fitted_slope": fitted}
    verdicts, passed = derive_verdicts(config.scenario, levels, summary)
    timings["total_s"] = time.perf_counter() - t0
    if out is not None:
        with open(out / "distances.csv", "w") as f:
            f.write("eps,distance,calibration\n")
            for lv in levels:
                f.write(f"{lv['eps']:.16e},{lv['distance']:.16e},{lv['calibration']:.16e}\n")
    return ExperimentReport(scenario=config.scenario,
                            config=_config_echo(config, target_h, refinements,
                                                sigma={"background": a_bg,
                                                       "inclusion": inclusion},
                                                probes=probes),
                            levels=levels, summary=summary, verdicts=verdicts,
                            passed=passed, timings=timings)


# ---------------------------------------------------------------------------
# running and persistence

def run_scenario(config):
    return SCENARIOS[config.scenario](config)


def write_report(report, out_dir, force=False):
    """Persist report.json (deterministic bytes) and timings.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "report.json"
    if target.exists() and not force:
        raise FileExistsError(f"{target} exists; pass --force to overwrite")
    with open(target, "w") as f:
        json.dump(report.to_json_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    with open(out / "timings.json", "w") as f:
        json.dump(report.timings, f, indent=2, sort_keys=True)
        f.write("\n")
    return target


def regrade_report(data):
    """Recompute verdicts from a persisted report dict; returns
    (verdicts, passed, consistent_with_recorded)."""
    verdicts, passed = derive_verdicts(data["scenario"], data["levels"], data["summary"])
    consistent = verdicts == data.get("verdicts") and passed == data.get("passed")
    return verdicts, passed, consistent
