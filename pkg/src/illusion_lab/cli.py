"""Command-line entry point.

Exit codes: 0 scenario pass, 1 scenario fail (numeric criteria not met),
2 usage/config error, 3 numerical failure (solver or assembly). Reports
are written before exiting; error details go to stderr as text and to the
output directory as JSON when one is configured.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dtn as dtn_mod
from . import experiments, fem
from .conductivity import FieldError, field_from_config
from .diffeo import DiffeoError, diffeo_from_config, pushforward
from .experiments import ConfigError
from .mesh import MeshError, build_disk_mesh, mesh_quality, refine, save_mesh
from .render import render_field_svg

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _load_config(path):
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config not found: {p}")
    try:
        with open(p) as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {p} is not valid JSON: {exc}") from None


def _geometry_mesh(cfg):
    geo = cfg.get("geometry", cfg)
    mesh = build_disk_mesh(geo.get("R", 2.0), geo.get("interface_radii", []),
                           geo.get("target_h", 0.1))
    for _ in range(int(geo.get("refinements", 0))):
        mesh = refine(mesh)
    return mesh


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_mesh(args):
    cfg = _load_config(args.config)
    mesh = _geometry_mesh(cfg)
    out = _out_dir(args)
    save_mesh(mesh, out / "mesh.txt")
    q = mesh_quality(mesh)
    with open(out / "quality.json", "w") as f:
        json.dump({"min_angle_deg": q.min_angle_deg, "max_aspect": q.max_aspect,
                   "h": q.h, "n_nodes": q.n_nodes, "n_triangles": q.n_triangles},
                  f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"mesh: {q.n_nodes} nodes, {q.n_triangles} triangles, h={q.h:.6g}, "
          f"min angle {q.min_angle_deg:.2f} deg -> {out / 'mesh.txt'}")
    return EXIT_PASS


def _cmd_solve(args):
    cfg = _load_config(args.config)
    mesh = _geometry_mesh(cfg)
    sigma = field_from_config(cfg["sigma"])
    datum_cfg = cfg.get("datum", {"k": 1, "parity": "cos"})
    datum = fem.sample_boundary_datum(mesh, datum_cfg.get("k", 1),
                                      datum_cfg.get("parity", "cos"))
    system = fem.assemble(mesh, sigma)
    solution = fem.solve_dirichlet(system, datum)
    out = _out_dir(args)
    fem.solution_to_csv(mesh, solution, out / "solution.csv")
    with open(out / "solve.json", "w") as f:
        json.dump({"energy": fem.dirichlet_energy(system, solution),
                   "residual": solution.residual,
                   "datum": datum_cfg}, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"solved {mesh.n_nodes} nodes, energy "
          f"{fem.dirichlet_energy(system, solution):.10g} -> {out / 'solution.csv'}")
    return EXIT_PASS


def _cmd_dtn(args):
    cfg = _load_config(args.config)
    mesh = _geometry_mesh(cfg)
    sigma = field_from_config(cfg["sigma"])
    probes = args.probes or cfg.get("probes", dtn_mod.DEFAULT_PROBE_DEPTH)
    d = dtn_mod.schur_dtn(mesh, sigma)
    oracle = experiments.analytic_oracle_fn(cfg["sigma"], mesh.outer_radius)
    rows = []
    for k in range(1, probes + 1):
        est = dtn_mod.dtn_eigenvalue_estimate(d, k)
        rows.append((k, est, oracle(k) if oracle else None))
    out = _out_dir(args)
    dtn_mod.dtn_to_csv(d, out / "dtn.csv")
    dtn_mod.eigenvalue_table_to_csv(rows, out / "eigenvalues.csv")
    print(f"dtn: {d.n_boundary} boundary nodes, eigenvalue estimates k=1..{probes} "
          f"-> {out / 'eigenvalues.csv'}")
    return EXIT_PASS


def _cmd_pushforward(args):
    cfg = _load_config(args.config)
    mesh = _geometry_mesh(cfg)
    sigma = field_from_config(cfg["sigma"])
    f_map = diffeo_from_config(cfg["diffeo"], default_R=mesh.outer_radius)
    pushed = pushforward(f_map, sigma)
    out = _out_dir(args)
    render_field_svg(mesh, pushed, out / "sigma_pushed.svg")
    from .mesh import triangle_centroids
    pts = triangle_centroids(mesh)
    mats = pushed.evaluate_many(pts)
    eigs = np.linalg.eigvalsh(mats)
    with open(out / "pushed_samples.csv", "w") as f:
        f.write("x,y,s11,s12,s22,eig_min,eig_max\n")
        for (x, y), m, e in zip(pts, mats, eigs):
            f.write(f"{x:.16e},{y:.16e},{m[0, 0]:.16e},{m[0, 1]:.16e},"
                    f"{m[1, 1]:.16e},{e[0]:.16e},{e[1]:.16e}\n")
    print(f"pushforward sampled at {len(pts)} centroids -> {out / 'pushed_samples.csv'}")
    return EXIT_PASS


def _apply_overrides(data, args):
    if args.seed is not None:
        data["seed"] = args.seed
    if args.refinements is not None:
        data.setdefault("geometry", {})["refinements"] = args.refinements
    if args.probes is not None:
        data["probes"] = args.probes
    return data


def _run_one(data, out_dir, force):
    config = experiments.config_from_dict(data)
    config.out_dir = str(out_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "report.json"
    if target.exists() and not force:
        raise ConfigError(f"{target} exists; pass --force to overwrite")
    report = experiments.run_scenario(config)
    experiments.write_report(report, out, force=True)
    return report


def _cmd_experiment(args):
    data = _load_config(args.config)
    out = Path(args.out)
    if "scenarios" in data:
        entries = data["scenarios"]
        if not isinstance(entries, list) or not entries:
            raise ConfigError("'scenarios' must be a non-empty list")
        jobs = [(_apply_overrides(dict(e), args),
                 out / e.get("scenario", f"scenario_{i}"))
                for i, e in enumerate(entries)]
        threads = int(os.environ.get("ILLUSION_LAB_THREADS", os.cpu_count() or 1))
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            reports = list(pool.map(lambda j: _run_one(j[0], j[1], args.force), jobs))
    else:
        reports = [_run_one(_apply_overrides(dict(data), args), out, args.force)]

    worst = EXIT_PASS
    for report in reports:
        for name, ok in report.verdicts.items():
            print(f"[{'PASS' if ok else 'FAIL'}] {report.scenario}: {name}")
        if not report.passed:
            worst = EXIT_FAIL
    return worst


def _cmd_report(args):
    p = Path(args.report)
    if not p.exists():
        raise ConfigError(f"report not found: {p}")
    try:
        with open(p) as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"report {p} is not valid JSON: {exc}") from None
    verdicts, passed, consistent = experiments.regrade_report(data)
    for name, ok in verdicts.items():
        print(f"[{'PASS' if ok else 'FAIL'}] {data['scenario']}: {name}")
    if not consistent:
        print("recorded verdicts do not match the recomputed ones", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_PASS if passed else EXIT_FAIL


def build_parser():
    parser = argparse.ArgumentParser(
        prog="illusion-lab",
        description="Conductivity cloaking and illusion experiments on the disk")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", required=True, help="JSON config path")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--refinements", type=int, default=None)
        p.add_argument("--probes", type=int, default=None)
        p.add_argument("--force", action="store_true",
                       help="overwrite an existing report.json")
        p.add_argument("-v", "--verbose", action="count", default=0)

    common(sub.add_parser("mesh", help="build and save a mesh"))
    common(sub.add_parser("solve", help="solve one Dirichlet problem"))
    common(sub.add_parser("dtn", help="compute a DtN matrix and eigenvalue table"))
    common(sub.add_parser("pushforward", help="evaluate and render a push-forward"))
    common(sub.add_parser("experiment", help="run a named scenario"))
    rep = sub.add_parser("report", help="re-derive verdicts from a report.json")
    rep.add_argument("report", help="path to report.json")
    return parser


_HANDLERS = {
    "mesh": _cmd_mesh,
    "solve": _cmd_solve,
    "dtn": _cmd_dtn,
    "pushforward": _cmd_pushforward,
    "experiment": _cmd_experiment,
    "report": _cmd_report,
}


def _record_error(args, exc, code):
    """Human-readable message on stderr, machine-readable JSON on disk."""
    kind = "numerical failure" if code == EXIT_NUMERIC else "error"
    print(f"{kind}: {exc}", file=sys.stderr)
    out = getattr(args, "out", None)
    if out is not None:
        try:
            path = Path(out)
            path.mkdir(parents=True, exist_ok=True)
            with open(path / "error.json", "w") as f:
                json.dump({"error": str(exc), "type": type(exc).__name__,
                           "exit_code": code}, f, indent=2, sort_keys=True)
                f.write("\n")
        except OSError:
            pass
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0,) else 0
    try:
        return _HANDLERS[args.command](args)
    except (fem.AssemblyError, fem.SolverError) as exc:
        return _record_error(args, exc, EXIT_NUMERIC)
    except (ConfigError, MeshError, FieldError, DiffeoError, FileExistsError,
            KeyError, ValueError) as exc:
        return _record_error(args, exc, EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main(argv=None))
