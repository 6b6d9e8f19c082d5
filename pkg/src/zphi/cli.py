"""Command-line front end: every analysis as a subcommand with deterministic
machine-readable outputs and a run manifest.

CSV is the canonical format (header row, LF endings, UTF-8, floats at 17
significant digits); ``--format json`` mirrors the same tables.  Exit codes:
0 success, 1 domain or runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import classify_regime, portrait_bundle
from .core import DomainError, ModelParams, PhasePoint
from .dynamics import IntegratorConfig, integrate
from .fixed_points import (
    NoExclusionBandError,
    branch_sweep,
    critical_params,
    find_fixed_points,
    z_bounds,
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        value = value.item()
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def _write_table(outdir: Path, name: str, fmt: str, columns: list[str],
                 rows: list[list], outputs: list[dict]) -> None:
    if fmt == "csv":
        path = outdir / f"{name}.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    else:
        path = outdir / f"{name}.json"
        payload = {"columns": columns,
                   "rows": [[_jsonable(v) for v in row] for row in rows]}
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    outputs.append({"file": path.name, "rows": len(rows)})


def _write_manifest(outdir: Path, subcommand: str, parameters: dict,
                    outputs: list[dict]) -> None:
    manifest = {
        "tool_version": __version__,
        "subcommand": subcommand,
        "parameters": {k: _jsonable(v) for k, v in sorted(parameters.items())},
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "outputs": outputs,
    }
    with open(outdir / "manifest.json", "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _outdir(args) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _params(args) -> ModelParams:
    return ModelParams(delta=args.delta, lambda_ratio=args.lambda_ratio,
                       k=args.k)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_fixed_points(args) -> int:
    outdir = _outdir(args)
    fps = find_fixed_points(_params(args), samples=args.samples)
    rows = [[f.z_star, f.phi_star, f.energy, f.classification, f.branch_sign]
            for f in sorted(fps, key=lambda f: (f.phi_star, f.z_star))]
    outputs: list[dict] = []
    _write_table(outdir, "fixed_points", args.format,
                 ["z", "phi", "energy", "classification", "branch_sign"],
                 rows, outputs)
    _write_manifest(outdir, "fixed-points",
                    {"delta": args.delta, "lambda_ratio": args.lambda_ratio,
                     "k": args.k, "samples": args.samples,
                     "format": args.format}, outputs)
    return 0


def cmd_critical(args) -> int:
    outdir = _outdir(args)
    cp = critical_params(args.lambda_ratio)
    outputs: list[dict] = []
    _write_table(outdir, "critical", args.format,
                 ["lambda_ratio", "z_c", "k_c_minus", "k_c_plus"],
                 [[cp.lambda_ratio, cp.z_c, cp.k_c_minus, cp.k_c_plus]],
                 outputs)
    _write_manifest(outdir, "critical",
                    {"lambda_ratio": args.lambda_ratio,
                     "format": args.format}, outputs)
    return 0


def cmd_bounds(args) -> int:
    outdir = _outdir(args)
    try:
        z_minus, z_plus = z_bounds(args.delta, args.lambda_ratio)
    except NoExclusionBandError as exc:
        print(f"no real bounds: {exc}", file=sys.stderr)
        return 1
    outputs: list[dict] = []
    _write_table(outdir, "bounds", args.format, ["z_minus", "z_plus"],
                 [[z_minus, z_plus]], outputs)
    _write_manifest(outdir, "bounds",
                    {"delta": args.delta,
                     "lambda_ratio": args.lambda_ratio,
                     "format": args.format}, outputs)
    return 0


def cmd_trajectory(args) -> int:
    outdir = _outdir(args)
    cfg = IntegratorConfig(abs_tol=args.abs_tol, rel_tol=args.rel_tol,
                           tau_max=args.tau_max, output_stride=args.stride,
                           boundary_margin=args.boundary_margin)
    traj = integrate(_params(args), PhasePoint(args.z0, args.phi0), cfg)
    rows = [[t, z, phi, e] for t, z, phi, e in
            zip(traj.taus, traj.zs, traj.phis, traj.energies)]
    outputs: list[dict] = []
    _write_table(outdir, "trajectory", args.format,
                 ["tau", "z", "phi", "energy"], rows, outputs)
    _write_manifest(outdir, "trajectory",
                    {"delta": args.delta, "lambda_ratio": args.lambda_ratio,
                     "k": args.k, "z0": args.z0, "phi0": args.phi0,
                     "tau_max": args.tau_max, "abs_tol": args.abs_tol,
                     "rel_tol": args.rel_tol, "stride": args.stride,
                     "boundary_margin": args.boundary_margin,
                     "termination": traj.termination,
                     "energy_drift": traj.energy_drift,
                     "format": args.format}, outputs)
    return 0


def cmd_bifurcation(args) -> int:
    outdir = _outdir(args)
    table = branch_sweep(_params(args), args.sweep,
                         (args.sweep_from, args.sweep_to), args.steps,
                         samples=args.samples)
    rows = []
    error_rows = []
    for row in table.rows:
        if row.error is not None:
            error_rows.append([row.sweep_value, row.error])
            continue
        for f in row.fixed_points:
            rows.append([row.sweep_value, f.z_star, f.phi_star,
                         f.classification])
    outputs: list[dict] = []
    _write_table(outdir, "bifurcation", args.format,
                 ["sweep_value", "z", "phi", "classification"], rows, outputs)
    fold_rows = [[f.phi_star, f.below, f.above, f.count_below, f.count_above]
                 for f in table.folds]
    _write_table(outdir, "bifurcation_folds", args.format,
                 ["phi", "below", "above", "count_below", "count_above"],
                 fold_rows, outputs)
    if error_rows:
        _write_table(outdir, "bifurcation_errors", args.format,
                     ["sweep_value", "error"], error_rows, outputs)
    _write_manifest(outdir, "bifurcation",
                    {"delta": args.delta, "lambda_ratio": args.lambda_ratio,
                     "k": args.k, "sweep": args.sweep,
                     "from": args.sweep_from, "to": args.sweep_to,
                     "steps": args.steps, "samples": args.samples,
                     "format": args.format}, outputs)
    return 0


def cmd_classify(args) -> int:
    outdir = _outdir(args)
    report = classify_regime(_params(args), samples=args.samples)
    outputs: list[dict] = []
    if args.format == "json":
        payload = {
            "params": {"delta": report.params.delta,
                       "lambda_ratio": report.params.lambda_ratio,
                       "k": report.params.k},
            "regime": report.regime,
            "fixed_point_counts": report.fixed_point_counts,
            "critical_window": (list(report.critical_window)
                                if report.critical_window else None),
            "notes": list(report.notes),
        }
        path = outdir / "regime.json"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
        outputs.append({"file": path.name, "rows": 1})
    else:
        window = report.critical_window or (math.nan, math.nan)
        _write_table(outdir, "regime", args.format,
                     ["delta", "lambda_ratio", "k", "regime", "count_phi0",
                      "count_phi_pi", "k_c_minus", "k_c_plus"],
                     [[report.params.delta, report.params.lambda_ratio,
                       report.params.k, report.regime,
                       report.fixed_point_counts["phi=0"],
                       report.fixed_point_counts["phi=pi"],
                       window[0], window[1]]], outputs)
        _write_table(outdir, "regime_notes", args.format, ["note"],
                     [[n] for n in report.notes], outputs)
    _write_manifest(outdir, "classify",
                    {"delta": args.delta, "lambda_ratio": args.lambda_ratio,
                     "k": args.k, "samples": args.samples,
                     "format": args.format}, outputs)
    return 0


def cmd_portrait(args) -> int:
    outdir = _outdir(args) / "portrait"
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = IntegratorConfig(abs_tol=args.abs_tol, rel_tol=args.rel_tol,
                           tau_max=args.tau_max, output_stride=args.stride)
    survey = None
    if args.survey_points is not None:
        from .analysis import default_survey
        survey = default_survey(_params(args), n=args.survey_points)
    bundle = portrait_bundle(_params(args), survey=survey, cfg=cfg,
                             landscape_shape=(args.grid_phi, args.grid_z))

    outputs: list[dict] = []
    fp_rows = [[f.z_star, f.phi_star, f.energy, f.classification,
                f.branch_sign]
               for f in bundle.fixed_points]
    _write_table(outdir, "fixed_points", args.format,
                 ["z", "phi", "energy", "classification", "branch_sign"],
                 fp_rows, outputs)

    index_rows = []
    for i, st in enumerate(bundle.trajectories):
        traj = st.trajectory
        name = f"trajectory_{i:03d}"
        rows = [[t, z, phi, e] for t, z, phi, e in
                zip(traj.taus, traj.zs, traj.phis, traj.energies)]
        _write_table(outdir, name, args.format,
                     ["tau", "z", "phi", "energy"], rows, outputs)
        index_rows.append([name, st.z0, st.phi0, traj.termination,
                           traj.phase_class, traj.energy_drift])
    _write_table(outdir, "trajectories", args.format,
                 ["file", "z0", "phi0", "termination", "phase_class",
                  "energy_drift"], index_rows, outputs)

    grid = bundle.landscape
    land_rows = []
    for i, zv in enumerate(grid.z_axis):
        for j, phiv in enumerate(grid.phi_axis):
            inside = bool(grid.in_domain[i, j])
            land_rows.append([float(phiv), float(zv),
                              float(grid.h_values[i, j]) if inside
                              else math.nan,
                              int(inside)])
    _write_table(outdir, "landscape", args.format,
                 ["phi", "z", "h", "in_domain"], land_rows, outputs)

    if bundle.separatrix is not None:
        sep_rows = [[float(phi), float(z)] for phi, z in
                    bundle.separatrix.curve]
        _write_table(outdir, "separatrix", args.format, ["phi", "z"],
                     sep_rows, outputs)

    _write_table(outdir, "notes", args.format, ["note"],
                 [[n] for n in bundle.notes], outputs)
    _write_manifest(outdir, "portrait",
                    {"delta": args.delta, "lambda_ratio": args.lambda_ratio,
                     "k": args.k, "tau_max": args.tau_max,
                     "abs_tol": args.abs_tol, "rel_tol": args.rel_tol,
                     "stride": args.stride,
                     "survey_points": args.survey_points,
                     "grid_phi": args.grid_phi, "grid_z": args.grid_z,
                     "format": args.format}, outputs)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(sp, with_k: bool = True, k_required: bool = True) -> None:
    sp.add_argument("--delta", type=float, required=True,
                    help="dimensionless detuning")
    sp.add_argument("--lambda-ratio", type=float, required=True,
                    dest="lambda_ratio",
                    help="intra-ensemble over field coupling ratio")
    if with_k:
        sp.add_argument("--k", type=float, required=k_required,
                        default=None if k_required else 0.0,
                        help="excitation ratio (twice the conserved "
                             "excitation number over the ensemble size)")
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="zphi",
        description="Mean-field phase-cylinder analysis of two condensate "
                    "modes driven by one quantized field mode.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("fixed-points",
                        help="find and classify stationary states")
    _add_common(sp)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.set_defaults(func=cmd_fixed_points)

    sp = sub.add_parser("critical",
                        help="critical cubic root and fold excitation ratios")
    sp.add_argument("--lambda-ratio", type=float, required=True,
                    dest="lambda_ratio")
    sp.add_argument("--out", default=".")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_critical)

    sp = sub.add_parser("bounds",
                        help="edges of the complex-excitation-ratio z band")
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--lambda-ratio", type=float, required=True,
                    dest="lambda_ratio")
    sp.add_argument("--out", default=".")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("trajectory", help="integrate one trajectory")
    _add_common(sp)
    sp.add_argument("--z0", type=float, required=True)
    sp.add_argument("--phi0", type=float, required=True)
    sp.add_argument("--tau-max", type=float, default=100.0, dest="tau_max")
    sp.add_argument("--abs-tol", type=float, default=1e-10, dest="abs_tol")
    sp.add_argument("--rel-tol", type=float, default=1e-10, dest="rel_tol")
    sp.add_argument("--stride", type=int, default=1)
    sp.add_argument("--boundary-margin", type=float, default=1e-9,
                    dest="boundary_margin")
    sp.set_defaults(func=cmd_trajectory)

    sp = sub.add_parser("bifurcation",
                        help="sweep one parameter and tabulate branches")
    _add_common(sp, k_required=False)
    sp.add_argument("--sweep", choices=("k", "lambda", "delta"),
                    required=True)
    sp.add_argument("--from", type=float, required=True, dest="sweep_from")
    sp.add_argument("--to", type=float, required=True, dest="sweep_to")
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--samples", type=int, default=20_000)
    sp.set_defaults(func=cmd_bifurcation)

    sp = sub.add_parser("classify", help="regime report for one parameter set")
    _add_common(sp)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.set_defaults(func=cmd_classify, format="json")

    sp = sub.add_parser("portrait",
                        help="full portrait bundle: fixed points, survey "
                             "trajectories, separatrix, landscape")
    _add_common(sp)
    sp.add_argument("--tau-max", type=float, default=30.0, dest="tau_max")
    sp.add_argument("--abs-tol", type=float, default=1e-9, dest="abs_tol")
    sp.add_argument("--rel-tol", type=float, default=1e-9, dest="rel_tol")
    sp.add_argument("--stride", type=int, default=2)
    sp.add_argument("--survey-points", type=int, default=None,
                    dest="survey_points",
                    help="size of the uniform z(0) survey (default 41)")
    sp.add_argument("--grid-phi", type=int, default=201, dest="grid_phi")
    sp.add_argument("--grid-z", type=int, default=201, dest="grid_z")
    sp.set_defaults(func=cmd_portrait)

    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, NoExclusionBandError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
