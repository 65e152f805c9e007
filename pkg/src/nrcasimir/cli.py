"""Command-line interface: declarative runs with reproducible file outputs.

Every output embeds the resolved configuration and the engine version;
identical configs produce byte-identical outputs at any --threads value.
Exit codes: 0 success, 2 configuration error, 3 numerical error.
"""

import argparse
import json
import sys
from itertools import product
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import ToyGeometry, f_long, f_short
from .errors import ConfigError, EngineError
from .fieldmap import evaluate_map, scan_angle
from .interaction import (ParticleSpec, force, free_energy_exact_dipole,
                          free_energy_one_reflection, laplacian,
                          pair_free_energy_batch)
from .manybody import (Scene, axis_rotation_torque_3, forces_3,
                       net_force_and_torque, three_body_correction,
                       total_free_energy_3)
from .materials import ToyPolarizability
from .runconfig import TASKS, load_config


def _fmt(x):
    """17-significant-digit, locale-free float formatting."""
    if x is None:
        return "nan"
    return format(float(x), ".17g")


def _meta(run):
    return {"engine": "nrcasimir", "version": __version__,
            "resolved_config": run.resolved}


def _write_json(path, payload):
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def _write_csv(path, run, header, rows):
    lines = [f"# engine: nrcasimir {__version__}"]
    lines.append("# config: " + json.dumps(run.resolved, sort_keys=True))
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, (int, float,
                                                        np.floating,
                                                        type(None)))
                              else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _pair_energy(run):
    p1, p2 = run.particles
    if run.method == "exact":
        return free_energy_exact_dipole(p1, p2, run.ctx, run.policy,
                                        min_separation=run.min_separation)
    return free_energy_one_reflection(p1, p2, run.ctx, run.policy,
                                      min_separation=run.min_separation)


def _task_energy(run, outdir, formats):
    p1, p2 = run.particles
    res = _pair_energy(run)
    sep = float(np.linalg.norm(p1.position - p2.position))
    payload = _meta(run)
    payload["result"] = {
        "separation_m": sep,
        "separation_lambda_T": sep / run.ctx.lambda_T,
        "free_energy_J": res.free_energy,
        "reciprocal_J": res.reciprocal,
        "antireciprocal_J": res.antireciprocal,
        "cross_J": res.cross,
        "terms_used": res.terms_used,
        "tail_estimate_J": res.tail_estimate,
        "method": res.method,
    }
    _write_json(outdir / "energy.json", payload)
    if "csv" in formats:
        header = ["separation_m", "separation_lambda_T", "free_energy_J",
                  "reciprocal_J", "antireciprocal_J", "cross_J",
                  "terms_used", "tail_estimate_J"]
        row = [sep, sep / run.ctx.lambda_T, res.free_energy, res.reciprocal,
               res.antireciprocal, res.cross, res.terms_used,
               res.tail_estimate]
        _write_csv(outdir / "energy.csv", run, header, [row])
    return 0


def _task_force(run, outdir, formats):
    p1, p2 = run.particles
    opts = run.force_opts or {"target": 0, "method": "checked"}
    target = opts["target"]
    pt, po = (p1, p2) if target == 0 else (p2, p1)
    f_target = force(pt, po, run.ctx, run.policy, method=opts["method"],
                     branch=run.method, min_separation=run.min_separation)
    f_other = force(po, pt, run.ctx, run.policy, method=opts["method"],
                    branch=run.method, min_separation=run.min_separation)
    res = _pair_energy(run)
    payload = _meta(run)
    payload["result"] = {
        "target": target,
        "force_on_target_N": list(f_target),
        "force_on_other_N": list(f_other),
        "newton_residual_N": list(f_target + f_other),
        "free_energy_J": res.free_energy,
        "method": opts["method"],
        "branch": run.method,
    }
    _write_json(outdir / "force.json", payload)
    return 0


def _task_map(run, outdir, formats, quantity):
    p1, p2 = run.particles
    result = evaluate_map(p1, p2, run.ctx, run.grid, run.policy,
                          quantity=quantity, method=run.method,
                          min_separation=run.min_separation,
                          threads=run.threads)
    name = "map" if quantity == "energy" else "laplacian_map"
    value_col = "free_energy_J" if quantity == "energy" else "laplacian_J_per_m2"

    origin = p1.position / run.ctx.lambda_T
    points = run.grid.points(origin)
    flat = result.values.reshape(-1)
    stationary = [{
        "position_lambda_T": list(sp.position_lambda),
        "value": sp.value,
        "classification": sp.classification,
        "hessian_eigenvalues_J_per_m2": list(sp.hessian_eigenvalues),
    } for sp in result.stationary_points]

    payload = _meta(run)
    payload["result"] = {
        "quantity": quantity,
        "grid_axes": list(run.grid.axes),
        "stationary_points": stationary,
        "matsubara_terms_max": result.terms_max,
        "value_min": None if np.all(np.isnan(flat)) else float(np.nanmin(flat)),
        "value_max": None if np.all(np.isnan(flat)) else float(np.nanmax(flat)),
    }
    if "json" in formats and "csv" not in formats:
        payload["result"]["values"] = [
            [None if np.isnan(v) else v for v in row]
            for row in result.values.tolist()]
    _write_json(outdir / f"{name}.json", payload)

    if "csv" in formats:
        header = ["x_lambda_T", "y_lambda_T", "z_lambda_T", value_col]
        rows = [[points[k, 0], points[k, 1], points[k, 2], flat[k]]
                for k in range(points.shape[0])]
        _write_csv(outdir / f"{name}.csv", run, header, rows)
    if run.output.get("matrix_txt"):
        lines = [" ".join(_fmt(v) for v in row) for row in result.values]
        (outdir / f"{name}_matrix.txt").write_text("\n".join(lines) + "\n",
                                                   encoding="utf-8")
    return 0


def _task_scan_angle(run, outdir, formats):
    p1, p2 = run.particles
    scan = run.scan
    result = scan_angle(p1, p2, run.ctx, scan["radius_lambda"],
                        scan["z_lambda"], scan["samples"], run.policy,
                        run.method)
    payload = _meta(run)
    payload["result"] = {
        "radius_lambda_T": scan["radius_lambda"],
        "z_lambda_T": scan["z_lambda"],
        "maxima": [list(m) for m in result.maxima],
        "minima": [list(m) for m in result.minima],
    }
    _write_json(outdir / "scan_angle.json", payload)
    if "csv" in formats:
        rows = list(zip(result.phi, result.energies))
        _write_csv(outdir / "scan_angle.csv", run,
                   ["phi_rad", "free_energy_J"], rows)
    return 0


def _task_three_body(run, outdir, formats):
    scene = Scene(run.particles, run.ctx, run.policy,
                  min_separation=run.min_separation)
    total = total_free_energy_3(scene)
    correction = three_body_correction(scene)
    pair_parts = {}
    for i, j in ((0, 1), (0, 2), (1, 2)):
        res = free_energy_one_reflection(run.particles[i], run.particles[j],
                                         run.ctx, run.policy,
                                         min_separation=run.min_separation)
        pair_parts[f"{i}{j}"] = res.free_energy
    forces = forces_3(scene)
    net_f, net_t = net_force_and_torque(scene, forces)
    axis_t = axis_rotation_torque_3(scene)
    payload = _meta(run)
    payload["result"] = {
        "total_free_energy_J": total,
        "pairwise_J": pair_parts,
        "three_body_correction_J": correction,
        "forces_N": [list(row) for row in forces],
        "net_force_N": list(net_f),
        "net_torque_mechanical_Nm": list(net_t),
        "net_torque_axis_Nm": list(axis_t),
        "net_torque_total_Nm": list(net_t + axis_t),
    }
    _write_json(outdir / "three_body.json", payload)
    return 0


def _task_validate_asymptotics(run, outdir, formats):
    asym = run.asymptotics
    ctx = run.ctx
    rows = []
    for b1, b2 in asym["b_pairs"]:
        m1 = ToyPolarizability(alpha0=asym["alpha0"], b=b1)
        m2 = ToyPolarizability(alpha0=asym["alpha0"], b=b2)
        combos = list(product(asym["d_lambda"], asym["theta"], asym["phi"]))
        dirs = np.empty((len(combos), 3))
        for k, (d, th, ph) in enumerate(combos):
            dirs[k] = d * np.array([np.cos(ph) * np.sin(th),
                                    np.sin(ph) * np.sin(th), np.cos(th)])
        f_hat, _ = pair_free_energy_batch(dirs, m2, m1, ctx, run.policy,
                                          run.method)
        for k, (d, th, ph) in enumerate(combos):
            geom = ToyGeometry(d=d * ctx.lambda_T, theta=th, phi=ph, b1=b1,
                               b2=b2, alpha0=asym["alpha0"], ctx=ctx)
            regime = asym["regime"]
            if regime == "auto":
                regime = "long" if d >= 1.0 else "short"
            oracle = f_long(geom) if regime == "long" else f_short(geom)
            numeric = float(f_hat[k] * ctx.kT)
            ratio = numeric / oracle if oracle != 0.0 else float("nan")
            rows.append([d, th, ph, b1, b2, numeric, oracle, ratio])
    header = ["d_lambda_T", "theta_rad", "phi_rad", "b1", "b2",
              "F_numeric_J", "F_oracle_J", "ratio"]
    _write_csv(outdir / "validate_asymptotics.csv", run, header, rows)
    ratios = [r[-1] for r in rows if np.isfinite(r[-1])]
    payload = _meta(run)
    payload["result"] = {
        "rows": len(rows),
        "ratio_min": min(ratios) if ratios else None,
        "ratio_max": max(ratios) if ratios else None,
    }
    _write_json(outdir / "validate_asymptotics.json", payload)
    return 0


_RUNNERS = {
    "energy": _task_energy,
    "force": _task_force,
    "map": lambda run, out, fmts: _task_map(run, out, fmts, "energy"),
    "laplacian-map": lambda run, out, fmts: _task_map(run, out, fmts,
                                                      "laplacian"),
    "scan-angle": _task_scan_angle,
    "three-body": _task_three_body,
    "validate-asymptotics": _task_validate_asymptotics,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nrcasimir",
        description="Equilibrium Casimir energies, forces and stability "
                    "maps for non-reciprocal point particles.")
    parser.add_argument("--version", action="version",
                        version=f"nrcasimir {__version__}")
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task, help=f"run the {task} task")
        p.add_argument("--config", required=True, help="YAML/JSON run config")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (results are byte-identical "
                            "for any value)")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="restrict field outputs to one format")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        run = load_config(args.config, task=args.task, threads=args.threads)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2

    formats = list(run.output["formats"])
    if args.format is not None:
        formats = [args.format]

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_json(outdir / "resolved_config.json", run.resolved)

    try:
        return _RUNNERS[run.task](run, outdir, formats)
    except EngineError as err:
        print(f"numerical error in task '{run.task}': {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
