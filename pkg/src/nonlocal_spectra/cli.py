"""Command-line entry point: parse a problem config, dispatch, write artifacts.

Every run leaves a ``manifest.json`` beside its CSVs holding the full config
text, the overrides, the seed and tool versions; ``--from-manifest``
reconstructs the run and reproduces byte-identical CSVs.  Exit codes:
0 success, 1 computational refusal, 2 config error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np
import scipy

from . import __version__
from .assembly import write_matrix_text
from .csvio import fmt, write_csv
from .errors import (ComputationError, ConfigError, ConfigParse,
                     ArtifactWriteFailure)
from .eig import check_simplicity, principal_eig
from .expressions import compile_expression
from .kernel_analysis import harnack_ratio, kernel_classify
from .maxprinciple import (cap_sensitivity, lambda_double_prime, lambda_prime,
                           refined_mp_check)
from .problem import problem_from_config
from .semilinear import monotone_iterate, solve_linear
from .stochastic import fk_estimate
from .svgplot import LINE, PROFILE, plot_csv
from .sweep import exterior_sweep, sweep


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise ArtifactWriteFailure(f"cannot write {path}: {exc}") from exc


def _coords_header(dim):
    return ["x"] if dim == 1 else ["x", "y"]


def _write_function(path, grid, values, name="value"):
    header = _coords_header(grid.dimension) + [name]
    coords = grid.interior_coords
    rows = [tuple(coords[i]) + (float(values[i]),) for i in range(len(values))]
    write_csv(path, header, rows)


# -- command handlers ------------------------------------------------------------


def _cmd_eig(problem, out, plot):
    params = problem.params
    op = problem.operator(variant=params.get("variant", "full"))
    res = principal_eig(op, tol=float(params.get("tol", 1e-10)),
                        max_iter=int(params.get("max_iter", 500)))
    artifacts = []
    write_csv(os.path.join(out, "summary.csv"), ["quantity", "value"],
              res.summary_rows())
    artifacts.append("summary.csv")
    _write_function(os.path.join(out, "eigenfunction.csv"), op.grid, res.psi,
                    "psi")
    artifacts.append("eigenfunction.csv")
    if params.get("simplicity", False):
        rep = check_simplicity(op, res)
        write_csv(os.path.join(out, "simplicity.csv"), ["quantity", "value"],
                  [("geometric_multiplicity", rep.geometric_multiplicity),
                   ("positive", int(rep.positive)),
                   ("spectral_gap", rep.spectral_gap)])
        artifacts.append("simplicity.csv")
    if params.get("export_matrix", False):
        write_matrix_text(op.matrix, os.path.join(out, "operator.txt"))
        artifacts.append("operator.txt")
    if plot and problem.dimension == 1:
        plot_csv(os.path.join(out, "eigenfunction.csv"),
                 os.path.join(out, "eigenfunction.svg"), PROFILE)
        artifacts.append("eigenfunction.svg")
    return artifacts


def _cmd_sweep(problem, out, plot):
    params = problem.params
    radii = [float(r) for r in params["radii"]]
    result = sweep(problem, radii, problem.h,
                   variant=params.get("variant", "full"),
                   probe_halfwidth=float(params.get("probe", 1.0)),
                   cauchy_tol=float(params.get("cauchy_tol", 0.02)),
                   tol=float(params.get("tol", 1e-10)))
    artifacts = []
    write_csv(os.path.join(out, "sweep.csv"),
              ["radius", "lambda", "residual"],
              [(e.radius, e.value, e.residual) for e in result.entries])
    artifacts.append("sweep.csv")
    write_csv(os.path.join(out, "limit.csv"), ["quantity", "value"],
              [("limit", result.limit), ("converged", int(result.converged)),
               ("monotone", int(result.monotone))])
    artifacts.append("limit.csv")
    for r, (coords, vals) in sorted(result.snapshots.items()):
        name = f"eigenfunction_r{fmt(r)}.csv"
        header = _coords_header(problem.dimension) + ["psi"]
        rows = [tuple(coords[i]) + (float(vals[i]),) for i in range(len(vals))]
        write_csv(os.path.join(out, name), header, rows)
        artifacts.append(name)
    if plot:
        plot_csv(os.path.join(out, "sweep.csv"),
                 os.path.join(out, "sweep.svg"), LINE)
        artifacts.append("sweep.svg")
    return artifacts


def _cmd_exterior(problem, out, plot):
    params = problem.params
    result = exterior_sweep(problem, float(params["inner_radius"]),
                            [float(r) for r in params["outer_radii"]],
                            problem.h,
                            cauchy_tol=float(params.get("cauchy_tol", 0.02)),
                            tol=float(params.get("tol", 1e-10)))
    write_csv(os.path.join(out, "exterior.csv"),
              ["outer_radius", "lambda", "residual"],
              [(e.radius, e.value, e.residual) for e in result.entries])
    write_csv(os.path.join(out, "exterior_limit.csv"), ["quantity", "value"],
              [("limit", result.limit), ("converged", int(result.converged)),
               ("upper_bound_heuristic", 1)])
    artifacts = ["exterior.csv", "exterior_limit.csv"]
    if plot:
        plot_csv(os.path.join(out, "exterior.csv"),
                 os.path.join(out, "exterior.svg"), LINE)
        artifacts.append("exterior.svg")
    return artifacts


def _cmd_mp(problem, out, plot):
    params = problem.params
    op = problem.operator()
    phi_max = float(params.get("phi_max", 1e3))
    # the cap IS the boundedness constraint for the supersolution sense, and
    # a generous one inflates the truncation bias; keep it modest by default
    phi_max_super = float(params.get("phi_max_super", min(phi_max, 10.0)))
    bisect_tol = float(params.get("bisect_tol", 0.02))
    bracket = tuple(float(v) for v in params.get("bracket", (-10.0, 10.0)))
    eig = principal_eig(op, tol=float(params.get("tol", 1e-10)))
    sub_value = lambda_double_prime(op, phi_max, bisect_tol, bracket)
    sup_value = lambda_prime(op, phi_max_super, bisect_tol, bracket)
    rows = [
        ("dirichlet_rate", eig.value, eig.residual, "INFO"),
        ("bounded_supersolution_rate", sup_value, bisect_tol, "INFO"),
        ("positive_subsolution_rate", sub_value, bisect_tol, "INFO"),
        ("ordering_dirichlet_ge_super", eig.value - sup_value, bisect_tol,
         "PASS" if eig.value >= sup_value - 2 * bisect_tol else "FAIL"),
        ("ordering_super_ge_sub", sup_value - sub_value, bisect_tol,
         "PASS" if sup_value >= sub_value - 2 * bisect_tol else "FAIL"),
    ]
    floor = -float(op.coefficients.c.max())
    rows.append(("floor_minus_sup_c", sub_value - floor, bisect_tol,
                 "PASS" if sub_value >= floor - bisect_tol else "FAIL"))
    artifacts = []
    f_expr = params.get("source", "1")
    names = ("x",) if problem.dimension == 1 else ("x", "y")
    expr = compile_expression(f_expr, names)
    pts = op.grid.interior_coords
    env = {"x": pts[:, 0]}
    if problem.dimension == 2:
        env["y"] = pts[:, 1]
    f_vals = np.broadcast_to(
        np.asarray(expr(**{k: env[k] for k in names if k in env}), dtype=float),
        (op.n,)).copy()
    check = refined_mp_check(op, f_vals, tol=float(params.get("tol", 1e-10)))
    rows.append(("refined_mp_max_u", check.max_u, 0.0, check.verdict))
    write_csv(os.path.join(out, "mp_report.csv"),
              ["quantity", "value", "tolerance", "verdict"], rows)
    artifacts.append("mp_report.csv")
    factors = params.get("sensitivity_factors", [0.1, 1.0, 10.0])
    sens = cap_sensitivity(op, phi_max, bisect_tol, bracket,
                           factors=[float(v) for v in factors])
    write_csv(os.path.join(out, "cap_sensitivity.csv"),
              ["phi_max", "positive_subsolution_rate"], sens)
    artifacts.append("cap_sensitivity.csv")
    if problem.output.get("dump_witnesses", False):
        _write_function(os.path.join(out, "mp_witness.csv"), op.grid,
                        check.witness, "u")
        artifacts.append("mp_witness.csv")
    return artifacts


def _cmd_semilinear(problem, out, plot):
    params = problem.params
    op = problem.operator()
    pts = op.grid.interior_coords
    dim = problem.dimension
    names = ("x", "u") if dim == 1 else ("x", "y", "u")

    f_expr = compile_expression(params["nonlinearity"], names)

    def f(points, u):
        env = {"x": points[:, 0], "u": u}
        if dim == 2:
            env["y"] = points[:, 1]
        return np.broadcast_to(
            np.asarray(f_expr(**{k: env[k] for k in names}), dtype=float),
            (len(points),)).copy()

    def grid_fn(source):
        e = compile_expression(source, names[:-1])
        env = {"x": pts[:, 0]}
        if dim == 2:
            env["y"] = pts[:, 1]
        return np.broadcast_to(
            np.asarray(e(**{k: env[k] for k in names[:-1]}), dtype=float),
            (op.n,)).copy()

    sub = grid_fn(params.get("sub", "0"))
    super_ = grid_fn(params["super"])
    theta = params.get("theta", "auto")
    theta = None if theta == "auto" else float(theta)
    u, trace = monotone_iterate(op, f, sub, super_, theta=theta,
                                tol=float(params.get("tol", 1e-8)),
                                max_iter=int(params.get("max_iter", 200)))
    _write_function(os.path.join(out, "solution.csv"), op.grid, u, "u")
    write_csv(os.path.join(out, "trace.csv"),
              ["iteration", "residual", "max_step"],
              [(k + 1, trace.residuals[k], trace.max_steps[k])
               for k in range(trace.iterations)])
    artifacts = ["solution.csv", "trace.csv"]
    if plot and dim == 1:
        plot_csv(os.path.join(out, "solution.csv"),
                 os.path.join(out, "solution.svg"), PROFILE)
        artifacts.append("solution.svg")
    return artifacts


def _cmd_harnack(problem, out, plot):
    params = problem.params
    report = harnack_ratio(problem, float(params["window_radius"]),
                           int(params.get("samples", 16)), problem.seed,
                           h=problem.h,
                           refinements=int(params.get("refinements", 2)),
                           growth_threshold=float(params.get(
                               "growth_threshold", 2.0)))
    rows = []
    for level, lv in enumerate(report.levels):
        for s, r in enumerate(lv.ratios):
            rows.append((level, lv.h, s, r))
    write_csv(os.path.join(out, "ratios.csv"),
              ["level", "h", "sample", "ratio"], rows)
    write_csv(os.path.join(out, "ratio_summary.csv"),
              ["level", "h", "max_ratio"],
              [(k, lv.h, lv.max_ratio) for k, lv in enumerate(report.levels)])
    write_csv(os.path.join(out, "harnack_verdict.csv"), ["quantity", "value"],
              [("window_radius", report.window_radius),
               ("ambient_radius", report.ambient_radius),
               ("growth_factor", report.growth_factor),
               ("growth_threshold", report.growth_threshold),
               ("drift", report.drift),
               ("failure_flag", int(report.failure_flag))])
    artifacts = ["ratios.csv", "ratio_summary.csv", "harnack_verdict.csv"]
    if plot:
        plot_csv(os.path.join(out, "ratio_summary.csv"),
                 os.path.join(out, "ratio_summary.svg"), LINE)
        artifacts.append("ratio_summary.svg")
    return artifacts


def _cmd_classify(problem, out, plot):
    params = problem.params
    report = kernel_classify(problem.kernel,
                             [float(r) for r in params.get("radii", [1, 2, 4])],
                             float(params.get("alpha", 1.0)),
                             h=problem.h, dimension=problem.dimension,
                             domains=[problem.domain] if problem.domain else (),
                             decay_radii=params.get("decay_radii"))
    write_csv(os.path.join(out, "classification.csv"),
              ["radius", "gamma", "density_bound", "incoming_mass", "compact_support", "bounded_density", "incoming_positivity", "h1"],
              report.table_rows())
    write_csv(os.path.join(out, "decay.csv"),
              ["rho", "sup_mass_exp"], report.decay)
    lines = [
        f"kernel class report (alpha = {report.alpha})",
        f"  density hypotheses applicable: {report.density_applicable}",
        f"  overall density verdict: "
        f"{'PASS' if report.density_class else 'FAIL'}",
        f"  one-dimensional support containment: {report.support_containment_1d}",
    ]
    for name, ok in report.points_inwards:
        lines.append(f"  points inwards on {name}: {ok}")
    for row in report.rows:
        lines.append(
            f"  R={row.radius:g}: gamma={row.gamma:g} M1={row.density_bound:g} "
            f"M2={row.incoming_mass:g} -> {'PASS' if row.passes else 'FAIL'}")
    _atomic_write(os.path.join(out, "summary.txt"), "\n".join(lines) + "\n")
    return ["classification.csv", "decay.csv", "summary.txt"]


def _cmd_oracle(problem, out, plot, result=None):
    params = problem.params
    if result is None:
        result = fk_estimate(problem, problem.domain,
                             _start_point(problem),
                             float(params.get("horizon", 2.0)),
                             float(params.get("dt", 1e-3)),
                             int(params.get("paths", 100000)),
                             problem.seed,
                             bootstrap=int(params.get("bootstrap", 200)))
    write_csv(os.path.join(out, "oracle.csv"), ["quantity", "value"],
              [("lambda_mc", result.value), ("stderr", result.stderr),
               ("lambda_mc_early_window", result.half_value),
               ("lambda_mc_raw", result.raw_value),
               ("survivors", result.survivors),
               ("horizon", result.horizon),
               ("dt", result.ensemble.dt),
               ("paths", result.ensemble.count),
               ("seed", result.ensemble.seed)])
    return ["oracle.csv"]


def _start_point(problem):
    if "start" in problem.params:
        start = problem.params["start"]
        return [float(v) for v in (start if isinstance(start, list) else [start])]
    return problem.domain.center() if problem.domain is not None else 0.0


def _cmd_compare(problem, out, plot):
    params = problem.params
    op = problem.operator()
    eig = principal_eig(op, tol=float(params.get("tol", 1e-10)))
    result = fk_estimate(problem, problem.domain, _start_point(problem),
                         float(params.get("horizon", 2.0)),
                         float(params.get("dt", 1e-3)),
                         int(params.get("paths", 100000)), problem.seed,
                         bootstrap=int(params.get("bootstrap", 200)))
    artifacts = _cmd_oracle(problem, out, plot, result=result)
    diff = abs(result.value - eig.value)
    tol = max(0.1 * abs(eig.value), 3 * result.stderr)
    write_csv(os.path.join(out, "compare.csv"), ["quantity", "value"],
              [("lambda_eigensolver", eig.value),
               ("lambda_mc", result.value),
               ("stderr", result.stderr),
               ("abs_difference", diff),
               ("tolerance", tol),
               ("within_tolerance", int(diff <= tol))])
    artifacts.append("compare.csv")
    return artifacts


_HANDLERS = {
    "eig": _cmd_eig,
    "sweep": _cmd_sweep,
    "exterior": _cmd_exterior,
    "mp": _cmd_mp,
    "semilinear": _cmd_semilinear,
    "harnack": _cmd_harnack,
    "classify": _cmd_classify,
    "oracle": _cmd_oracle,
    "compare": _cmd_compare,
}


# -- configuration plumbing --------------------------------------------------------


def _parse_config_text(text):
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParse(f"config parse error: {exc}") from exc


def _apply_override(config, assignment):
    if "=" not in assignment:
        raise ConfigParse(f"override {assignment!r} is not key=value")
    key, raw = assignment.split("=", 1)
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    node = config
    parts = key.strip().split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigParse(f"override path {key!r} crosses a value")
    node[parts[-1]] = value
    return config


def run(config_text, overrides, out_dir, seed=None, threads=1,
        plot=False) -> int:
    started = time.time()
    try:
        config = _parse_config_text(config_text)
        for assignment in overrides:
            _apply_override(config, assignment)
        if seed is not None:
            config["seed"] = int(seed)
        problem = problem_from_config(config)
        plot = plot or bool(problem.output.get("plot", False))
        os.makedirs(out_dir, exist_ok=True)
        artifacts = _HANDLERS[problem.command](problem, out_dir, plot)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"refused: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    manifest = {
        "command": problem.command,
        "config_text": config_text,
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "overrides": list(overrides),
        "seed": problem.seed if seed is None else int(seed),
        "threads": threads,
        "versions": {"nonlocal-spectra": __version__,
                     "python": sys.version.split()[0],
                     "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "wall_time_s": time.time() - started,
        "artifacts": artifacts,
    }
    _atomic_write(os.path.join(out_dir, "manifest.json"),
                  json.dumps(manifest, indent=2) + "\n")
    return 0


def rerun_from_manifest(manifest_path, out_dir, threads=1) -> int:
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    return run(manifest["config_text"], manifest.get("overrides", []),
               out_dir, seed=manifest.get("seed"), threads=threads,
               plot=False)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nonlocal-spectra",
        description="Principal eigenvalues and maximum-principle diagnostics "
                    "for drift-diffusion operators with finite jump kernels")
    parser.add_argument("--config", help="problem description (TOML)")
    parser.add_argument("--from-manifest", dest="manifest",
                        help="reproduce a previous run from its manifest")
    parser.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="KEY=VALUE",
                        help="override a config entry (dotted key)")
    parser.add_argument("--out", default="out", help="artifact directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get(
                            "NONLOCAL_SPECTRA_THREADS", "1")),
                        help="reserved concurrency bound (results do not "
                             "depend on it)")
    parser.add_argument("--plot", action="store_true",
                        help="emit SVG plots next to the CSVs")
    args = parser.parse_args(argv)
    if args.manifest:
        code = rerun_from_manifest(args.manifest, args.out,
                                   threads=args.threads)
    elif args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        code = run(text, args.overrides, args.out, seed=args.seed,
                   threads=args.threads, plot=args.plot)
    else:
        parser.print_usage(file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
