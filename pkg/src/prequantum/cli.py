"""Command-line entry point: ``prequantum <subcommand> --scenario FILE [options]``.

Results go to files under ``--out`` (default ``./out/<scenario-stem>-<seed>``),
progress goes to stderr. Exit status: 0 if every requested check passes,
1 if a check fails, 2 on configuration errors, 3 on numerical failures.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import math
from pathlib import Path
import sys
import warnings

import numpy as np

from . import io as pio
from .emergent import (build_hamiltonian, compare_emergent_phase, limit_cycle_period,
                       mode_phase)
from .errors import ConfigurationError, ContractViolation, NumericError, PrequantumError
from .flow import (basin_map, classify_fixed_point, integrate_beable_flow,
                   integrate_polynomial_flow)
from .operators import random_unitary, row_lattice
from .polynomial import characteristic_polynomial
from .symmetry import (BeableTransform, CheckResult, covariance_residual, equivariance_check,
                       invariance_check)

log = logging.getLogger("prequantum")

SUBCOMMANDS = ("simulate-single", "simulate-beables", "basin", "symmetry-check",
               "emergent-compare", "report")
EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def build_parser():
    parser = argparse.ArgumentParser(prog="prequantum", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--out", help="output directory")
        p.add_argument("--json", action="store_true", help="print the summary as JSON on stdout")
        p.add_argument("-v", "--verbose", action="count", default=0)
        if name == "report":
            p.add_argument("manifest", nargs="?", help="manifest.json or its directory")
            continue
        p.add_argument("--scenario", required=True, help="scenario JSON document")
        p.add_argument("--seed", type=int, help="override the scenario and generator seed")
        p.add_argument("--kappa", type=float, help="override the dissipation strength")
        p.add_argument("--rel-tol", type=float)
        p.add_argument("--abs-tol", type=float)
        p.add_argument("--tol", type=float, default=1e-8, help="fixed-point classification tolerance")
        if name == "basin":
            p.add_argument("--grid", required=True,
                           help="per-axis 'lo:hi:num', comma separated (one axis per beable)")
            p.add_argument("--model", choices=("beable", "single"), default="beable")
            p.add_argument("--jobs", type=int, default=1)
        if name == "emergent-compare":
            p.add_argument("--case", choices=("uniform", "dominant", "general"), default="general")
            p.add_argument("--window", type=float, help="window length after convergence")
    return parser


def _load(args):
    path = Path(args.scenario)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read scenario {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"scenario parse error in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    raw = copy.deepcopy(raw)
    if args.seed is not None:
        raw["seed"] = args.seed
        if isinstance(raw.get("generator"), dict):
            raw["generator"]["seed"] = args.seed
    if args.kappa is not None:
        raw["kappa"] = args.kappa
    for key, value in (("rel_tol", args.rel_tol), ("abs_tol", args.abs_tol)):
        if value is not None:
            raw.setdefault("integrator", {})[key] = value
    doc = pio.parse_scenario_document(raw)
    seed = raw.get("seed", 0)
    out = Path(args.out) if args.out else Path("out") / f"{path.stem}-{seed}"
    return doc, out


def _period_or_none(traj, n):
    try:
        p = limit_cycle_period(traj, n)
    except (PrequantumError, ValueError):
        return None
    return "no finite period" if math.isinf(p) else p


def _fixed_point_summary(traj, report):
    return {
        "omega_star": [float(v) for v in report.omega_star],
        "j": [int(v) for v in report.j],
        "coherent": bool(report.coherent),
        "residual": float(report.residual),
        "converged": bool(traj.converged and report.converged),
        "t_converged": traj.t_converged,
        "period": [_period_or_none(traj, n) for n in range(traj.num_beables)],
    }


def _checks(requested, available):
    """Evaluate the requested checks this subcommand provides; others are logged and skipped."""
    unknown = [c for c in requested if c not in available]
    if unknown:
        log.warning("ignoring checks not provided by this subcommand: %s", ", ".join(unknown))
    return {c: bool(available[c]) for c in requested if c in available}


def cmd_simulate(args, doc, out):
    sc = doc.scenario
    lattice = row_lattice(sc.M_star, doc.cset.eigen_table)
    if args.command == "simulate-single":
        row = lattice.lam[:1]
        f = characteristic_polynomial(row[0])
        log.info("single model: H eigenvalues %s", row[0].tolist())
        traj = integrate_polynomial_flow(f, sc.kappa, sc.omega0[0], sc.phi0[0], sc.integrator,
                                         sc.t_span, output_interval=sc.output_interval)
        report = classify_fixed_point(traj.omega_final, row, args.tol)
    else:
        traj = integrate_beable_flow(sc, lattice)
        report = classify_fixed_point(traj.omega_final, lattice, args.tol)
    summary = {"subcommand": args.command, **_fixed_point_summary(traj, report)}
    summary["E_star"] = summary["omega_star"][0] if args.command == "simulate-single" else None
    summary["checks"] = _checks(doc.checks, {
        "converged": summary["converged"],
        "coherent": report.coherent,
        "on_lattice": report.converged,
    })
    bundle = pio.ResultBundle(trajectories={"trajectory": traj},
                              reports={"fixed_point": report, "summary": summary},
                              scenario_digest=doc.digest)
    return summary, bundle


def _parse_grid(spec, N):
    axes = []
    for part in spec.split(","):
        try:
            lo, hi, num = part.split(":")
            axes.append(np.linspace(float(lo), float(hi), int(num)))
        except ValueError:
            raise ConfigurationError(f"bad grid axis {part!r}; expected lo:hi:num") from None
    if len(axes) != N:
        raise ConfigurationError(f"--grid has {len(axes)} axes, scenario has N={N}")
    return axes


def cmd_basin(args, doc, out):
    sc = doc.scenario
    lattice = row_lattice(sc.M_star, doc.cset.eigen_table)
    axes = _parse_grid(args.grid, sc.num_beables)
    log.info("basin sweep over %d points with %d job(s)", int(np.prod([len(a) for a in axes])),
             args.jobs)
    bmap = basin_map(sc, lattice, axes, model=args.model, tol=args.tol, jobs=args.jobs)
    N = sc.num_beables
    header = [f"omega0_{n + 1}" for n in range(N)] + [f"j_{n + 1}" for n in range(N)] + ["converged"]
    rows = [list(p) + [int(v) for v in j] + [int(r is not None)]
            for p, j, r in zip(bmap.points, bmap.indices, bmap.reports)]
    n_conv = sum(r is not None for r in bmap.reports)
    summary = {"subcommand": "basin", "points": len(rows), "converged_points": n_conv,
               "distinct_fixed_points": len({tuple(j) for j in bmap.indices.tolist() if j[0] >= 0})}
    summary["checks"] = _checks(doc.checks, {"all_converged": n_conv == len(rows)})
    bundle = pio.ResultBundle(tables={"basin": (header, rows)}, reports={"summary": summary},
                              scenario_digest=doc.digest)
    return summary, bundle


SYMMETRY_CHECKS = ("covariance", "permutation_invariance", "unitary_invariance",
                   "scaling_breaks_symmetry", "permutation_equivariance")


def run_symmetry_checks(doc, names=SYMMETRY_CHECKS, n_random=100):
    """Run the symmetry suite on a scenario; returns a list of :class:`CheckResult`."""
    sc, cset = doc.scenario, doc.cset
    N = sc.num_beables
    rng = np.random.default_rng(sc.seed)
    A = cset.eigen_table
    omega = sc.omega0
    results = []
    if "covariance" in names:
        worst = 0.0
        for _ in range(n_random):
            S = rng.standard_normal((N, N))
            T = BeableTransform.general(S)
            r = covariance_residual(T, A, omega, sc.M_star)
            scale = (np.linalg.norm(S, 2) * np.linalg.norm(sc.M_star, 2) * np.max(np.abs(A.values))
                     + np.max(np.abs(omega)))
            worst = max(worst, r / scale)
        results.append(CheckResult("covariance", worst, 1e-10, worst <= 1e-10, sc.seed))
    swap = np.arange(N)
    if N >= 2:
        swap[[0, 1]] = [1, 0]
    P = BeableTransform.permutation(swap)
    if "permutation_invariance" in names:
        before, after, delta = invariance_check("permutation", P, cset, sc.M_star, omega)
        results.append(CheckResult("permutation_invariance", delta, 1e-12, delta <= 1e-12, sc.seed,
                                   before, after))
    if "unitary_invariance" in names:
        V = random_unitary(cset.dim_hilbert, rng)
        before, after, delta = invariance_check("unitary", V, cset, sc.M_star, omega)
        results.append(CheckResult("unitary_invariance", delta, 1e-9, delta <= 1e-9, sc.seed,
                                   before, after))
    if "scaling_breaks_symmetry" in names:
        factors = np.ones(N)
        factors[0] = 2.0
        before, after, delta = invariance_check("general", BeableTransform.scaling(factors), cset,
                                                sc.M_star, omega)
        # passes when F changes: general transforms are not a symmetry of F
        results.append(CheckResult("scaling_breaks_symmetry", delta, 1e-6, delta > 1e-6, sc.seed,
                                   before, after))
    if "permutation_equivariance" in names:
        deviation, match = equivariance_check(P, sc, A)
        results.append(CheckResult("permutation_equivariance", deviation, 1e-6,
                                   deviation <= 1e-6 and match, sc.seed))
    return results


def cmd_symmetry(args, doc, out):
    names = [c for c in doc.checks if c in SYMMETRY_CHECKS] or list(SYMMETRY_CHECKS)
    results = run_symmetry_checks(doc, names)
    summary = {"subcommand": "symmetry-check",
               "checks": {r.check: bool(r.passed) for r in results},
               "deltas": {r.check: r.delta for r in results}}
    bundle = pio.ResultBundle(jsonl={"symmetry_checks": [r.to_json_line() for r in results]},
                              reports={"summary": summary}, scenario_digest=doc.digest)
    return summary, bundle


def cmd_emergent(args, doc, out):
    sc = doc.scenario
    lattice = row_lattice(sc.M_star, doc.cset.eigen_table)
    traj = integrate_beable_flow(sc, lattice)
    report = classify_fixed_point(traj.omega_final, lattice, args.tol)
    if not traj.converged:
        raise NumericError("trajectory did not converge within t_span; no post-convergence window")
    H = build_hamiltonian(args.case, sc.n_vec, sc.M_star, doc.cset, report)
    mode = mode_phase(traj, sc.n_vec)
    window = None
    if args.window is not None:
        window = (traj.t_converged, traj.t_converged + args.window)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cmp = compare_emergent_phase(mode, H, report, window)
    length = cmp.window[1] - cmp.window[0]
    if args.case == "dominant":
        w = report.omega_star
        bound = float(np.sum(np.abs(sc.n_vec[1:] * w[1:])) * length)
        passed = cmp.max_phase_dev <= bound
    else:
        bound = 1e-6 * length
        passed = cmp.max_phase_dev <= bound
    summary = {"subcommand": "emergent-compare", **_fixed_point_summary(traj, report),
               "case": args.case, "E_star": cmp.E_star, "max_phase_dev": cmp.max_phase_dev,
               "phase_bound": bound, "window": list(cmp.window),
               "warnings": [str(w.message) for w in caught]}
    summary["checks"] = _checks(doc.checks or ["phase_law"], {
        "phase_law": passed, "converged": summary["converged"], "coherent": report.coherent})
    tau = H.rescale(cmp.times - cmp.window[0])
    header = ["t", "theta_minus_theta_c", "E_star_tau", "deviation", "schrodinger_phase"]
    dtheta = cmp.deviation + cmp.E_star * tau
    rows = np.column_stack([cmp.times, dtheta, cmp.E_star * tau, cmp.deviation,
                            -dtheta - cmp.schrodinger_deviation])
    bundle = pio.ResultBundle(
        trajectories={"trajectory": traj},
        tables={"phase_series": (header, rows)},
        reports={"phase_comparison": cmp, "fixed_point": report, "summary": summary},
        scenario_digest=doc.digest)
    return summary, bundle


def cmd_report(args):
    target = args.manifest or args.out or "."
    manifest, base = pio.read_manifest(target)
    for entry in manifest.get("files", []):
        path = base / entry["name"]
        if not path.is_file():
            raise ConfigurationError(f"file listed in manifest is missing: {path}")
        if hashlib.sha256(path.read_bytes()).hexdigest() != entry["sha256"]:
            raise ConfigurationError(f"digest mismatch for {path}")
    summary_path = base / "summary.json"
    if not summary_path.is_file():
        raise ConfigurationError(f"summary not found: {summary_path}")
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    return summary


def format_summary(summary):
    lines = [f"run: {summary.get('subcommand', '?')}"]
    if "omega_star" in summary:
        lines.append("fixed point: omega* = " + ", ".join(f"{v:.12g}" for v in summary["omega_star"]))
        lines.append(f"lattice columns: {summary['j']}  coherent: {summary['coherent']}  "
                     f"residual: {summary['residual']:.3e}  converged: {summary['converged']}")
        periods = [p if isinstance(p, str) else ("n/a" if p is None else f"{p:.12g}")
                   for p in summary.get("period", [])]
        lines.append("period: " + ", ".join(periods))
    if summary.get("E_star") is not None:
        lines.append(f"E*: {summary['E_star']:.12g}")
    if "max_phase_dev" in summary:
        lines.append(f"max phase deviation: {summary['max_phase_dev']:.3e} "
                     f"(bound {summary['phase_bound']:.3e}, case {summary['case']})")
    if "points" in summary:
        lines.append(f"basin points: {summary['points']}  converged: {summary['converged_points']}  "
                     f"fixed points: {summary['distinct_fixed_points']}")
    for name, ok in summary.get("checks", {}).items():
        lines.append(f"check {name}: {'pass' if ok else 'FAIL'}")
    return "\n".join(lines)


COMMANDS = {
    "simulate-single": cmd_simulate,
    "simulate-beables": cmd_simulate,
    "basin": cmd_basin,
    "symmetry-check": cmd_symmetry,
    "emergent-compare": cmd_emergent,
}


def run(argv=None):
    """Run one command; returns ``(exit_status, manifest or None)``."""
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(message)s")
    try:
        if args.command == "report":
            summary = cmd_report(args)
            print(json.dumps(summary, sort_keys=True) if args.json else format_summary(summary))
            return (EXIT_OK if all(summary.get("checks", {}).values()) else EXIT_CHECK_FAILED), None
        doc, out = _load(args)
        summary, bundle = COMMANDS[args.command](args, doc, out)
        manifest = pio.write_results(bundle, out)
        log.info("wrote %d files to %s", len(manifest["files"]), out)
        print(json.dumps(summary, sort_keys=True) if args.json else format_summary(summary))
        status = EXIT_OK if all(summary.get("checks", {}).values()) else EXIT_CHECK_FAILED
        return status, manifest
    except (ConfigurationError, ContractViolation) as exc:
        print(f"prequantum: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, None
    except NumericError as exc:
        print(f"prequantum: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC, None
    except PrequantumError as exc:
        print(f"prequantum: {exc}", file=sys.stderr)
        return EXIT_CONFIG, None


def main(argv=None):
    status, _ = run(argv)
    return status


if __name__ == "__main__":
    sys.exit(main())
