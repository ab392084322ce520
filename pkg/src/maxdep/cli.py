"""Command-line front end.

Subcommands: simulate, estimate, project, fit, test, spectral, replay.
Every run writes a JSON document

    {tool_version, subcommand, config_echo, seed, results, warnings, runtime_ms}

(for ``simulate`` the samples go to CSV with this document as a sidecar at
``<out>.json``).  ``config_echo`` holds the fully resolved parameters, so
``maxdep replay report.json --out ...`` reproduces the outputs bitwise;
``runtime_ms`` is the only field exempt from that guarantee.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
failure.  Output files are written atomically (temp file + rename).
Worker count for resampling tests is capped by MAXDEP_THREADS (0 = all
cores, unset = serial).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import secrets
import sys
import tempfile
import time

import numpy as np

from . import __version__
from .core import DiscreteSpectralMeasure, SpectralPickands, simplex_grid
from .empirical import Dataset, pseudo_observations
from .estimators import DependenceEstimate, estimate_surface
from .projection import (
    NumericalError,
    SpectralProjector,
    fit_parametric_min_distance,
)
from .simulate import (
    SchlatherConfig,
    SimulationError,
    SiteLayout,
    SmithConfig,
    empirical_spectral_measure,
    sample_logistic_ev,
    sample_spectral_ev,
    simulate_field,
)
from .testing import (
    cvm_maxstability_test,
    estimator_comparison_test,
    gof_parametric_test,
    kendall_moment_test,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse defaults to exit code 2; the documented usage code is 1
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# ---------------------------------------------------------------------------
# IO helpers
# ---------------------------------------------------------------------------


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".maxdep-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: list[str], rows: np.ndarray) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def _read_data_csv(path: str) -> Dataset:
    try:
        with open(path, encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
                try:
                    rows.append([float(x) for x in row])
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows")
    values = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(values)):
        raise DataError(f"{path}: non-finite values")
    return Dataset(values=values, labels=tuple(header))


def _read_sites_csv(path: str) -> tuple[SiteLayout, list[str]]:
    try:
        with open(path, encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None:
                raise DataError(f"{path}: empty file")
            if len(header) not in (2, 3) or header[0].lower() != "label":
                raise DataError(f"{path}: expected header 'label,x' or 'label,x,y'")
            labels, coords = [], []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise DataError(f"{path}:{lineno}: expected {len(header)} fields")
                labels.append(row[0])
                try:
                    coords.append([float(x) for x in row[1:]])
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")
    try:
        layout = SiteLayout(np.asarray(coords, dtype=float))
    except ValueError as exc:
        raise DataError(f"{path}: {exc}")
    return layout, labels


def _resolve_sites(params: dict) -> tuple[SiteLayout, list[str]]:
    if params.get("sites"):
        return _read_sites_csv(params["sites"])
    coords = []
    for entry in params["inline_sites"]:
        try:
            coords.append([float(x) for x in str(entry).split(",")])
        except ValueError:
            raise UsageError(f"--site expects X or X,Y, got {entry!r}")
    try:
        layout = SiteLayout(np.asarray(coords, dtype=float))
    except ValueError as exc:
        raise UsageError(f"--site: {exc}")
    return layout, [f"s{i}" for i in range(layout.nsites)]


def _read_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}")


def _read_measure_json(path: str) -> DiscreteSpectralMeasure:
    """Load a spectral measure; approximate (Monte Carlo) measures are
    allowed since the sampler scales margins per coordinate."""
    doc = _read_json(path)
    if "results" in doc and "measure" in doc.get("results", {}):
        doc = doc["results"]["measure"]
    if "atoms" not in doc or "masses" not in doc:
        raise DataError(f"{path}: expected keys 'atoms' and 'masses'")
    try:
        return DiscreteSpectralMeasure(
            np.asarray(doc["atoms"], dtype=float),
            np.asarray(doc["masses"], dtype=float),
            moment_tol=None,
        )
    except ValueError as exc:
        raise DataError(f"{path}: invalid spectral measure: {exc}")


def _read_estimate_json(path: str, use: str) -> DependenceEstimate:
    doc = _read_json(path)
    results = doc.get("results", doc)
    for key in ("grid", "raw", "corrected"):
        if key not in results:
            raise DataError(f"{path}: missing key {key!r} (not an estimate output?)")
    try:
        return DependenceEstimate(
            grid=np.asarray(results["grid"], dtype=float),
            values=np.asarray(results[use], dtype=float),
            method=results.get("method", "unknown"),
            corrected=use == "corrected",
            n=int(results.get("n", 0)),
        )
    except ValueError as exc:
        raise DataError(f"{path}: invalid estimate: {exc}")


def _report_doc(subcommand, params, seed, results, warnings, runtime_ms):
    return {
        "tool_version": __version__,
        "subcommand": subcommand,
        "config_echo": params,
        "seed": seed,
        "results": results,
        "warnings": list(warnings),
        "runtime_ms": runtime_ms,
    }


def _jsonify(obj):
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonify(x) for x in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonify(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    return obj


# ---------------------------------------------------------------------------
# Subcommand implementations (each consumes a resolved params dict)
# ---------------------------------------------------------------------------


def _cmd_simulate(params: dict) -> tuple[dict, list[str]]:
    model = params["model"]
    n = params["n"]
    seed = params["seed"]
    warnings: list[str] = []
    if model == "logistic":
        values = sample_logistic_ev(n, params["dim"], params["theta"], seed)
        labels = [f"u{d + 1}" for d in range(params["dim"])]
    elif model == "spectral":
        measure = _read_measure_json(params["measure"])
        if measure.moment_residual > 1e-6:
            warnings.append(
                f"spectral measure moment residual {measure.moment_residual:.3e} "
                "exceeds 1e-6; margins are rescaled per coordinate"
            )
        values = sample_spectral_ev(measure, n, seed)
        labels = [f"u{d + 1}" for d in range(measure.dimension)]
    elif model in ("schlather", "smith"):
        sites, labels = _resolve_sites(params)
        if model == "schlather":
            config = SchlatherConfig(
                corr_range=params["range"],
                correlation=params["correlation"],
                truncation=params["truncation"],
            )
        else:
            sigma = params["sigma"]
            config = SmithConfig(
                covariance=sigma**2 * np.eye(sites.space_dim), padding=params["padding"]
            )
        values = simulate_field(config, sites, n, seed).values
    else:
        raise UsageError(f"unknown model {model!r}")
    _atomic_write(params["out"], _csv_text(labels, values))
    results = {
        "path": params["out"],
        "n": int(values.shape[0]),
        "columns": labels,
    }
    return results, warnings


def _cmd_estimate(params: dict) -> tuple[dict, list[str]]:
    data = _read_data_csv(params["input"])
    if data.dim < 2:
        raise DataError(f"{params['input']}: need at least 2 columns, got {data.dim}")
    pobs = pseudo_observations(data, "over_n_plus_1")
    warnings = []
    if pobs.has_ties:
        warnings.append(f"{pobs.ties} tied entries resolved by midranks")
    resolution = params["resolution"]
    method = params["method"]
    raw = estimate_surface(pobs, resolution, method=method, corrected=False)
    corrected = estimate_surface(pobs, resolution, method=method, corrected=True)
    results = {
        "method": method,
        "resolution": resolution,
        "n": data.n,
        "dim": data.dim,
        "ties": pobs.ties,
        "selected": "corrected" if params["corrected"] else "raw",
        "grid": _jsonify(raw.grid),
        "raw": _jsonify(raw.values),
        "corrected": _jsonify(corrected.values),
    }
    if params.get("long_csv"):
        header = [f"v{d + 1}" for d in range(data.dim)] + ["value", "method", "variant"]
        lines = [",".join(header)]
        for variant, est in (("raw", raw), ("corrected", corrected)):
            for point, value in zip(est.grid, est.values):
                fields = [repr(float(x)) for x in point] + [repr(float(value)), method, variant]
                lines.append(",".join(fields))
        _atomic_write(params["long_csv"], "\n".join(lines) + "\n")
        results["long_csv"] = params["long_csv"]
    return results, warnings


def _cmd_project(params: dict) -> tuple[dict, list[str]]:
    pilot = _read_estimate_json(params["input"], params["use"])
    resolution = params["atom_resolution"]
    atom_grid = simplex_grid(pilot.dim, resolution)
    projector = SpectralProjector(pilot.grid, atom_grid)
    result = projector.project(pilot.values)
    warnings = []
    if result.clipped:
        warnings.append("pilot values were clipped into [max(v), 1] before projection")
    if not result.certified:
        warnings.append("projection optimality not certified; residuals reported")
    projected = SpectralPickands(result.measure).at(pilot.grid)
    results = {
        "atom_resolution": resolution,
        "objective": result.objective,
        "constraint_residual": result.constraint_residual,
        "iterations": result.iterations,
        "certified": result.certified,
        "clipped": result.clipped,
        "grid": _jsonify(pilot.grid),
        "values": _jsonify(projected),
        "measure": {
            "atoms": _jsonify(result.measure.atoms),
            "masses": _jsonify(result.measure.masses),
        },
    }
    return results, warnings


def _cmd_fit(params: dict) -> tuple[dict, list[str]]:
    pilot = _read_estimate_json(params["input"], params["use"])
    fit = fit_parametric_min_distance(pilot, params["family"])
    warnings = []
    if fit.at_bound:
        warnings.append(f"fitted parameter {fit.parameter:g} sits on a bound")
    results = {
        "family": fit.family,
        "parameter": fit.parameter,
        "objective": fit.objective,
        "at_bound": fit.at_bound,
    }
    return results, warnings


def _cmd_test(params: dict) -> tuple[dict, list[str]]:
    data = _read_data_csv(params["input"])
    kind = params["kind"]
    if kind == "kendall":
        report = kendall_moment_test(data)
    elif kind == "cvm":
        report = cvm_maxstability_test(
            data, m_set=tuple(params["m_set"]), n_boot=params["B"], seed=params["seed"]
        )
    elif kind == "estimator":
        report = estimator_comparison_test(
            data,
            method=params["method"],
            n_boot=params["B"],
            seed=params["seed"],
            resolution=params.get("resolution"),
        )
    elif kind == "gof":
        if not params.get("family"):
            raise UsageError("--family is required for --kind gof")
        report = gof_parametric_test(
            data, params["family"], n_boot=params["B"], seed=params["seed"]
        )
    else:
        raise UsageError(f"unknown test kind {kind!r}")
    results = {
        "name": report.name,
        "statistic": report.statistic,
        "p_value": report.p_value,
        "B": report.replicates,
        "detail": _jsonify(report.details),
    }
    return results, list(report.warnings)


def _cmd_spectral(params: dict) -> tuple[dict, list[str]]:
    sites, labels = _read_sites_csv(params["sites"])
    if params["model"] == "schlather":
        config = SchlatherConfig(
            corr_range=params["range"],
            correlation=params["correlation"],
            truncation=params["truncation"],
        )
    else:
        config = SmithConfig(
            covariance=params["sigma"] ** 2 * np.eye(sites.space_dim),
            padding=params["padding"],
        )
    recovery = empirical_spectral_measure(config, sites, params["N"], params["seed"])
    results = {
        "model": params["model"],
        "sites": labels,
        "n_draws": recovery.n_draws,
        "moment_residual": _jsonify(recovery.moment_residual),
        "moment_se": _jsonify(recovery.moment_se),
        "total_mass": recovery.measure.total_mass,
        "measure": {
            "atoms": _jsonify(recovery.measure.atoms),
            "masses": _jsonify(recovery.measure.masses),
        },
    }
    return results, []


_COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "project": _cmd_project,
    "fit": _cmd_fit,
    "test": _cmd_test,
    "spectral": _cmd_spectral,
}


def run_config(subcommand: str, params: dict) -> dict:
    """Execute a resolved configuration and write its JSON report.

    Returns the report document.  This is the single entry point used both
    by fresh CLI invocations and by ``replay``.  On a numerical failure a
    best-effort report with the diagnostics embedded is still written
    before the error propagates (exit code 3).
    """
    if subcommand not in _COMMANDS:
        raise UsageError(f"unknown subcommand {subcommand!r}")
    report_path = params["out"] + ".json" if subcommand == "simulate" else params["out"]
    start = time.monotonic()
    try:
        results, warnings = _COMMANDS[subcommand](params)
    except (NumericalError, SimulationError) as exc:
        runtime_ms = int((time.monotonic() - start) * 1000)
        doc = _report_doc(
            subcommand, params, params.get("seed"), {"error": str(exc)},
            [f"numerical failure: {exc}"], runtime_ms,
        )
        try:
            _atomic_write(report_path, json.dumps(doc, indent=2) + "\n")
        except OSError:
            pass
        raise
    runtime_ms = int((time.monotonic() - start) * 1000)
    doc = _report_doc(subcommand, params, params.get("seed"), results, warnings, runtime_ms)
    _atomic_write(report_path, json.dumps(doc, indent=2) + "\n")
    return doc


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="maxdep", description="Rank-based inference for max-stable dependence")
    parser.add_argument("--version", action="version", version=f"maxdep {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sim = sub.add_parser("simulate", help="simulate max-stable fields or EV copula samples")
    sim.add_argument("--model", required=True, choices=["logistic", "schlather", "smith", "spectral"])
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", required=True)
    sim.add_argument("--theta", type=float, help="logistic dependence parameter (>= 1)")
    sim.add_argument("--dim", type=int, help="dimension for the logistic model")
    sim.add_argument("--measure", help="spectral measure JSON for --model spectral")
    sim.add_argument("--sites", help="sites CSV (label,x[,y]) for spatial models")
    sim.add_argument("--site", action="append", dest="inline_sites", metavar="X[,Y]",
                     help="inline site coordinates (repeatable, alternative to --sites)")
    sim.add_argument("--range", type=float, dest="range", help="schlather correlation range")
    sim.add_argument("--correlation", choices=["exponential", "gaussian"], default="exponential")
    sim.add_argument("--truncation", type=float, default=5.0)
    sim.add_argument("--sigma", type=float, help="smith kernel standard deviation")
    sim.add_argument("--padding", type=float, default=5.0)

    est = sub.add_parser("estimate", help="estimate the dependence function from data")
    est.add_argument("--input", required=True)
    est.add_argument("--method", choices=["cfg", "pickands"], default="cfg")
    est.add_argument("--resolution", type=int, default=None)
    est.add_argument("--corrected", action="store_true")
    est.add_argument("--long-csv", dest="long_csv", default=None)
    est.add_argument("--out", required=True)

    proj = sub.add_parser("project", help="project an estimate onto the valid class")
    proj.add_argument("--input", required=True, help="estimate JSON")
    proj.add_argument("--use", choices=["corrected", "raw"], default="corrected")
    proj.add_argument("--atom-resolution", dest="atom_resolution", type=int, default=None)
    proj.add_argument("--out", required=True)

    fit = sub.add_parser("fit", help="minimum-distance parametric fit")
    fit.add_argument("--input", required=True, help="estimate JSON")
    fit.add_argument("--use", choices=["corrected", "raw"], default="corrected")
    fit.add_argument("--family", required=True, choices=["logistic", "husler_reiss"])
    fit.add_argument("--out", required=True)

    test = sub.add_parser("test", help="max-stability and goodness-of-fit tests")
    test.add_argument("--input", required=True)
    test.add_argument("--kind", required=True, choices=["kendall", "cvm", "estimator", "gof"])
    test.add_argument("--B", type=int, default=500)
    test.add_argument("--seed", type=int, default=None)
    test.add_argument("--m-set", dest="m_set", default="2,3,4,5")
    test.add_argument("--method", choices=["cfg", "pickands"], default="cfg")
    test.add_argument("--family", choices=["logistic", "husler_reiss"], default=None)
    test.add_argument("--resolution", type=int, default=None)
    test.add_argument("--out", required=True)

    spec = sub.add_parser("spectral", help="recover the spectral measure by Monte Carlo")
    spec.add_argument("--model", required=True, choices=["schlather", "smith"])
    spec.add_argument("--sites", required=True)
    spec.add_argument("--N", type=int, default=100000)
    spec.add_argument("--seed", type=int, default=None)
    spec.add_argument("--range", type=float, dest="range")
    spec.add_argument("--correlation", choices=["exponential", "gaussian"], default="exponential")
    spec.add_argument("--truncation", type=float, default=5.0)
    spec.add_argument("--sigma", type=float)
    spec.add_argument("--padding", type=float, default=5.0)
    spec.add_argument("--out", required=True)

    replay = sub.add_parser("replay", help="re-execute a run from its JSON report")
    replay.add_argument("report", help="JSON report or sidecar from a previous run")
    replay.add_argument("--out", required=True, help="output path for the re-execution")

    return parser


def _resolve_params(args: argparse.Namespace) -> dict:
    """Validate subcommand arguments and fill defaults into a flat dict."""
    sub = args.subcommand
    if sub == "replay":
        return {"report": args.report, "out": args.out}
    params = {}
    if sub == "simulate":
        model = args.model
        if args.n is None or args.n < 1:
            raise UsageError("--n must be >= 1")
        params.update(model=model, n=args.n, out=args.out)
        if model == "logistic":
            if args.theta is None or args.dim is None:
                raise UsageError("--model logistic requires --theta and --dim")
            params.update(theta=args.theta, dim=args.dim)
        elif model == "spectral":
            if not args.measure:
                raise UsageError("--model spectral requires --measure")
            params.update(measure=args.measure)
        else:
            if args.sites:
                params.update(sites=args.sites)
            elif args.inline_sites:
                params.update(inline_sites=list(args.inline_sites))
            else:
                raise UsageError(f"--model {model} requires --sites or --site")
            if model == "schlather":
                if args.range is None:
                    raise UsageError("--model schlather requires --range")
                params.update(
                    range=args.range, correlation=args.correlation, truncation=args.truncation
                )
            else:
                if args.sigma is None:
                    raise UsageError("--model smith requires --sigma")
                params.update(sigma=args.sigma, padding=args.padding)
    elif sub == "estimate":
        if args.resolution is not None and args.resolution < 1:
            raise UsageError("--resolution must be >= 1")
        params.update(
            input=args.input,
            method=args.method,
            resolution=args.resolution,
            corrected=bool(args.corrected),
            long_csv=args.long_csv,
            out=args.out,
        )
    elif sub == "project":
        params.update(
            input=args.input,
            use=args.use,
            atom_resolution=args.atom_resolution,
            out=args.out,
        )
    elif sub == "fit":
        params.update(input=args.input, use=args.use, family=args.family, out=args.out)
    elif sub == "test":
        if args.B < 1:
            raise UsageError("--B must be >= 1")
        try:
            m_set = [int(x) for x in str(args.m_set).split(",") if x.strip()]
        except ValueError:
            raise UsageError(f"--m-set must be comma-separated integers, got {args.m_set!r}")
        params.update(
            input=args.input,
            kind=args.kind,
            B=args.B,
            m_set=m_set,
            method=args.method,
            family=args.family,
            resolution=args.resolution,
            out=args.out,
        )
    elif sub == "spectral":
        if args.N < 100:
            raise UsageError("--N must be >= 100")
        params.update(model=args.model, sites=args.sites, N=args.N, out=args.out)
        if args.model == "schlather":
            if args.range is None:
                raise UsageError("--model schlather requires --range")
            params.update(
                range=args.range, correlation=args.correlation, truncation=args.truncation
            )
        else:
            if args.sigma is None:
                raise UsageError("--model smith requires --sigma")
            params.update(sigma=args.sigma, padding=args.padding)
    # seed: defaulted from entropy, then recorded in the config echo
    if sub in ("simulate", "test", "spectral"):
        seed = args.seed if args.seed is not None else secrets.randbits(63)
        params["seed"] = int(seed)
    return params


def _post_read_resolution(params: dict) -> dict:
    """Fill defaults that depend on input files (resolved before echo)."""
    if "atom_resolution" in params and params["atom_resolution"] is None:
        doc = _read_json(params["input"])
        results = doc.get("results", doc)
        params["atom_resolution"] = int(results.get("resolution", 50))
    if params.get("resolution") is None and "method" in params and "corrected" in params:
        # estimate: default grid resolution depends on the data dimension
        data = _read_data_csv(params["input"])
        params["resolution"] = 100 if data.dim == 2 else 20
    return params


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.subcommand == "replay":
            doc = _read_json(args.report)
            if "subcommand" not in doc or "config_echo" not in doc:
                raise DataError(f"{args.report}: not a maxdep report")
            params = dict(doc["config_echo"])
            params["out"] = args.out
            run_config(doc["subcommand"], params)
        else:
            params = _post_read_resolution(_resolve_params(args))
            run_config(args.subcommand, params)
        return EXIT_OK
    except UsageError as exc:
        print(f"maxdep: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"maxdep: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"maxdep: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, SimulationError) as exc:
        print(f"maxdep: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
