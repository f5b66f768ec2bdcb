"""Command-line entry point: fit, diagnose, and simulate subcommands.

Exit codes: 0 success (fit: converged), 1 input/configuration error,
2 fit did not converge (result still written).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .diagnostics import check_conditions
from .exceptions import RobregError
from .inference import Cauchy, ContaminatedGaussian, Gaussian, PlugInEmpirical, contrast_inference
from .kernels import RhoKernel
from .mmfit import MMFitConfig, fit_mm, objective_ln
from .mscale import MScaleSpec
from .problem import RegressionProblem, fit_least_squares
from .sfit import SFitConfig, fit_s
from .simulate import (
    BadLeverage,
    Contamination,
    ExperimentReport,
    FixedDim,
    GaussianIdentity,
    GaussianToeplitz,
    LogDim,
    LSBaselineSpec,
    MMEstimatorSpec,
    PowerDim,
    ScaleMixture,
    ScenarioConfig,
    SEstimatorSpec,
    Vertical,
    run_breakdown_experiment,
    run_normality_experiment,
    run_rate_experiment,
    run_scale_consistency_experiment,
    run_uniform_convergence_check,
)

DEFAULT_RHO0 = "bisquare:1.547"
DEFAULT_RHO1 = "bisquare:4.685"
DEFAULT_B = 0.5


class CliError(Exception):
    """Input problem; maps to exit code 1."""


def _threads(value) -> int:
    if value is not None:
        return max(1, int(value))
    env = os.environ.get("ROBREG_THREADS")
    return max(1, int(env)) if env else 1


def _read_matrix(path: str, header: bool) -> np.ndarray:
    import warnings

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # empty-file warning; handled below
            data = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise CliError(f"{path} is not numeric CSV: {exc}") from exc
    if data.size == 0:
        raise CliError(f"{path} contains no data")
    if not np.all(np.isfinite(data)):
        raise CliError(f"{path} contains non-finite values")
    return data


def _parse_kernel(text: str) -> RhoKernel:
    try:
        return RhoKernel.parse(text)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def cmd_fit(args) -> int:
    x = _read_matrix(args.design, args.header)
    y = _read_matrix(args.response, args.header)
    if y.shape[1] != 1:
        raise CliError(f"response {args.response} must be a single column, got {y.shape[1]}")
    y = y[:, 0]
    if x.shape[0] != y.shape[0]:
        raise CliError(
            f"design has {x.shape[0]} rows but response has {y.shape[0]}"
        )
    try:
        problem = RegressionProblem(x, y)
    except ValueError as exc:
        raise CliError(str(exc)) from exc

    rho0 = _parse_kernel(args.rho0)
    rho1 = _parse_kernel(args.rho1)
    if not (0.0 < args.b < 1.0):
        raise CliError("--b must lie strictly between 0 and 1")
    spec = MScaleSpec(rho0, b=args.b)
    s_conf = SFitConfig(spec, seed=args.seed)

    try:
        if args.estimator == "ls":
            fit = fit_least_squares(problem)
        elif args.estimator == "s":
            fit = fit_s(problem, s_conf)
        else:
            fit = fit_mm(problem, s_conf, MMFitConfig(rho1, max_iter=args.mm_max_iter))
    except RobregError as exc:
        raise CliError(str(exc)) from exc

    if args.contrast:
        try:
            a_n = np.array([float(v) for v in args.contrast.split(",")])
        except ValueError as exc:
            raise CliError(f"bad --contrast: {exc}") from exc
    else:
        a_n = np.zeros(problem.p)
        a_n[0] = 1.0

    doc = {
        "beta": [float(v) for v in fit.beta],
        "scale": fit.scale,
        "objective": fit.objective,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "exact_fit": fit.exact_fit,
        "method": fit.method,
    }
    if fit.kernel is not None and fit.scale > 0:
        try:
            ci = contrast_inference(problem, fit, a_n, level=args.level,
                                    moments_source=PlugInEmpirical())
            doc["contrast"] = {
                "a_n": [float(v) for v in ci.a_n],
                "estimate": ci.estimate,
                "std_error": ci.std_error,
                "ci_low": ci.ci_low,
                "ci_high": ci.ci_high,
                "level": ci.level,
                "r_n": ci.r_n,
            }
        except RobregError as exc:
            doc["contrast_error"] = str(exc)

    payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
        res_path = os.path.splitext(args.out)[0] + ".residuals.csv"
        resid = problem.residuals(fit.beta)
        with open(res_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(repr(float(v)) for v in resid) + "\n")
    else:
        sys.stdout.write(payload)
    return 0 if fit.converged else 2


# ---------------------------------------------------------------------------
# diagnose
# ---------------------------------------------------------------------------


def cmd_diagnose(args) -> int:
    x = _read_matrix(args.design, args.header)
    try:
        n, p = x.shape
        if n <= p:
            raise ValueError(f"need more rows than columns (n={n}, p={p})")
        problem = RegressionProblem(x, np.zeros(n))
        report = check_conditions(problem, b=args.b, alpha=args.alpha, seed=args.seed)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    payload = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

_SCENARIO_KEYS = {
    "experiment", "n_grid", "dim_rule", "design", "errors", "beta0",
    "contamination", "replications", "seed", "estimator", "n_subsamples",
    "a_rule", "n_probes",
}


def _parse_tagged(text, name, arg_counts):
    """Parse 'tag' or 'tag:a,b,...' with an allowed arg count per tag."""
    head, _, tail = text.partition(":")
    head = head.strip().lower()
    if head not in arg_counts:
        raise CliError(f"unknown {name} {head!r}; choose from {sorted(arg_counts)}")
    args = [a for a in tail.split(",") if a.strip()] if tail else []
    allowed = arg_counts[head]
    if len(args) not in (allowed if isinstance(allowed, tuple) else (allowed,)):
        raise CliError(f"{name} {head!r} takes {allowed} argument(s), got {len(args)}")
    try:
        return head, [float(a) for a in args]
    except ValueError as exc:
        raise CliError(f"bad numeric argument in {name} {text!r}") from exc


def parse_scenario(path: str) -> dict:
    """Flat key=value scenario document; unknown keys are rejected."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CliError(f"cannot read scenario {path}: {exc}") from exc
    kv = {}
    unknown = []
    for ln, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{ln}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        if key not in _SCENARIO_KEYS:
            unknown.append(key)
            continue
        kv[key] = value.strip()
    if unknown:
        raise CliError(f"unknown scenario key(s): {', '.join(sorted(set(unknown)))}")
    if "experiment" not in kv:
        raise CliError("scenario is missing the required key 'experiment'")
    if "n_grid" not in kv:
        raise CliError("scenario is missing the required key 'n_grid'")
    if "dim_rule" not in kv:
        raise CliError("scenario is missing the required key 'dim_rule'")
    return kv


def scenario_to_config(kv: dict) -> tuple[str, ScenarioConfig, dict]:
    experiment = kv["experiment"].strip().lower()
    if experiment not in ("rate", "normality", "scale", "breakdown", "uniform"):
        raise CliError(f"unknown experiment {experiment!r}")

    try:
        n_grid = tuple(int(v) for v in kv["n_grid"].split(","))
    except ValueError as exc:
        raise CliError(f"bad n_grid {kv['n_grid']!r}") from exc

    tag, args = _parse_tagged(kv["dim_rule"], "dim_rule", {"fixed": 1, "power": 1, "lognk": 1})
    if tag == "fixed":
        dim_rule = FixedDim(int(args[0]))
    elif tag == "power":
        dim_rule = PowerDim(args[0])
    else:
        dim_rule = LogDim(args[0])

    tag, args = _parse_tagged(
        kv.get("design", "gaussian_identity"), "design",
        {"gaussian_identity": 0, "gaussian_toeplitz": 1, "scale_mixture": 0},
    )
    design = {"gaussian_identity": GaussianIdentity(),
              "scale_mixture": ScaleMixture()}.get(tag) or GaussianToeplitz(args[0])

    tag, args = _parse_tagged(
        kv.get("errors", "gaussian:1"), "errors",
        {"gaussian": 1, "cauchy": 1, "contaminated_gaussian": 3},
    )
    if tag == "gaussian":
        errors = Gaussian(args[0])
    elif tag == "cauchy":
        errors = Cauchy(args[0])
    else:
        errors = ContaminatedGaussian(args[0], args[1], args[2])

    beta0 = kv.get("beta0", "unit_spread").strip().lower()

    cont_text = kv.get("contamination", "none").strip().lower()
    if cont_text == "none":
        contamination = None
    else:
        tag, args = _parse_tagged(cont_text, "contamination", {"vertical": 2, "bad_leverage": 3})
        if tag == "vertical":
            contamination = Contamination(args[0], Vertical(args[1]))
        else:
            contamination = Contamination(args[0], BadLeverage(args[1], args[2]))

    tag, args = _parse_tagged(
        kv.get("estimator", "mm:1.547,4.685,0.5"), "estimator",
        {"s": 2, "mm": 3, "ls": 0},
    )
    if tag == "s":
        estimator = SEstimatorSpec(c0=args[0], b=args[1])
    elif tag == "mm":
        estimator = MMEstimatorSpec(c0=args[0], c1=args[1], b=args[2])
    else:
        estimator = LSBaselineSpec()

    try:
        replications = int(kv.get("replications", "200"))
        seed = int(kv.get("seed", "0"))
        n_subsamples = int(kv.get("n_subsamples", "500"))
        n_probes = int(kv.get("n_probes", "10000"))
    except ValueError as exc:
        raise CliError(f"bad integer scenario value: {exc}") from exc

    a_rule = kv.get("a_rule", "first_coordinate").strip().lower()

    try:
        config = ScenarioConfig(
            n_grid=n_grid, dim_rule=dim_rule, design_law=design, error_law=errors,
            beta0_rule=beta0, contamination=contamination, replications=replications,
            seed=seed, estimator=estimator, n_subsamples=n_subsamples,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    return experiment, config, {"a_rule": a_rule, "n_probes": n_probes}


def _print_table(aggregates) -> None:
    if not aggregates:
        return
    keys = sorted(aggregates[0].keys(), key=lambda k: (k not in ("n", "p"), k))
    widths = {k: max(len(k), 12) for k in keys}
    print("  ".join(k.ljust(widths[k]) for k in keys))
    for row in aggregates:
        cells = []
        for k in keys:
            v = row.get(k, "")
            cells.append((f"{v:.6g}" if isinstance(v, float) else str(v)).ljust(widths[k]))
        print("  ".join(cells))


def cmd_simulate(args) -> int:
    kv = parse_scenario(args.scenario)
    experiment, config, extra = scenario_to_config(kv)
    workers = _threads(args.threads)
    prefix = args.out or os.path.splitext(os.path.basename(args.scenario))[0]

    if experiment == "uniform":
        est = config.estimator
        if isinstance(est, LSBaselineSpec):
            raise CliError("uniform experiment needs an S or MM estimator for its loss")
        rho = RhoKernel("bisquare", est.c0)
        results = []
        for n in config.n_grid:
            p = config.dims(n)
            sup = run_uniform_convergence_check(
                n, p, rho, config.error_law, extra["n_probes"], seed=config.seed,
                design_law=config.design_law, b=getattr(est, "b", 0.5),
            )
            results.append({"n": n, "p": p, "n_probes": extra["n_probes"],
                            "sup_discrepancy": sup})
        with open(prefix + ".json", "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(prefix + ".csv", "w", encoding="utf-8") as fh:
            fh.write("n,p,n_probes,sup_discrepancy\n")
            for r in results:
                fh.write(f"{r['n']},{r['p']},{r['n_probes']},{r['sup_discrepancy']!r}\n")
        _print_table(results)
        return 0

    if experiment == "rate":
        report = run_rate_experiment(config, workers=workers)
    elif experiment == "normality":
        report = run_normality_experiment(config, a_rule=extra["a_rule"], workers=workers)
    elif experiment == "scale":
        try:
            report = run_scale_consistency_experiment(config, workers=workers)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    else:
        try:
            report = run_breakdown_experiment(config, workers=workers)
        except ValueError as exc:
            raise CliError(str(exc)) from exc

    report.write_csv(prefix + ".csv")
    report.write_aggregates(prefix + ".json")
    _print_table(report.aggregates)
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robreg",
        description="Robust linear regression (S/MM-estimators) and its Monte Carlo harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a robust regression from CSV files")
    p_fit.add_argument("--design", required=True, help="CSV with the n x p design matrix")
    p_fit.add_argument("--response", required=True, help="CSV with the n responses")
    p_fit.add_argument("--rho0", default=DEFAULT_RHO0, help="scale loss, family:c")
    p_fit.add_argument("--rho1", default=DEFAULT_RHO1, help="efficiency loss, family:c")
    p_fit.add_argument("--b", type=float, default=DEFAULT_B, help="scale breakdown target")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--threads", type=int, default=None)
    p_fit.add_argument("--out", default=None, help="JSON output path (stdout if omitted)")
    p_fit.add_argument("--header", action="store_true", help="CSV files carry a header row")
    p_fit.add_argument("--estimator", choices=("mm", "s", "ls"), default="mm")
    p_fit.add_argument("--contrast", default=None, help="comma-separated contrast vector")
    p_fit.add_argument("--level", type=float, default=0.95)
    p_fit.add_argument("--mm-max-iter", type=int, default=100)
    p_fit.set_defaults(func=cmd_fit)

    p_diag = sub.add_parser("diagnose", help="design-matrix conditioning report")
    p_diag.add_argument("--design", required=True)
    p_diag.add_argument("--alpha", type=float, default=0.75)
    p_diag.add_argument("--b", type=float, default=DEFAULT_B)
    p_diag.add_argument("--seed", type=int, default=0)
    p_diag.add_argument("--out", default=None)
    p_diag.add_argument("--header", action="store_true")
    p_diag.set_defaults(func=cmd_diagnose)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo scenario file")
    p_sim.add_argument("scenario", help="key=value scenario document")
    p_sim.add_argument("--out", default=None, help="output prefix (default: scenario stem)")
    p_sim.add_argument("--threads", type=int, default=None)
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"robreg: error: {exc}", file=sys.stderr)
        return 1
    except RobregError as exc:
        print(f"robreg: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
