"""Monte Carlo harness for the estimators' large-sample behaviour.

Generates synthetic regression data where the number of parameters may grow
with the sample size, fits S/MM/LS estimators, and aggregates the statistics
that the asymptotic theory predicts: consistency of the residual scale,
boundedness of sqrt(n/p) * estimation error, normality and CI coverage of
linear contrasts, uniform closeness of loss averages to their expectations,
and the robustness gap under contamination.

Reproducibility contract: every replication draws from a counter-based
substream keyed by (seed, n, rep), rows are sorted before aggregation, and
the worker pool size never changes the output.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.stats import norm as _normal

from .inference import (
    ErrorLaw,
    Gaussian,
    asymptotic_moments,
    contrast_se_pieces,
    expected_loss_profile,
    population_scale,
)
from .kernels import RhoKernel
from .mmfit import MMFitConfig, fit_mm, gradient_norm
from .mscale import MScaleSpec, scale_equation
from .problem import FitResult, RegressionProblem, fit_least_squares
from .sfit import SFitConfig, fit_s

CSV_HEADER = "n,p,rep,err,rate_stat,scale,z,covered,ms"

_AUDIT_EVERY = 100  # spot-audit one replication in a hundred


# ---------------------------------------------------------------------------
# scenario vocabulary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedDim:
    p: int

    def dim(self, n: int) -> int:
        return self.p


@dataclass(frozen=True)
class PowerDim:
    """p = round(n^gamma)."""

    gamma: float

    def dim(self, n: int) -> int:
        return max(1, int(round(n ** self.gamma)))


@dataclass(frozen=True)
class LogDim:
    """p = round(kappa * n / log n)."""

    kappa: float

    def dim(self, n: int) -> int:
        return max(1, int(round(self.kappa * n / np.log(n))))


DimRule = Union[FixedDim, PowerDim, LogDim]


@dataclass(frozen=True)
class GaussianIdentity:
    def sample(self, rng, n, p):
        return rng.standard_normal((n, p))


@dataclass(frozen=True)
class GaussianToeplitz:
    """Rows ~ N(0, T) with T[j, k] = r^|j-k|."""

    r: float = 0.5

    def sample(self, rng, n, p):
        if not (0.0 <= self.r < 1.0):
            raise ValueError("Toeplitz correlation must lie in [0, 1)")
        cov = self.r ** np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
        chol = np.linalg.cholesky(cov)
        return rng.standard_normal((n, p)) @ chol.T


@dataclass(frozen=True)
class ScaleMixture:
    """Rows v_i * z_i with z_i ~ N(0, I) and v_i uniform on [low, high]."""

    low: float = 0.5
    high: float = 2.0

    def sample(self, rng, n, p):
        v = rng.uniform(self.low, self.high, size=n)
        return rng.standard_normal((n, p)) * v[:, None]


DesignLaw = Union[GaussianIdentity, GaussianToeplitz, ScaleMixture]


@dataclass(frozen=True)
class Vertical:
    """Response replaced by a fixed large value."""

    k_y: float = 1e6


@dataclass(frozen=True)
class BadLeverage:
    """Row replaced by k_x * e1, response by k_y: leverage plus bias."""

    k_x: float = 100.0
    k_y: float = 1e6


@dataclass(frozen=True)
class Contamination:
    fraction: float
    scheme: Union[Vertical, BadLeverage]

    def __post_init__(self):
        if not (0.0 <= self.fraction < 0.5):
            raise ValueError("contamination fraction must lie in [0, 0.5)")


@dataclass(frozen=True)
class SEstimatorSpec:
    c0: float = 1.547
    b: float = 0.5


@dataclass(frozen=True)
class MMEstimatorSpec:
    c0: float = 1.547
    c1: float = 4.685
    b: float = 0.5


@dataclass(frozen=True)
class LSBaselineSpec:
    pass


EstimatorSpec = Union[SEstimatorSpec, MMEstimatorSpec, LSBaselineSpec]


@dataclass(frozen=True)
class ScenarioConfig:
    n_grid: tuple
    dim_rule: DimRule
    design_law: DesignLaw = GaussianIdentity()
    error_law: ErrorLaw = Gaussian(1.0)
    beta0_rule: str = "unit_spread"  # or "zero"
    contamination: Optional[Contamination] = None
    replications: int = 200
    seed: int = 0
    estimator: EstimatorSpec = MMEstimatorSpec()
    n_subsamples: int = 500

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if len(self.n_grid) == 0:
            raise ValueError("n_grid must be nonempty")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.beta0_rule not in ("zero", "unit_spread"):
            raise ValueError("beta0_rule must be 'zero' or 'unit_spread'")
        b = getattr(self.estimator, "b", 0.5)
        for n in self.n_grid:
            p = self.dim_rule.dim(n)
            if p >= n:
                raise ValueError(f"grid point n={n} gives p={p} >= n")
            if p >= int(np.floor(n * (1.0 - b) + 1e-9)):
                raise ValueError(
                    f"grid point n={n} gives p={p}, infeasible for breakdown target b={b}"
                )

    def dims(self, n: int) -> int:
        return self.dim_rule.dim(n)


# ---------------------------------------------------------------------------
# data generation
# ---------------------------------------------------------------------------


def _beta0(config: ScenarioConfig, p: int) -> np.ndarray:
    if config.beta0_rule == "zero":
        return np.zeros(p)
    return np.ones(p) / np.sqrt(p)


def generate_scenario(config: ScenarioConfig, n: int, rep: int = 0):
    """One dataset: (problem, true beta, true errors), keyed by (seed, n, rep)."""
    p = config.dims(n)
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence((config.seed, n, rep, 0)))
    )
    x = config.design_law.sample(rng, n, p)
    u = config.error_law.sample(rng, n)
    beta0 = _beta0(config, p)
    if config.beta0_rule == "zero":
        y = u.copy()  # exact: no arithmetic on the errors
    else:
        y = x @ beta0 + u
    cont = config.contamination
    if cont is not None and cont.fraction > 0.0:
        k = int(np.floor(cont.fraction * n))
        if k > 0:
            idx = rng.choice(n, size=k, replace=False)
            if isinstance(cont.scheme, Vertical):
                y[idx] = cont.scheme.k_y
            else:
                x[idx] = 0.0
                x[idx, 0] = cont.scheme.k_x
                y[idx] = cont.scheme.k_y
    return RegressionProblem(x, y), beta0, u


def _fit_seed(config: ScenarioConfig, n: int, rep: int) -> int:
    state = np.random.SeedSequence((config.seed, n, rep, 1)).generate_state(1, np.uint64)
    return int(state[0])


def _estimator_pieces(config: ScenarioConfig, n: int, rep: int):
    est = config.estimator
    spec = MScaleSpec(RhoKernel("bisquare", est.c0), b=est.b)
    s_conf = SFitConfig(spec, n_subsamples=config.n_subsamples, seed=_fit_seed(config, n, rep))
    mm_conf = None
    if isinstance(est, MMEstimatorSpec):
        mm_conf = MMFitConfig(RhoKernel("bisquare", est.c1))
    return spec, s_conf, mm_conf


def fit_for_scenario(config: ScenarioConfig, problem: RegressionProblem, n: int, rep: int) -> FitResult:
    """Fit the configured estimator on one generated dataset."""
    if isinstance(config.estimator, LSBaselineSpec):
        return fit_least_squares(problem)
    spec, s_conf, mm_conf = _estimator_pieces(config, n, rep)
    if isinstance(config.estimator, SEstimatorSpec):
        return fit_s(problem, s_conf)
    return fit_mm(problem, s_conf, mm_conf)


def _audit_fit(config: ScenarioConfig, problem: RegressionProblem, fit: FitResult) -> None:
    """Spot-check module invariants on a fitted replication; raises on violation."""
    objs = [t[1] for t in fit.trace]
    if any(b > a + 1e-12 * (1 + abs(a)) for a, b in zip(objs, objs[1:])):
        raise RuntimeError("audit: fit trace is not nonincreasing")
    if fit.method == "s" and not fit.exact_fit and fit.scale > 0:
        est = config.estimator
        spec = MScaleSpec(RhoKernel("bisquare", est.c0), b=est.b)
        resid = problem.residuals(fit.beta)
        if abs(scale_equation(spec, resid, fit.scale)) > 1e-10:
            raise RuntimeError("audit: S-fit scale does not solve the scale equation")
    if fit.method == "mm" and fit.converged and not fit.exact_fit and fit.kernel is not None:
        g = gradient_norm(problem, fit.kernel, fit.beta, fit.scale)
        if g > 1e-6 * np.sqrt(problem.n) * problem.p:
            raise RuntimeError("audit: MM gradient stationarity violated")


# ---------------------------------------------------------------------------
# per-replication worker and report container
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class RepRow:
    """One replication record.

    ``ms`` is measured wall time, kept for budgeting but excluded from
    equality: the reproducibility contract covers the statistical fields,
    which are bit-identical for a given config at any parallelism degree.
    """

    n: int
    p: int
    rep: int
    err: float
    rate_stat: float
    scale: float
    z: float
    covered: float
    ms: float

    def _key(self):
        return (self.n, self.p, self.rep, self.err, self.rate_stat, self.scale,
                _canon(self.z), _canon(self.covered))

    def __eq__(self, other):
        if not isinstance(other, RepRow):
            return NotImplemented
        return self._key() == other._key()


def _canon(v: float) -> float:
    # nan != nan would break row comparisons for experiments without z/covered
    return -1e308 if np.isnan(v) else v


def _rep_worker(args):
    """One replication; module-level for process-pool pickling."""
    config, n, rep, need, aux = args
    p = config.dims(n)
    problem, beta0, _ = generate_scenario(config, n, rep)
    t0 = time.perf_counter()
    fit = fit_for_scenario(config, problem, n, rep)
    err = float(np.linalg.norm(fit.beta - beta0))
    z = float("nan")
    covered = float("nan")
    extra = {}
    if need == "normality":
        a_n, r_n = contrast_se_pieces(problem, aux["a_n"])
        sd = np.sqrt(aux["s0"] ** 2 * aux["a_m"] / aux["b_m"] ** 2)
        z = float(np.sqrt(n) * (a_n @ (fit.beta - beta0)) / (r_n * sd))
        covered = float(abs(z) <= aux["z_crit"])
    elif need == "scale":
        extra["scale_err"] = abs(fit.scale - aux["s_f0"])
    elif need == "breakdown":
        ls = fit_least_squares(problem)
        extra["ls_err"] = float(np.linalg.norm(ls.beta - beta0))
    ms = (time.perf_counter() - t0) * 1e3
    if rep % _AUDIT_EVERY == 0:
        _audit_fit(config, problem, fit)
    row = RepRow(
        n=n, p=p, rep=rep, err=err, rate_stat=float(np.sqrt(n / p) * err),
        scale=float(fit.scale), z=z, covered=covered, ms=float(ms),
    )
    return row, extra


def _run_grid(config: ScenarioConfig, need: str, aux_for, workers: int = 1):
    """Run all (n, rep) tasks, deterministically, optionally in processes."""
    tasks = []
    aux_by_n = {}
    for n in config.n_grid:
        aux_by_n[n] = aux_for(n)
        for rep in range(config.replications):
            tasks.append((config, n, rep, need, aux_by_n[n]))
    if workers <= 1:
        outcomes = [_rep_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_rep_worker, tasks, chunksize=8))
    pairs = sorted(zip(tasks, outcomes), key=lambda to: (to[0][1], to[0][2]))
    rows = [row for _, (row, _) in pairs]
    extras = [extra for _, (_, extra) in pairs]
    return rows, extras, aux_by_n


@dataclass
class ExperimentReport:
    """Per-replication rows plus per-(n, p) aggregate summaries."""

    rows: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)

    def write_csv(self, path) -> None:
        lines = [CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.n},{r.p},{r.rep},{r.err!r},{r.rate_stat!r},{r.scale!r},"
                f"{r.z!r},{r.covered!r},{r.ms!r}"
            )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @staticmethod
    def read_csv(path) -> list:
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise ValueError(f"unexpected header {header!r}")
            for line in fh:
                f = line.strip().split(",")
                rows.append(
                    RepRow(
                        n=int(f[0]), p=int(f[1]), rep=int(f[2]), err=float(f[3]),
                        rate_stat=float(f[4]), scale=float(f[5]), z=float(f[6]),
                        covered=float(f[7]), ms=float(f[8]),
                    )
                )
        return rows

    def write_aggregates(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.aggregates, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def read_aggregates(path) -> list:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)


def _base_aggregate(rows_n):
    errs = np.array([r.err for r in rows_n])
    rates = np.array([r.rate_stat for r in rows_n])
    scales = np.array([r.scale for r in rows_n])
    return {
        "n": rows_n[0].n,
        "p": rows_n[0].p,
        "replications": len(rows_n),
        "median_err": float(np.median(errs)),
        "median_rate_stat": float(np.median(rates)),
        "median_scale": float(np.median(scales)),
        "mean_ms": float(np.mean([r.ms for r in rows_n])),
    }


def _rows_by_n(rows, n):
    return [r for r in rows if r.n == n]


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def run_rate_experiment(config: ScenarioConfig, workers: int = 1) -> ExperimentReport:
    """Record sqrt(n/p) * ||beta_hat - beta0|| across the grid.

    If the error of the estimator shrinks at the sqrt(p/n) rate, the medians
    of the rate statistic stay bounded across grid points.
    """
    rows, _, _ = _run_grid(config, "rate", lambda n: {}, workers)
    aggregates = [_base_aggregate(_rows_by_n(rows, n)) for n in config.n_grid]
    return ExperimentReport(rows=rows, aggregates=aggregates)


def run_normality_experiment(
    config: ScenarioConfig, a_rule: str = "first_coordinate", workers: int = 1
) -> ExperimentReport:
    """Standardized contrast z-scores, CI coverage, and normal QQ agreement.

    The standardization constants (limit scale and the two psi moments) come
    from quadrature against the configured error law, so each z-score should
    be approximately standard normal.
    """
    if a_rule not in ("first_coordinate", "random_unit"):
        raise ValueError("a_rule must be 'first_coordinate' or 'random_unit'")
    est = config.estimator
    if isinstance(est, LSBaselineSpec):
        raise ValueError("normality experiment needs an S or MM estimator")
    spec = MScaleSpec(RhoKernel("bisquare", est.c0), b=est.b)
    psi_kernel = RhoKernel("bisquare", est.c1 if isinstance(est, MMEstimatorSpec) else est.c0)
    s0 = population_scale(spec, config.error_law)
    a_m, b_m = asymptotic_moments(psi_kernel, s0, config.error_law)
    z_crit = float(_normal.ppf(0.975))

    def aux_for(n):
        p = config.dims(n)
        if a_rule == "first_coordinate":
            a_n = np.zeros(p)
            a_n[0] = 1.0
        else:
            rng = np.random.Generator(
                np.random.Philox(np.random.SeedSequence((config.seed, n, 2)))
            )
            a_n = rng.standard_normal(p)
            a_n /= np.linalg.norm(a_n)
        return {"a_n": a_n, "s0": s0, "a_m": a_m, "b_m": b_m, "z_crit": z_crit}

    rows, _, _ = _run_grid(config, "normality", aux_for, workers)
    aggregates = []
    for n in config.n_grid:
        rows_n = _rows_by_n(rows, n)
        agg = _base_aggregate(rows_n)
        zs = np.sort(np.array([r.z for r in rows_n]))
        m = zs.size
        probs = (np.arange(1, m + 1) - 0.5) / m
        qq = float(np.corrcoef(zs, _normal.ppf(probs))[0, 1])
        agg.update(
            coverage=float(np.mean([r.covered for r in rows_n])),
            z_mean=float(zs.mean()),
            z_var=float(zs.var(ddof=1)),
            qq_corr=qq,
            s0=s0, a_moment=a_m, b_moment=b_m,
        )
        aggregates.append(agg)
    return ExperimentReport(rows=rows, aggregates=aggregates)


def run_scale_consistency_experiment(config: ScenarioConfig, workers: int = 1) -> ExperimentReport:
    """|s_hat - s(F0)| across the grid for the S-estimator's residual scale."""
    if not isinstance(config.estimator, SEstimatorSpec):
        raise ValueError("scale-consistency experiment requires the S estimator")
    spec = MScaleSpec(RhoKernel("bisquare", config.estimator.c0), b=config.estimator.b)
    s_f0 = population_scale(spec, config.error_law)
    rows, extras, _ = _run_grid(config, "scale", lambda n: {"s_f0": s_f0}, workers)
    aggregates = []
    for n in config.n_grid:
        rows_n = _rows_by_n(rows, n)
        agg = _base_aggregate(rows_n)
        errs = [e["scale_err"] for r, e in zip(rows, extras) if r.n == n]
        agg.update(median_scale_err=float(np.median(errs)), s_f0=s_f0)
        aggregates.append(agg)
    return ExperimentReport(rows=rows, aggregates=aggregates)


def run_breakdown_experiment(config: ScenarioConfig, workers: int = 1) -> ExperimentReport:
    """Estimator error next to the LS baseline under identical contamination."""
    b = getattr(config.estimator, "b", 0.5)
    frac = config.contamination.fraction if config.contamination else 0.0
    if frac >= 1.0 - b:
        raise ValueError("contamination fraction must stay below the breakdown margin 1-b")
    rows, extras, _ = _run_grid(config, "breakdown", lambda n: {}, workers)
    aggregates = []
    for n in config.n_grid:
        rows_n = _rows_by_n(rows, n)
        agg = _base_aggregate(rows_n)
        ls_errs = np.array([e["ls_err"] for r, e in zip(rows, extras) if r.n == n])
        errs = np.array([r.err for r in rows_n])
        ratio = ls_errs / np.maximum(errs, 1e-300)
        agg.update(
            ls_median_err=float(np.median(ls_errs)),
            err_ratio_median=float(np.median(ratio)),
            err_ratio_q10=float(np.quantile(ratio, 0.10)),
        )
        aggregates.append(agg)
    return ExperimentReport(rows=rows, aggregates=aggregates)


def run_uniform_convergence_check(
    n: int,
    p: int,
    rho: RhoKernel,
    law: ErrorLaw,
    n_probes: int,
    seed: int = 0,
    design_law: DesignLaw = GaussianIdentity(),
    b: float = 0.5,
) -> float:
    """Sup over probed (shift, scale) pairs of |loss average - its expectation|.

    One dataset is drawn; each probe picks a direction uniformly on the
    sphere, a shift radius from a fixed grid, and a scale from a log grid in
    [0.1 s(F0), 2 s(F0)], then compares (1/n) sum rho((u_i - x_i'b)/s)
    against the average of the pointwise expectations R(x_i'b, s).
    """
    if n_probes < 1:
        raise ValueError("n_probes must be >= 1")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, n, 3))))
    x = design_law.sample(rng, n, p)
    u = law.sample(rng, n)
    s_f0 = population_scale(MScaleSpec(rho, b=b), law)
    s_grid = np.geomspace(0.1 * s_f0, 2.0 * s_f0, 8)
    radius_grid = np.array([0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0])
    sup = 0.0
    for j in range(n_probes):
        direction = rng.standard_normal(p)
        direction /= np.linalg.norm(direction)
        radius = radius_grid[j % radius_grid.size]
        s = float(s_grid[(j // radius_grid.size) % s_grid.size])
        v = x @ (radius * direction)
        emp = float(np.mean(rho.rho((u - v) / s)))
        ref = float(np.mean(expected_loss_profile(rho, law, v, s)))
        sup = max(sup, abs(emp - ref))
    return sup
