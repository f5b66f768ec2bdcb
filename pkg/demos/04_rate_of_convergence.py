"""Estimation error when the number of parameters grows with n.

With p = round(n^0.4) coefficients, the MM error shrinks like sqrt(p/n):
multiplying the error by sqrt(n/p) should give a roughly constant statistic
across the grid.  A small replication budget keeps this demo quick; the
acceptance suite runs the full-size version.  Run:

    python demos/04_rate_of_convergence.py
"""

from robreg import GaussianIdentity, Gaussian, MMEstimatorSpec, PowerDim, ScenarioConfig, run_rate_experiment

config = ScenarioConfig(
    n_grid=(250, 500, 1000),
    dim_rule=PowerDim(0.4),
    design_law=GaussianIdentity(),
    error_law=Gaussian(1.0),
    beta0_rule="unit_spread",
    replications=30,
    seed=4,
    estimator=MMEstimatorSpec(),
    n_subsamples=200,
)

report = run_rate_experiment(config)
print(f"{'n':>6} {'p':>4} {'median err':>12} {'sqrt(n/p)*err':>14}")
for agg in report.aggregates:
    print(f"{agg['n']:>6} {agg['p']:>4} {agg['median_err']:>12.4f} {agg['median_rate_stat']:>14.3f}")
print()
print("errors fall as n grows while the rate statistic stays bounded;")
print("that boundedness is the testable content of the sqrt(p/n) rate.")
