"""S-estimation: minimize the M-scale of the regression residuals.

The global minimizer is approximated with the standard subsampling scheme:

1. draw random p-point subsamples and solve each exactly,
2. improve every candidate with two cheap concentration steps,
3. fully concentrate the ``n_keep`` best candidates and return the winner.

A concentration step solves a weighted least-squares problem with IRLS
weights evaluated at the current standardized residuals; for these loss
families the step never increases the residual M-scale, so candidate traces
are nonincreasing.  The ordinary LS solution is always included as a
candidate, which keeps the final scale at or below the M-scale of the LS
residuals.

Randomness is drawn from one counter-based (Philox) substream per subsample
slot, so results are reproducible for a given seed at any parallelism
degree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DegenerateDesignError
from .mscale import MScaleSpec, m_scale
from .problem import FitResult, RegressionProblem, fit_least_squares

# Resample attempts per subsample slot before declaring the slot degenerate.
_MAX_RESAMPLE = 100

# Cheap refinement steps applied to every raw subsample candidate.
_CHEAP_STEPS = 2

# Extra concentration budget for polishing the winning candidate to tolerance.
_POLISH_STEPS = 200


@dataclass(frozen=True)
class SFitConfig:
    """Knobs for the randomized S-fit search."""

    mscale: MScaleSpec
    n_subsamples: int = 500
    n_keep: int = 5
    n_concentration: int = 20
    i_step_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.n_subsamples < 1 or self.n_keep < 1 or self.n_concentration < 1:
            raise ValueError("subsample, keep and concentration counts must be >= 1")
        if self.n_keep > self.n_subsamples:
            raise ValueError("n_keep cannot exceed n_subsamples")
        if not (self.i_step_tol > 0.0):
            raise ValueError("i_step_tol must be positive")


def _weighted_ls(x, y, w):
    """Solve the weighted normal equations; None when not positive definite."""
    sw = np.sqrt(w)
    xw = x * sw[:, None]
    g = xw.T @ xw
    rhs = xw.T @ (y * sw)
    try:
        cf = scipy.linalg.cho_factor(g, check_finite=False)
    except scipy.linalg.LinAlgError:
        return None
    beta = scipy.linalg.cho_solve(cf, rhs, check_finite=False)
    if not np.all(np.isfinite(beta)):
        return None
    return beta


def _fast_weight(family: str, c: float):
    """IRLS weight up to a constant factor (weighted LS is invariant to it)."""
    if family == "bisquare":
        def wfun(r, s):
            t2 = r / (s * c)
            t2 *= t2
            w = 1.0 - np.minimum(t2, 1.0)
            return w * w
    elif family == "quartic":
        def wfun(r, s):
            t2 = r / (s * c)
            t2 *= t2
            w = 1.0 - np.minimum(t2, 1.0)
            return w * w * w
    else:  # expsquared
        def wfun(r, s):
            t2 = r / (s * c)
            t2 *= t2
            return np.exp(-t2)
    return wfun


def _cstep(x, y, spec, wfun, beta, r, s):
    """One concentration step from (beta, residuals, scale).

    Returns ``(beta, r, s, accepted)``; a step is rejected (inputs returned
    unchanged) when the weighted system is singular or the M-scale would not
    decrease.
    """
    beta_new = _weighted_ls(x, y, wfun(r, s))
    if beta_new is None:
        return beta, r, s, False
    r_new = y - x @ beta_new
    s_new = m_scale(spec, r_new, s_hint=s)
    if not np.isfinite(s_new) or s_new > s:
        return beta, r, s, False
    return beta_new, r_new, s_new, True


def concentration_step(problem: RegressionProblem, mscale: MScaleSpec, beta_in):
    """Public single-step interface.

    Returns ``(beta_out, scale_out, accepted)`` with
    ``scale_out <= m_scale(residuals(beta_in))`` always; ``accepted`` is
    False when the step was rejected and ``beta_in`` is returned.
    """
    beta_in = np.asarray(beta_in, dtype=float).ravel()
    r = problem.residuals(beta_in)
    s = m_scale(mscale, r)
    if not (s > 0.0):
        raise ValueError("concentration requires a positive residual M-scale")
    wfun = _fast_weight(mscale.rho0.family, mscale.rho0.c)
    beta, _, s_out, accepted = _cstep(problem.x, problem.y, mscale, wfun, beta_in, r, s)
    return beta, s_out, accepted


def _subsample_candidate(x, y, n, p, child):
    """Exact solution of a random p-subsample; None if every attempt is singular.

    Float pivots rarely make LU raise on an exactly singular subsample, so a
    scale-free conditioning proxy (||A|| ||beta|| / ||y||, a lower bound on
    the condition number along y) rejects solutions with no correct digits.
    """
    rng = np.random.Generator(np.random.Philox(child))
    for _ in range(_MAX_RESAMPLE):
        idx = rng.choice(n, size=p, replace=False)
        a_sub, y_sub = x[idx], y[idx]
        try:
            beta = np.linalg.solve(a_sub, y_sub)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(beta)):
            continue
        y_norm = np.max(np.abs(y_sub))
        if y_norm > 0 and np.max(np.abs(a_sub)) * np.max(np.abs(beta)) > 1e12 * y_norm:
            continue
        return beta
    return None


def fit_s(problem: RegressionProblem, config: SFitConfig) -> FitResult:
    """Best local minimizer of the residual M-scale found by the search.

    Deterministic given ``config.seed``.  Raises DegenerateDesignError when
    the dimension is infeasible for the breakdown target (``p >= (1-b) n``)
    or every subsample is singular.  An exact fit of at least ``(1-b) n``
    points short-circuits with ``exact_fit=True`` and scale ~ 0.
    """
    spec = config.mscale
    x, y = problem.x, problem.y
    n, p = problem.n, problem.p
    if p >= (1.0 - spec.b) * n:
        raise DegenerateDesignError(
            f"p={p} is infeasible for breakdown target b={spec.b} at n={n}: need p < (1-b) n"
        )
    exact_tol = 1e-12 * (1.0 + float(np.median(np.abs(y))))

    def exact_result(beta, s, trace):
        return FitResult(
            beta=beta, scale=s, objective=s, iterations=len(trace) - 1, converged=True,
            trace=trace, exact_fit=True, kernel=spec.rho0, method="s",
        )

    wfun = _fast_weight(spec.rho0.family, spec.rho0.c)
    root = np.random.SeedSequence(config.seed)
    candidates = []
    for child in root.spawn(config.n_subsamples):
        beta = _subsample_candidate(x, y, n, p, child)
        if beta is not None:
            candidates.append(beta)
    ls = fit_least_squares(problem)
    if ls.converged and np.all(np.isfinite(ls.beta)):
        candidates.append(ls.beta)
    if not candidates:
        raise DegenerateDesignError("all subsamples were singular; the design is degenerate")

    # cheap refinement pass
    scored = []
    for beta in candidates:
        r = y - x @ beta
        s = m_scale(spec, r)
        if s < exact_tol:
            return exact_result(beta, s, [(0, s)])
        for _ in range(_CHEAP_STEPS):
            beta, r, s, accepted = _cstep(x, y, spec, wfun, beta, r, s)
            if not accepted:
                break
        if s < exact_tol:
            return exact_result(beta, s, [(0, s)])
        scored.append((s, beta, r))
    scored.sort(key=lambda item: item[0])

    best = None
    for s, beta, r in scored[: config.n_keep]:
        trace = [(0, s)]
        converged = False
        for it in range(1, config.n_concentration + 1):
            beta_new, r_new, s_new, accepted = _cstep(x, y, spec, wfun, beta, r, s)
            if not accepted:
                converged = True  # no descent available: at a fixed point
                break
            trace.append((it, s_new))
            if s_new < exact_tol:
                return exact_result(beta_new, s_new, trace)
            done = (s - s_new) <= config.i_step_tol * s
            beta, r, s = beta_new, r_new, s_new
            if done:
                converged = True
                break
        if best is None or s < best[0]:
            best = (s, beta, r, converged, trace)

    s, beta, r, converged, trace = best
    # polish the winner to the step tolerance; linear-rate descent may need
    # more than the per-candidate selection budget
    if not converged:
        for it in range(len(trace), len(trace) + _POLISH_STEPS):
            beta_new, r_new, s_new, accepted = _cstep(x, y, spec, wfun, beta, r, s)
            if not accepted:
                converged = True
                break
            trace.append((it, s_new))
            if s_new < exact_tol:
                return exact_result(beta_new, s_new, trace)
            done = (s - s_new) <= config.i_step_tol * s
            beta, r, s = beta_new, r_new, s_new
            if done:
                converged = True
                break
    return FitResult(
        beta=beta, scale=s, objective=s, iterations=len(trace) - 1, converged=converged,
        trace=trace, kernel=spec.rho0, method="s",
    )
