"""Error laws, population-level expectations, and contrast inference.

For a linear contrast ``a'beta`` with ``||a|| = 1`` the estimator is
asymptotically normal with standard error

    se = (s0 / b) * sqrt(a_m) * r_n / sqrt(n),

where ``r_n^2 = a' Sigma_n^{-1} a``, ``s0`` is the limiting residual scale,
``a_m = E psi1(u/s0)^2`` and ``b = E psi1'(u/s0)``.  The expectations are
computed either by plugging standardized residuals into the sample averages
or by quadrature against a known error density.

Expectations use adaptive Gauss-Kronrod quadrature (QUADPACK via
scipy.integrate.quad) on the complement form ``E rho = 1 - E[1 - rho]``:
``1 - rho`` vanishes (numerically) outside the loss's effective support, so
the integrals are proper even for error laws without moments, Cauchy
included.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.stats import norm as _normal

from .exceptions import AssumptionError, DegenerateDesignError
from .kernels import RhoKernel
from .mscale import MScaleSpec
from .problem import FitResult, RegressionProblem

_QUAD_KW = dict(epsabs=1e-13, epsrel=1e-11, limit=200)
_MIN_INFORMATION = 1e-6  # floor for E psi' before inference is refused


# ---------------------------------------------------------------------------
# error laws: even, unimodal densities (no moment requirements)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Gaussian:
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ValueError("sigma must be positive")

    def density(self, u):
        u = np.asarray(u, dtype=float)
        z = u / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * np.sqrt(2.0 * np.pi))

    def sample(self, rng, size):
        return self.sigma * rng.standard_normal(size)

    @property
    def scale_hint(self):
        return self.sigma


@dataclass(frozen=True)
class Cauchy:
    gamma: float = 1.0

    def __post_init__(self):
        if not (self.gamma > 0):
            raise ValueError("gamma must be positive")

    def density(self, u):
        u = np.asarray(u, dtype=float)
        return self.gamma / (np.pi * (self.gamma * self.gamma + u * u))

    def sample(self, rng, size):
        return self.gamma * rng.standard_cauchy(size)

    @property
    def scale_hint(self):
        return self.gamma


@dataclass(frozen=True)
class ContaminatedGaussian:
    """(1 - eps) N(0, sigma^2) + eps N(0, (k sigma)^2), with k > 0, 0 <= eps < 0.5."""

    sigma: float = 1.0
    eps: float = 0.1
    k: float = 3.0

    def __post_init__(self):
        if not (self.sigma > 0 and self.k > 0):
            raise ValueError("sigma and k must be positive")
        if not (0.0 <= self.eps < 0.5):
            raise ValueError("eps must lie in [0, 0.5)")

    def density(self, u):
        u = np.asarray(u, dtype=float)
        core = Gaussian(self.sigma).density(u)
        wide = Gaussian(self.k * self.sigma).density(u)
        return (1.0 - self.eps) * core + self.eps * wide

    def sample(self, rng, size):
        wide = rng.random(size) < self.eps
        scale = np.where(wide, self.k * self.sigma, self.sigma)
        return scale * rng.standard_normal(size)

    @property
    def scale_hint(self):
        return self.sigma


ErrorLaw = Union[Gaussian, Cauchy, ContaminatedGaussian]


# ---------------------------------------------------------------------------
# population expectations
# ---------------------------------------------------------------------------


def expected_rho(kernel: RhoKernel, law: ErrorLaw, s: float) -> float:
    """E rho(u/s) under the law, via the complement integral."""
    if not (s > 0.0):
        raise ValueError("expected_rho requires s > 0")
    lim = s * kernel.effective_support

    def integrand(u):
        return (1.0 - kernel.rho(u / s)) * float(law.density(u))

    val, err = quad(integrand, -lim, lim, **_QUAD_KW)
    if not np.isfinite(val) or err > 1e-8:
        raise RuntimeError(f"quadrature for E rho did not converge (err={err:.2e})")
    return 1.0 - val


def population_scale(spec: MScaleSpec, law: ErrorLaw) -> float:
    """Positive solution of ``E rho0(u/s) = b``; residual <= 1e-10."""
    kernel, b = spec.rho0, spec.b

    def g(s):
        return expected_rho(kernel, law, s) - b

    lo = hi = float(law.scale_hint)
    g_hi = g(hi)
    for _ in range(200):
        if g_hi < 0.0:
            break
        lo, hi = hi, hi * 4.0
        g_hi = g(hi)
    else:
        raise RuntimeError("could not bracket the population scale from above")
    g_lo = g(lo)
    for _ in range(200):
        if g_lo > 0.0:
            break
        hi, lo = lo, lo / 4.0
        g_lo = g(lo)
    else:
        raise RuntimeError("could not bracket the population scale from below")
    root = brentq(g, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    if abs(g(root)) > 1e-10:
        raise RuntimeError("population scale root residual exceeds 1e-10")
    return float(root)


def asymptotic_moments(kernel: RhoKernel, s0: float, law: ErrorLaw) -> tuple[float, float]:
    """(E psi^2(u/s0), E psi'(u/s0)) by quadrature; the second must be positive."""
    if not (s0 > 0.0):
        raise ValueError("asymptotic_moments requires s0 > 0")
    lim = s0 * kernel.effective_support

    def sq(u):
        return float(kernel.psi(u / s0)) ** 2 * float(law.density(u))

    def dpsi(u):
        return float(kernel.psi_prime(u / s0)) * float(law.density(u))

    a_val, a_err = quad(sq, -lim, lim, **_QUAD_KW)
    b_val, b_err = quad(dpsi, -lim, lim, **_QUAD_KW)
    if not (np.isfinite(a_val) and np.isfinite(b_val)) or max(a_err, b_err) > 1e-8:
        raise RuntimeError("quadrature for the asymptotic moments did not converge")
    if b_val <= _MIN_INFORMATION:
        raise AssumptionError(
            f"E psi'(u/s0) = {b_val:.3e} is not positive; the normal limit does not apply"
        )
    return float(a_val), float(b_val)


@lru_cache(maxsize=8)
def _leggauss(n_nodes: int):
    return np.polynomial.legendre.leggauss(n_nodes)


def expected_loss_profile(kernel: RhoKernel, law: ErrorLaw, v, s: float) -> np.ndarray:
    """R(v, s) = E rho((u - v)/s) evaluated at many shifts ``v`` at once.

    Substituting u = v + s t reduces the complement integral to the loss's
    effective support [-T, T], where the integrand is analytic; a fixed-order
    Gauss-Legendre rule is then accurate to near machine precision and
    vectorizes over ``v``.
    """
    if not (s > 0.0):
        raise ValueError("expected_loss_profile requires s > 0")
    v = np.atleast_1d(np.asarray(v, dtype=float))
    t_half = kernel.effective_support
    nodes, weights = _leggauss(64 if kernel.compact else 160)
    t = nodes * t_half
    # (1 - rho(t)) * GL weight, shared across all shifts
    g = (1.0 - kernel.rho(t)) * (weights * t_half)
    dens = law.density(v[:, None] + s * t[None, :])
    return 1.0 - s * (dens @ g)


def plug_in_moments(kernel: RhoKernel, residuals, s: float) -> tuple[float, float]:
    """Sample analogues of the asymptotic moments from standardized residuals."""
    if not (s > 0.0):
        raise ValueError("plug_in_moments requires s > 0")
    t = np.asarray(residuals, dtype=float) / s
    a_hat = float(np.mean(kernel.psi(t) ** 2))
    b_hat = float(np.mean(kernel.psi_prime(t)))
    return a_hat, b_hat


# ---------------------------------------------------------------------------
# contrast inference
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlugInEmpirical:
    """Moments from the fit's own residuals, scale taken from the fit."""


@dataclass(frozen=True)
class QuadratureMoments:
    """Moments by quadrature against a known error law.

    ``mscale`` (when given) determines the limiting scale via
    ``population_scale``; otherwise the fitted scale stands in for it, with
    no consistency guarantee for scales not produced by an S fit.  ``kernel``
    defaults to the loss the fit minimized.
    """

    law: ErrorLaw
    mscale: MScaleSpec | None = None
    kernel: RhoKernel | None = None


MomentsSource = Union[PlugInEmpirical, QuadratureMoments]


@dataclass(frozen=True)
class ContrastInference:
    """Normal-theory interval for a unit-norm linear contrast."""

    a_n: np.ndarray
    r_n: float
    estimate: float
    std_error: float
    ci_low: float
    ci_high: float
    level: float


def contrast_se_pieces(problem: RegressionProblem, a) -> tuple[np.ndarray, float]:
    """Normalized contrast vector and r_n = sqrt(a' Sigma_n^{-1} a)."""
    a = np.asarray(a, dtype=float).ravel()
    if a.shape[0] != problem.p:
        raise ValueError(f"contrast has length {a.shape[0]}, expected {problem.p}")
    nrm = float(np.linalg.norm(a))
    if not (nrm > 0):
        raise ValueError("contrast vector must be nonzero")
    a = a / nrm
    try:
        w = np.linalg.solve(problem.gram, a)
    except np.linalg.LinAlgError as exc:
        raise DegenerateDesignError("Gram matrix is singular") from exc
    rn2 = float(a @ w)
    if not (rn2 > 0) or not np.isfinite(rn2):
        raise DegenerateDesignError("Gram matrix is numerically singular")
    return a, float(np.sqrt(rn2))


def contrast_inference(
    problem: RegressionProblem,
    fit: FitResult,
    a_n,
    level: float = 0.95,
    moments_source: MomentsSource = PlugInEmpirical(),
) -> ContrastInference:
    """Estimate, standard error and CI for the contrast ``a_n' beta``."""
    if not (0.0 < level < 1.0):
        raise ValueError("level must lie in (0, 1)")
    a, r_n = contrast_se_pieces(problem, a_n)

    if isinstance(moments_source, QuadratureMoments):
        kernel = moments_source.kernel or fit.kernel
        if kernel is None:
            raise ValueError("no loss kernel available for quadrature moments")
        if moments_source.mscale is not None:
            s0 = population_scale(moments_source.mscale, moments_source.law)
        else:
            s0 = fit.scale
        if not (s0 > 0):
            raise ValueError("a positive scale is required for inference")
        a_m, b_m = asymptotic_moments(kernel, s0, moments_source.law)
    else:
        kernel = fit.kernel
        if kernel is None:
            raise ValueError("fit carries no loss kernel; plug-in moments unavailable")
        s0 = fit.scale
        if not (s0 > 0):
            raise ValueError("a positive scale is required for inference")
        a_m, b_m = plug_in_moments(kernel, problem.residuals(fit.beta), s0)
        if b_m <= _MIN_INFORMATION:
            raise AssumptionError(
                f"plug-in E psi' = {b_m:.3e} is numerically non-positive; "
                "information is near-singular"
            )

    se = float((s0 / b_m) * np.sqrt(a_m) * r_n / np.sqrt(problem.n))
    est = float(a @ fit.beta)
    z = float(_normal.ppf(0.5 * (1.0 + level)))
    return ContrastInference(
        a_n=a, r_n=r_n, estimate=est, std_error=se,
        ci_low=est - z * se, ci_high=est + z * se, level=level,
    )
