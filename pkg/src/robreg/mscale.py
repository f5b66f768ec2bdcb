"""M-estimation of scale.

The M-scale of a sample ``u`` is the value ``s`` solving

    (1/n) sum_i rho0(u_i / s) = b,        0 < b < 1,

with ``rho0`` a bounded loss normalized to sup 1.  The left-hand side is
nonincreasing in ``s`` and strictly decreasing at the crossing, so the
positive root is unique whenever it exists; it exists if and only if fewer
than ``(1 - b) n`` of the ``u_i`` are zero, otherwise the scale is exactly 0.

The solver normalizes by the median absolute nonzero entry (making the
result scale-equivariant to solver tolerance), brackets the root by
geometric expansion, and refines with an Illinois-style secant/bisection
hybrid on the equation residual.  The equation is evaluated through a
family-specialized kernel on pre-squared data: this routine sits in the
innermost loop of the S-fit concentration search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ScaleConvergenceError
from .kernels import RhoKernel


@dataclass(frozen=True)
class MScaleSpec:
    """Defines an M-estimate of scale.

    ``b`` is the breakdown target in (0, 1); ``rel_tol`` bounds the
    absolute residual of the scale equation at the returned root (the
    1e-12 default is artifact policy, chosen well inside float64 head
    room for the n used here); ``max_iter`` caps solver iterations.
    """

    rho0: RhoKernel
    b: float = 0.5
    rel_tol: float = 1e-12
    max_iter: int = 200

    def __post_init__(self):
        if not isinstance(self.rho0, RhoKernel):
            raise TypeError("rho0 must be a RhoKernel")
        if not (0.0 < self.b < 1.0):
            raise ValueError("b must lie strictly between 0 and 1")
        if not (self.rel_tol > 0.0):
            raise ValueError("rel_tol must be positive")
        if not (self.max_iter >= 1):
            raise ValueError("max_iter must be a positive integer")


def scale_equation(spec: MScaleSpec, u, s: float) -> float:
    """Residual ``(1/n) sum rho0(u_i/s) - b``; nonincreasing in ``s``."""
    if not (s > 0.0):
        raise ValueError("scale_equation requires s > 0")
    u = np.asarray(u, dtype=float).ravel()
    if u.size == 0:
        raise ValueError("scale_equation requires a nonempty vector")
    if not np.all(np.isfinite(u)):
        raise ValueError("scale_equation requires finite values")
    return float(np.mean(spec.rho0.rho(u / s)) - spec.b)


def _complement_sum(family: str, q: np.ndarray):
    """sum_i (1 - rho(x_i/s)) as a function of s, with q = (x_i / c)^2 fixed.

    Computing the complement keeps the hot loop to a handful of vector ops;
    rho sums follow as ``count - complement``.
    """
    if family == "bisquare":
        def comp(s: float) -> float:
            w = 1.0 - np.minimum(q / (s * s), 1.0)
            return float(np.sum(w * w * w))
    elif family == "quartic":
        def comp(s: float) -> float:
            w = 1.0 - np.minimum(q / (s * s), 1.0)
            w2 = w * w
            return float(np.sum(w2 * w2))
    else:  # expsquared
        def comp(s: float) -> float:
            return float(np.sum(np.exp(-q / (s * s))))
    return comp


def m_scale(spec: MScaleSpec, u, s_hint: float | None = None) -> float:
    """M-estimate of scale of ``u``.

    Returns exactly 0 when at least ``(1 - b) n`` entries are zero;
    otherwise returns the positive root of the scale equation with
    ``|residual| <= rel_tol``.  ``s_hint`` (a previous nearby scale) only
    affects where bracketing starts, never the result.
    """
    u = np.asarray(u, dtype=float).ravel()
    n = u.size
    if n == 0:
        raise ValueError("m_scale requires a nonempty vector")
    if not np.all(np.isfinite(u)):
        raise ValueError("m_scale requires finite values")

    a = np.abs(u[u != 0.0])
    n_zero = n - a.size
    # zero scale iff #zeros >= (1-b) n; the epsilon guards float representation
    # of (1-b)*n at exact-tie counts
    if n_zero >= (1.0 - spec.b) * n - 1e-9:
        return 0.0

    hinted = s_hint is not None and np.isfinite(s_hint) and s_hint > 0.0
    unit = float(s_hint) if hinted else float(np.median(a))
    q = a / (unit * spec.rho0.c)
    q *= q
    comp = _complement_sum(spec.rho0.family, q)
    m = a.size
    inv_n = 1.0 / n
    b = spec.b

    def g(s: float) -> float:
        # (1/n) sum rho(u_i / (unit s)) - b, zeros contributing rho(0) = 0
        return (m - comp(s)) * inv_n - b

    s = 1.0
    gs = g(s)
    if abs(gs) <= spec.rel_tol:
        return s * unit

    evals = 0
    if gs > 0.0:  # s too small
        lo, g_lo = s, gs
        hi = 2.0 * s
        g_hi = g(hi)
        while g_hi > 0.0:
            lo, g_lo = hi, g_hi
            hi *= 2.0
            g_hi = g(hi)
            evals += 1
            if evals > spec.max_iter:
                raise ScaleConvergenceError("bracketing the scale equation failed", (lo * unit, hi * unit))
    else:  # s too large
        hi, g_hi = s, gs
        lo = 0.5 * s
        g_lo = g(lo)
        while g_lo < 0.0:
            hi, g_hi = lo, g_lo
            lo *= 0.5
            g_lo = g(lo)
            evals += 1
            if evals > spec.max_iter:
                raise ScaleConvergenceError("bracketing the scale equation failed", (lo * unit, hi * unit))
    if abs(g_lo) <= spec.rel_tol:
        return lo * unit
    if abs(g_hi) <= spec.rel_tol:
        return hi * unit

    # Illinois secant: g_lo > 0 > g_hi throughout; halving the stale endpoint
    # value prevents one-sided stagnation.
    side = 0
    for _ in range(spec.max_iter):
        s_new = (lo * g_hi - hi * g_lo) / (g_hi - g_lo)
        if not (lo < s_new < hi):
            s_new = 0.5 * (lo + hi)
        g_new = g(s_new)
        if abs(g_new) <= spec.rel_tol:
            return s_new * unit
        if g_new > 0.0:
            lo, g_lo = s_new, g_new
            if side == +1:
                g_hi *= 0.5
            side = +1
        else:
            hi, g_hi = s_new, g_new
            if side == -1:
                g_lo *= 0.5
            side = -1
        if hi - lo <= 8.0 * np.finfo(float).eps * hi:
            # bracket collapsed to adjacent floats; the equation is continuous,
            # so the midpoint residual is as small as float64 permits
            return 0.5 * (lo + hi) * unit
    raise ScaleConvergenceError(
        "scale equation did not converge within max_iter", (lo * unit, hi * unit)
    )
