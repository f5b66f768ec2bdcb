"""Bounded redescending loss families.

Every family is normalized so that ``rho(0) = 0`` and ``sup rho = 1``; the
tuning constant ``c`` sets the rejection scale in residual units.  Losses are
even, nondecreasing in ``|x|``, and strictly increasing wherever they sit
below their supremum.  Three families are provided:

``bisquare``
    Tukey's bisquare, ``rho(x) = 1 - (1 - (x/c)^2)^3`` for ``|x| <= c`` and
    1 outside.  Twice continuously differentiable; the third derivative
    jumps at ``+-c``, so ``psi_double_prime`` is refused for it.

``quartic``
    ``rho(x) = 1 - (1 - (x/c)^2)^4`` for ``|x| <= c`` and 1 outside.  Three
    times continuously differentiable.

``expsquared``
    ``rho(x) = 1 - exp(-(x/c)^2)``.  Smooth everywhere; reaches 1 only in
    the limit ``|x| -> inf``.

Derivatives are hand-derived closed forms; the test-suite locks them against
central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import KernelCapabilityError

FAMILIES = ("bisquare", "expsquared", "quartic")

# Families whose loss equals 1 exactly outside [-c, c].
COMPACT_FAMILIES = ("bisquare", "quartic")

# Families whose loss is three times continuously differentiable everywhere.
SMOOTH_FAMILIES = ("expsquared", "quartic")

# exp(-t^2) at |t| = 8 is ~1.6e-28: past 8c the expsquared loss is 1 for all
# practical purposes, which bounds quadrature and grid ranges.
_EXPSQ_SUPPORT_FACTOR = 8.0


def _as_finite(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("loss functions require finite arguments")
    return arr


def _match(x, value):
    # scalar in, scalar out
    if np.ndim(x) == 0:
        return float(value)
    return value


@dataclass(frozen=True)
class RhoKernel:
    """A bounded loss family member with tuning constant ``c``.

    Parameters
    ----------
    family : str
        One of ``"bisquare"``, ``"expsquared"``, ``"quartic"``.
    c : float
        Positive tuning constant, in residual units.
    """

    family: str
    c: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown loss family {self.family!r}; choose from {FAMILIES}")
        c = float(self.c)
        if not (np.isfinite(c) and c > 0):
            raise ValueError("tuning constant c must be a positive finite number")
        object.__setattr__(self, "c", c)

    # -- structure ---------------------------------------------------------

    @property
    def compact(self) -> bool:
        """True when rho == 1 exactly outside [-c, c]."""
        return self.family in COMPACT_FAMILIES

    @property
    def smooth(self) -> bool:
        """True when rho is three times continuously differentiable."""
        return self.family in SMOOTH_FAMILIES

    @property
    def effective_support(self) -> float:
        """Radius beyond which 1 - rho is (numerically) zero."""
        if self.compact:
            return self.c
        return _EXPSQ_SUPPORT_FACTOR * self.c

    # -- evaluations -------------------------------------------------------

    def rho(self, x):
        """Loss value in [0, 1]."""
        x = _as_finite(x)
        t2 = (x / self.c) ** 2
        if self.family == "bisquare":
            w = 1.0 - np.minimum(t2, 1.0)
            out = 1.0 - w ** 3
        elif self.family == "quartic":
            w = 1.0 - np.minimum(t2, 1.0)
            out = 1.0 - w ** 4
        else:
            out = -np.expm1(-t2)
        return _match(x, out)

    def psi(self, x):
        """First derivative rho'; odd, zero outside the support for compact families."""
        x = _as_finite(x)
        t = x / self.c
        t2 = t * t
        if self.family == "bisquare":
            w = np.where(t2 <= 1.0, 1.0 - t2, 0.0)
            out = (6.0 / self.c) * t * w ** 2
        elif self.family == "quartic":
            w = np.where(t2 <= 1.0, 1.0 - t2, 0.0)
            out = (8.0 / self.c) * t * w ** 3
        else:
            out = (2.0 / self.c) * t * np.exp(-t2)
        return _match(x, out)

    def psi_prime(self, x):
        """Second derivative rho''."""
        x = _as_finite(x)
        t = x / self.c
        t2 = t * t
        inside = t2 <= 1.0
        if self.family == "bisquare":
            out = np.where(inside, (6.0 / self.c ** 2) * (1.0 - t2) * (1.0 - 5.0 * t2), 0.0)
        elif self.family == "quartic":
            out = np.where(
                inside, (8.0 / self.c ** 2) * (1.0 - t2) ** 2 * (1.0 - 7.0 * t2), 0.0
            )
        else:
            out = (2.0 / self.c ** 2) * np.exp(-t2) * (1.0 - 2.0 * t2)
        return _match(x, out)

    def psi_double_prime(self, x):
        """Third derivative rho'''.

        Only defined for families that are three times continuously
        differentiable; the bisquare third derivative jumps at ``+-c`` and is
        refused.
        """
        if not self.smooth:
            raise KernelCapabilityError(
                f"psi_double_prime is not available for the {self.family} family: "
                "its third derivative is discontinuous at +-c"
            )
        x = _as_finite(x)
        t = x / self.c
        t2 = t * t
        if self.family == "quartic":
            out = np.where(
                t2 <= 1.0,
                (8.0 / self.c ** 3) * t * (-18.0 + 60.0 * t2 - 42.0 * t2 * t2),
                0.0,
            )
        else:
            out = (4.0 / self.c ** 3) * t * np.exp(-t2) * (2.0 * t2 - 3.0)
        return _match(x, out)

    def weight(self, x):
        """IRLS weight psi(x)/x, continuously extended by psi'(0) at x = 0."""
        x = _as_finite(x)
        t2 = (x / self.c) ** 2
        if self.family == "bisquare":
            w = np.where(t2 <= 1.0, 1.0 - t2, 0.0)
            out = (6.0 / self.c ** 2) * w ** 2
        elif self.family == "quartic":
            w = np.where(t2 <= 1.0, 1.0 - t2, 0.0)
            out = (8.0 / self.c ** 2) * w ** 3
        else:
            out = (2.0 / self.c ** 2) * np.exp(-t2)
        return _match(x, out)

    # -- serialization -----------------------------------------------------

    def serialize(self) -> str:
        """Config string form, e.g. ``"bisquare:1.547"``."""
        return f"{self.family}:{self.c!r}"

    @classmethod
    def parse(cls, text: str) -> "RhoKernel":
        """Parse ``"family:c"`` back into a kernel."""
        parts = text.strip().split(":")
        if len(parts) != 2:
            raise ValueError(f"expected 'family:c', got {text!r}")
        family = parts[0].strip().lower()
        try:
            c = float(parts[1])
        except ValueError as exc:
            raise ValueError(f"bad tuning constant in {text!r}") from exc
        return cls(family, c)


# Functional aliases matching the operation names used elsewhere.


def rho(kernel: RhoKernel, x):
    return kernel.rho(x)


def psi(kernel: RhoKernel, x):
    return kernel.psi(x)


def psi_prime(kernel: RhoKernel, x):
    return kernel.psi_prime(x)


def psi_double_prime(kernel: RhoKernel, x):
    return kernel.psi_double_prime(x)


def irls_weight(kernel: RhoKernel, x):
    return kernel.weight(x)


def verify_rho_axioms(kernel, grid) -> list:
    """Check the loss axioms on a grid; an empty report means all pass.

    Checks evenness, rho(0) = 0, boundedness in [0, 1], monotonicity in
    ``|x|``, and strict increase wherever rho sits below its supremum.  The
    strictness check is grid-resolution limited: it only flags exact ties
    between distinct grid points.  Accepts any object with a ``rho`` method
    so deliberately broken kernels can be probed.
    """
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValueError("axiom verification needs a nonempty grid")
    if not np.all(np.isfinite(grid)):
        raise ValueError("axiom verification needs finite grid values")

    report = []
    tol = 1e-12

    r_plus = np.asarray(kernel.rho(np.abs(grid)), dtype=float)
    r_minus = np.asarray(kernel.rho(-np.abs(grid)), dtype=float)
    bad = np.abs(r_plus - r_minus) > tol
    if np.any(bad):
        x = grid[bad][0]
        report.append(f"evenness: rho({abs(x)!r}) != rho({-abs(x)!r})")

    r0 = float(kernel.rho(0.0))
    if abs(r0) > tol:
        report.append(f"zero-at-zero: rho(0) = {r0!r}")

    xs = np.unique(np.abs(grid))
    vals = np.asarray(kernel.rho(xs), dtype=float)
    if np.any(vals < -tol) or np.any(vals > 1.0 + tol):
        report.append(
            f"bounded-by-one: rho range [{vals.min()!r}, {vals.max()!r}] leaves [0, 1]"
        )
    if xs.size >= 2:
        diffs = np.diff(vals)
        if np.any(diffs < -tol):
            i = int(np.argmin(diffs))
            report.append(f"monotone: rho decreases between |x|={xs[i]!r} and |x|={xs[i + 1]!r}")
        below_sup = vals[:-1] < 1.0 - 1e-9
        flat = (diffs <= 0.0) & below_sup & (np.abs(diffs) <= tol)
        strict_bad = flat & (np.diff(xs) > 1e-9)
        if np.any(strict_bad):
            i = int(np.argmax(strict_bad))
            report.append(
                f"strict-increase: rho flat below sup between |x|={xs[i]!r} and |x|={xs[i + 1]!r}"
            )
    return report
