"""Regression problem container and fit-result record."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .kernels import RhoKernel


@dataclass(frozen=True)
class RegressionProblem:
    """A fixed-design regression dataset: rows ``x_i`` and responses ``y_i``.

    Requires ``n > p`` and finite entries.  The Gram matrix
    ``(1/n) X' X`` is computed lazily; consumers that need it nonsingular
    check that themselves.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float, order="C")
        y = np.array(self.y, dtype=float).ravel()
        if x.ndim != 2:
            raise ValueError("design must be a 2-d array")
        n, p = x.shape
        if p < 1:
            raise ValueError("design needs at least one column")
        if y.shape[0] != n:
            raise ValueError(f"design has {n} rows but response has {y.shape[0]}")
        if n <= p:
            raise ValueError(f"need more observations than parameters (n={n}, p={p})")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("design and response must be finite")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @cached_property
    def gram(self) -> np.ndarray:
        """(1/n) X' X, symmetrized against rounding."""
        g = self.x.T @ self.x / self.n
        return (g + g.T) * 0.5

    def residuals(self, beta) -> np.ndarray:
        beta = np.asarray(beta, dtype=float).ravel()
        if beta.shape[0] != self.p:
            raise ValueError(f"beta has length {beta.shape[0]}, expected {self.p}")
        return self.y - self.x @ beta


@dataclass
class FitResult:
    """Outcome of a regression fit.

    ``trace`` holds ``(iteration, objective)`` pairs and is nonincreasing in
    the objective.  For S fits the objective is the residual M-scale and
    equals ``scale``; for fixed-scale M fits it is the summed loss.
    ``kernel`` records the loss the fit minimized (None for least squares).
    """

    beta: np.ndarray
    scale: float
    objective: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    exact_fit: bool = False
    kernel: RhoKernel | None = None
    method: str = ""


def fit_least_squares(problem: RegressionProblem) -> FitResult:
    """Ordinary least squares, as a baseline and as an initial candidate."""
    beta, _, rank, _ = np.linalg.lstsq(problem.x, problem.y, rcond=None)
    r = problem.residuals(beta)
    ssr = float(r @ r)
    dof = max(problem.n - problem.p, 1)
    return FitResult(
        beta=beta,
        scale=float(np.sqrt(ssr / dof)),
        objective=ssr,
        iterations=1,
        converged=bool(rank == problem.p),
        trace=[(0, ssr)],
        method="ls",
    )
