"""Design-matrix regularity diagnostics.

Quantifies the conditioning ingredients that the increasing-dimension
asymptotics of the estimators lean on: extreme eigenvalues of the Gram
matrix, row-norm growth measures, the worst-subset conditioning functional

    eta_n(alpha) = min_{|A| = [n alpha]} min_{||theta|| = 1} max_{i in A} |x_i' theta|,

a truncated-Gram positive-definiteness criterion, and a sampled probe of the
local quadratic-mass condition used by the rate analysis.  Everything here
is advisory; only dimension feasibility and Gram singularity abort fits.

For a fixed direction the best subset keeps the [n alpha] smallest
|x_i' theta|, so eta_n(alpha) is the minimum over directions of the
[n alpha]-th order statistic of |X theta|.  Sampled directions therefore
give certified upper bounds.  Certified lower bounds come from
min_A lambda_min(Sigma(A)) <= eta_n(alpha)^2 when ALL subsets are
enumerated; with sampled subsets the value is a heuristic, reported as such.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .problem import RegressionProblem

_ENUM_CAP = 20_000  # full subset enumeration budget inside eta_n_bounds
_EXACT_CAP = 100_000  # subset budget for the exact functional


@dataclass
class DesignReport:
    """Summary of the design regularity measures for one dataset."""

    rho1n: float
    rho2n: float
    tau_value: float
    tau_ok: bool
    gram_singular: bool
    x1a_value: float
    x1b_value: float
    x6_ratio: float
    eta_lower: float
    eta_upper: float
    alpha: float
    x0_ok: bool
    truncated_gram_mineig: float
    x4_probe_min: float

    def to_dict(self) -> dict:
        out = asdict(self)
        return {k: (bool(v) if isinstance(v, (bool, np.bool_)) else float(v)) for k, v in out.items()}


def _subset_size(n: int, alpha: float) -> int:
    # [n alpha] with a guard against 2/3-style float representation
    m = int(np.floor(n * alpha + 1e-9))
    if not (1 <= m <= n):
        raise ValueError(f"[n alpha] = {m} falls outside [1, n]")
    return m


def spectrum_bounds(problem: RegressionProblem) -> tuple[float, float]:
    """Smallest and largest eigenvalues of the Gram matrix (1/n) X'X."""
    vals = np.linalg.eigvalsh(problem.gram)
    return float(vals[0]), float(vals[-1])


def _order_stat_upper(x, theta, m):
    proj = np.abs(x @ theta)
    return float(np.partition(proj, m - 1)[m - 1])


def eta_n_bounds(
    problem: RegressionProblem,
    alpha: float,
    n_directions: int = 256,
    seed: int = 0,
    n_subsets: int = 256,
) -> tuple[float, float]:
    """(lower, upper) bounds for the worst-subset conditioning functional.

    Upper: minimum over sampled unit directions (random, Gram eigenvectors
    and coordinate axes) of the [n alpha]-th smallest |x_i' theta|; always a
    certified upper bound.  Lower: sqrt of the smallest subset Gram
    eigenvalue over all subsets when their count fits the enumeration
    budget (certified), over sampled subsets otherwise (heuristic).
    """
    x = problem.x
    n, p = problem.n, problem.p
    m = _subset_size(n, alpha)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))

    dirs = rng.standard_normal((n_directions, p))
    norms = np.linalg.norm(dirs, axis=1)
    dirs = dirs[norms > 0] / norms[norms > 0, None]
    _, vecs = np.linalg.eigh(problem.gram)
    cand = np.vstack([dirs, vecs.T, np.eye(p)])
    upper = min(_order_stat_upper(x, theta, m) for theta in cand)

    def subset_min_eig(idx):
        sub = x[np.asarray(idx)]
        return float(np.linalg.eigvalsh(sub.T @ sub / m)[0])

    total = math.comb(n, m)
    if total <= max(_ENUM_CAP, n_subsets):
        low2 = min(subset_min_eig(idx) for idx in itertools.combinations(range(n), m))
    else:
        row_norms = np.linalg.norm(x, axis=1)
        smallest_rows = np.argsort(row_norms)[:m]
        low2 = subset_min_eig(smallest_rows)
        for _ in range(n_subsets):
            idx = rng.choice(n, size=m, replace=False)
            low2 = min(low2, subset_min_eig(idx))
    lower = float(np.sqrt(max(low2, 0.0)))
    return min(lower, upper), upper


def _exact_min_over_directions(rows: np.ndarray) -> float:
    """min over unit theta of max_i |rows_i' theta| for p = 2 point sets."""
    cands = []
    for v in rows:
        nv = np.hypot(v[0], v[1])
        if nv > 0:
            cands.append(np.array([-v[1], v[0]]) / nv)
    k = rows.shape[0]
    for i in range(k):
        for j in range(i + 1, k):
            for v in (rows[i] - rows[j], rows[i] + rows[j]):
                nv = np.hypot(v[0], v[1])
                if nv > 0:
                    cands.append(np.array([-v[1], v[0]]) / nv)
    if not cands:
        return 0.0  # every row is the zero vector
    best = np.inf
    for theta in cands:
        best = min(best, float(np.max(np.abs(rows @ theta))))
    return best


def eta_n_exact(problem: RegressionProblem, alpha: float) -> float:
    """Exact worst-subset conditioning by full enumeration (p <= 2 only).

    The minimum over directions of the max over a fixed p = 2 subset is
    attained where two rectified projections cross or one of them vanishes,
    a finite candidate set that is scanned per subset.
    """
    x = problem.x
    n, p = problem.n, problem.p
    m = _subset_size(n, alpha)
    if p > 2:
        raise ValueError("exact enumeration is limited to p <= 2")
    if math.comb(n, m) > _EXACT_CAP:
        raise ValueError("too many subsets for exact enumeration")
    if p == 1:
        return float(np.sort(np.abs(x[:, 0]))[m - 1])
    best = np.inf
    for idx in itertools.combinations(range(n), m):
        best = min(best, _exact_min_over_directions(x[np.asarray(idx)]))
    return best


def truncated_gram_check(problem: RegressionProblem, eta1: float, eta2: float) -> float:
    """Smallest eigenvalue of (1/n) sum x_i x_i' 1{||x_i|| < eta1 sqrt(p)} - eta2 I."""
    if not (eta1 > 0 and eta2 >= 0):
        raise ValueError("eta1 must be positive and eta2 nonnegative")
    x = problem.x
    keep = np.linalg.norm(x, axis=1) < eta1 * np.sqrt(problem.p)
    xk = x[keep]
    mat = (xk.T @ xk / problem.n) if xk.size else np.zeros((problem.p, problem.p))
    mat = mat - eta2 * np.eye(problem.p)
    return float(np.linalg.eigvalsh(mat)[0])


def _local_mass_probe(x, rng, n_pairs=1000, c_small=1.0, c_big=5.0, delta=0.1):
    """min over sampled (beta, z) of (1/n) sum_{i in J} (x_i'z)^2.

    J keeps rows with |x_i'beta| <= c_small and |x_i'z| <= c_big; beta runs
    over a delta-ball, z over the unit sphere.
    """
    n, p = x.shape
    z = rng.standard_normal((n_pairs, p))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    b_dir = rng.standard_normal((n_pairs, p))
    b_dir /= np.linalg.norm(b_dir, axis=1, keepdims=True)
    radius = delta * rng.random(n_pairs) ** (1.0 / p)
    betas = b_dir * radius[:, None]
    xz = x @ z.T  # (n, n_pairs)
    xb = x @ betas.T
    mask = (np.abs(xb) <= c_small) & (np.abs(xz) <= c_big)
    vals = np.sum(xz * xz * mask, axis=0) / n
    return float(vals.min())


def check_conditions(
    problem: RegressionProblem,
    b: float = 0.5,
    alpha: float = 0.75,
    seed: int = 0,
) -> DesignReport:
    """Fill a DesignReport for the given dataset.

    The truncated-Gram entry uses the row-truncation radius
    ``eta1 = sqrt(2 M / (1 - alpha))`` with M the measured mean squared row
    norm per coordinate, and reports the matrix's smallest eigenvalue, which
    is precisely the largest shift eta2 that keeps it positive semidefinite.
    """
    x = problem.x
    n, p = problem.n, problem.p
    rho1n, rho2n = spectrum_bounds(problem)
    norms2 = np.sum(x * x, axis=1)
    x1a = float(norms2.mean() / p)
    x1b = float(np.sqrt(norms2.max()) / n)
    x6 = float(norms2.max() * p * p / n)
    x0_ok = p < int(np.floor(n * (1.0 - b) + 1e-9))
    eta_lower, eta_upper = eta_n_bounds(problem, alpha, seed=seed)
    eta1 = float(np.sqrt(2.0 * x1a / (1.0 - alpha)))
    trunc = truncated_gram_check(problem, eta1, 0.0)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed + 1)))
    probe = _local_mass_probe(x, rng)
    return DesignReport(
        rho1n=rho1n,
        rho2n=rho2n,
        tau_value=rho2n,
        tau_ok=bool(np.isfinite(rho2n)),
        gram_singular=bool(rho1n <= 1e-12),
        x1a_value=x1a,
        x1b_value=x1b,
        x6_ratio=x6,
        eta_lower=eta_lower,
        eta_upper=eta_upper,
        alpha=float(alpha),
        x0_ok=bool(x0_ok),
        truncated_gram_mineig=trunc,
        x4_probe_min=probe,
    )
