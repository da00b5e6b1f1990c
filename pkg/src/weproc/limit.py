"""The limiting Gaussian process: variance/covariance, grid matrices, sampling.

Two independent constructions of the grid covariance are kept deliberately
separate so they can serve as mutual oracles: the direct variance/covariance
formulas conditioned on {X <= s}, and the increment form built from
per-cell conditional moments plus the multinomial counting covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import Distribution, Interval, conditional_moments, moments_leq
from .errors import DomainError, FactorizationError
from .seeding import as_generator
from .weights import WeightFunction

_JITTER_LADDER = (0.0, 1e-14, 1e-12, 1e-10)
_PSD_SLACK = 1e-12


def var_at(d: Distribution, f: WeightFunction, s: float) -> float:
    """Var(Y_s) = F(s) Var(f|X<=s) + F(s)(1-F(s)) E(f|X<=s)^2; 0 where F(s) = 0."""
    if not (0.0 <= s <= 1.0):
        raise DomainError(f"time {s} outside [0, 1]")
    fs = d.cdf(s)
    if fs == 0.0:
        return 0.0
    mean, var = moments_leq(d, f, s)
    return fs * var + fs * (1.0 - fs) * mean * mean


def cov_pair(d: Distribution, f: WeightFunction, s: float, t: float) -> float:
    """Cov(Y_s, Y_t) for s <= t, via Var(Y_s) plus the increment cross-term."""
    if s > t:
        raise DomainError("cov_pair needs s <= t")
    base = var_at(d, f, s)
    if s == t:
        return base
    fs, ft = d.cdf(s), d.cdf(t)
    dmass = ft - fs
    if fs == 0.0 or dmass <= 0.0:
        return base
    mean_s, _ = moments_leq(d, f, s)
    mean_inc, _ = conditional_moments(d, f, Interval(s, t))
    return base - fs * dmass * mean_s * mean_inc


@dataclass(frozen=True)
class CovarianceModel:
    grid: np.ndarray
    matrix: np.ndarray
    factor: np.ndarray
    jitter: float


@dataclass(frozen=True)
class IncrementModel:
    """Per-cell data for the increment (FDD) form on cells (theta_{j-1}, theta_j].

    The 0th cell is the atom at 0 (mass F(0)).  ``grid_index`` maps the
    requested grid points into the internal partition points.
    """

    thetas: np.ndarray            # internal partition, thetas[0] == 0
    masses: np.ndarray            # cell masses, masses[0] = F(0)
    means: np.ndarray             # E(f | cell)
    variances: np.ndarray         # Var(f | cell)
    cov: np.ndarray               # covariance of the increments, (K+1) x (K+1)
    grid_index: np.ndarray

    def cumulative(self) -> np.ndarray:
        """Grid covariance implied by summing increments; comparable to build_matrix."""
        full = np.cumsum(np.cumsum(self.cov, axis=0), axis=1)
        return full[np.ix_(self.grid_index, self.grid_index)]


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or len(g) == 0:
        raise DomainError("grid must be a non-empty 1-d sequence")
    if np.any((g < 0.0) | (g > 1.0)):
        raise DomainError("grid points must lie in [0, 1]")
    if np.any(np.diff(g) <= 0.0):
        raise DomainError("grid points must be strictly increasing")
    return g


def build_matrix(d: Distribution, f: WeightFunction, grid) -> CovarianceModel:
    """Grid covariance from the direct formulas, symmetrized and factorized."""
    g = _check_grid(grid)
    k = len(g)
    sigma = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            sigma[i, j] = cov_pair(d, f, g[i], g[j])
            sigma[j, i] = sigma[i, j]
    factor, jitter = _factorize(sigma)
    return CovarianceModel(grid=g, matrix=sigma, factor=factor, jitter=jitter)


def _factorize(sigma: np.ndarray) -> tuple[np.ndarray, float]:
    try:
        return np.linalg.cholesky(sigma), 0.0
    except np.linalg.LinAlgError:
        pass
    scale = max(float(np.max(np.diag(sigma))), 1.0)
    eigvals, eigvecs = np.linalg.eigh(sigma)
    if eigvals[0] >= -_PSD_SLACK * scale:
        # semidefinite up to roundoff: clip and take the square-root factor
        factor = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
        return factor, 0.0
    for jitter in _JITTER_LADDER[1:]:
        try:
            return np.linalg.cholesky(sigma + jitter * np.eye(len(sigma))), jitter
        except np.linalg.LinAlgError:
            continue
    raise FactorizationError(
        f"matrix not positive semidefinite (min eigenvalue {eigvals[0]:.3e})",
        min_eigenvalue=float(eigvals[0]))


def multinomial_g_cov(grid, d: Distribution) -> np.ndarray:
    """Covariance of the limiting count fluctuations per cell.

    Entry (k, l) is -dF_k dF_l + 1_{k=l} dF_k over the partition cells,
    including the 0th cell carrying the atom at 0.
    """
    thetas, masses = _partition_masses(grid, d)
    return np.diag(masses) - np.outer(masses, masses)


def _partition_masses(grid, d: Distribution) -> tuple[np.ndarray, np.ndarray]:
    g = _check_grid(grid)
    thetas = g if g[0] == 0.0 else np.concatenate(([0.0], g))
    fvals = d.cdf_array(thetas)
    masses = np.empty(len(thetas))
    masses[0] = fvals[0]
    masses[1:] = np.diff(fvals)
    return thetas, masses


def build_increment_matrix(d: Distribution, f: WeightFunction, grid) -> IncrementModel:
    """Increment-form model; its cumulative() must agree with build_matrix."""
    g = _check_grid(grid)
    thetas, masses = _partition_masses(g, d)
    k1 = len(thetas)
    means = np.zeros(k1)
    variances = np.zeros(k1)
    if masses[0] > 0.0:
        means[0] = f.eval(0.0)     # the 0th cell is the single point {0}
    for j in range(1, k1):
        if masses[j] > 0.0:
            means[j], variances[j] = conditional_moments(
                d, f, Interval(thetas[j - 1], thetas[j]))
    count_cov = np.diag(masses) - np.outer(masses, masses)
    cov = count_cov * np.outer(means, means)
    cov[np.diag_indices(k1)] = masses * variances + masses * (1.0 - masses) * means ** 2
    grid_index = np.searchsorted(thetas, g)
    return IncrementModel(thetas=thetas, masses=masses, means=means,
                          variances=variances, cov=cov, grid_index=grid_index)


def sample_limit_paths(model: CovarianceModel, count: int, seed_or_rng) -> np.ndarray:
    """count i.i.d. centered Gaussian vectors with the model covariance (rows)."""
    rng = as_generator(seed_or_rng)
    z = rng.standard_normal((count, len(model.grid)))
    return z @ model.factor.T
