"""Monte Carlo and analytic verification harness.

Replicates are organized into a fixed number of blocks with counter-derived
seeds, and all estimators reduce per-block partial sums in block order, so
results are bit-identical for any worker count.  Standard errors come from a
block jackknife rather than closed forms, which would be weight-dependent
and error-prone.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln
from scipy.stats import norm

from .dist import Atom, Distribution, Interval, PowerPart, UniformPart, conditional_moments
from .errors import DomainError, ZeroMassError
from .limit import CovarianceModel
from .process import simulate
from .seeding import stream
from .weights import (Compensator, ConstantWeight, PolynomialWeight, PowerWeight,
                      TableWeight, WeightFunction)

JACKKNIFE_BLOCKS = 100
Z_PASS_THRESHOLD = 4.0


# ----- Monte Carlo covariance ------------------------------------------------


@dataclass(frozen=True)
class McEstimate:
    grid: np.ndarray
    matrix: np.ndarray            # empirical covariance of the path at grid points
    se: np.ndarray                # block-jackknife standard errors
    replicates: int
    n: int
    mode: str


def _mc_block(args):
    d, f, n, reps, grid, zvec, mode, seed, block = args
    rng = stream(seed, block)
    root_n = math.sqrt(n)
    k = len(grid)
    if mode == "fixed":
        xs = d.draw_matrix(reps, n, rng)
        fv = f.eval_array(xs)
        y = np.empty((reps, k))
        for j, g in enumerate(grid):
            y[:, j] = (fv * (xs <= g)).sum(axis=1) / root_n - root_n * zvec[j]
    else:
        y = np.empty((reps, k))
        for r in range(reps):
            count = int(rng.poisson(n))
            xs = d.draw(count, rng)
            fv = f.eval_array(xs) if count else np.zeros(0)
            for j, g in enumerate(grid):
                y[r, j] = (fv * (xs <= g)).sum() / root_n - root_n * zvec[j]
    return y.sum(axis=0), y.T @ y, reps


def _block_sizes(total: int, blocks: int) -> list[int]:
    base, extra = divmod(total, blocks)
    return [base + (1 if i < extra else 0) for i in range(blocks)]


def mc_covariance(d: Distribution, f: WeightFunction, n: int, reps: int, grid,
                  mode: str = "fixed", seed: int = 0, workers: int = 1) -> McEstimate:
    """Empirical covariance of the fluctuation at the grid over independent replicates."""
    if reps < JACKKNIFE_BLOCKS:
        raise DomainError(f"need at least {JACKKNIFE_BLOCKS} replicates")
    if mode not in ("fixed", "poisson"):
        raise DomainError(f"unknown mode {mode!r}")
    g = np.asarray(grid, dtype=float)
    comp = Compensator(d, f)
    zvec = np.array([comp(float(t)) for t in g])
    sizes = _block_sizes(reps, JACKKNIFE_BLOCKS)
    jobs = [(d, f, n, sizes[b], g, zvec, mode, seed, b)
            for b in range(JACKKNIFE_BLOCKS) if sizes[b] > 0]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_mc_block, jobs))
    else:
        parts = [_mc_block(job) for job in jobs]
    k = len(g)
    s1 = np.zeros(k)
    s2 = np.zeros((k, k))
    for b1, b2, _ in parts:       # fixed block order keeps sums worker-independent
        s1 += b1
        s2 += b2
    matrix = _cov_from_sums(s1, s2, reps)
    leave_outs = []
    for b1, b2, r in parts:
        leave_outs.append(_cov_from_sums(s1 - b1, s2 - b2, reps - r))
    stack = np.stack(leave_outs)
    nblocks = len(parts)
    se = np.sqrt((nblocks - 1) / nblocks
                 * ((stack - stack.mean(axis=0)) ** 2).sum(axis=0))
    return McEstimate(grid=g, matrix=matrix, se=se, replicates=reps, n=n, mode=mode)


def _cov_from_sums(s1, s2, count):
    mean = s1 / count
    return (s2 - count * np.outer(mean, mean)) / (count - 1)


@dataclass(frozen=True)
class CovComparison:
    z: np.ndarray
    max_abs_z: float
    passed: bool
    threshold: float


def compare_cov(est: McEstimate, model: CovarianceModel,
                threshold: float = Z_PASS_THRESHOLD) -> CovComparison:
    """Entrywise (empirical - theoretical)/SE; pass when max |z| <= threshold."""
    if len(est.grid) != len(model.grid) or np.any(est.grid != model.grid):
        raise DomainError("estimate and model grids differ")
    diff = est.matrix - model.matrix
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(est.se > 0.0, diff / np.where(est.se > 0.0, est.se, 1.0),
                     np.where(diff == 0.0, 0.0, np.inf))
    m = float(np.max(np.abs(z)))
    return CovComparison(z=z, max_abs_z=m, passed=m <= threshold, threshold=threshold)


# ----- marginal normality ----------------------------------------------------


def kolmogorov_quantile(level: float) -> float:
    """Quantile of the asymptotic two-sided KS null via the alternating series."""

    def cdf(x):
        total = 0.0
        for k in range(1, 200):
            term = 2.0 * (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * x * x)
            total += term
            if abs(term) < 1e-16:
                break
        return 1.0 - total

    return brentq(lambda x: cdf(x) - level, 0.3, 4.0, xtol=1e-12)


@dataclass(frozen=True)
class NormalityReport:
    skew_z: float
    kurtosis_z: float
    ks_stat: float
    ks_threshold: float
    z_threshold: float
    passed: bool
    detail: str = ""


def marginal_normality(samples, sigma2: float, level: float = 0.999) -> NormalityReport:
    """Skewness/kurtosis z-statistics and a KS test against N(0, sigma2)."""
    x = np.asarray(samples, dtype=float)
    r = len(x)
    if r < 1000:
        raise DomainError("need at least 1000 samples")
    if sigma2 <= 0.0:
        if np.any(x != x[0]):
            return NormalityReport(math.inf, math.inf, math.inf, 0.0, 0.0, False,
                                   "nonconstant samples against zero variance")
        return NormalityReport(0.0, 0.0, 0.0, 0.0, 0.0, True, "degenerate")
    std = math.sqrt(sigma2)
    centered = x - x.mean()
    m2 = float((centered ** 2).mean())
    skew = float((centered ** 3).mean()) / m2 ** 1.5
    kurt = float((centered ** 4).mean()) / m2 ** 2 - 3.0
    skew_z = skew / math.sqrt(6.0 / r)
    kurt_z = kurt / math.sqrt(24.0 / r)
    xs = np.sort(x) / std
    cdf_vals = norm.cdf(xs)
    steps = np.arange(1, r + 1) / r
    ks = float(max(np.max(steps - cdf_vals), np.max(cdf_vals - (steps - 1.0 / r))))
    z_thr = float(norm.ppf(1.0 - (1.0 - level) / 2.0))
    ks_thr = kolmogorov_quantile(level) / math.sqrt(r)
    ok = abs(skew_z) <= z_thr and abs(kurt_z) <= z_thr and ks <= ks_thr
    return NormalityReport(skew_z, kurt_z, ks, ks_thr, z_thr, ok)


# ----- Poisson machinery -----------------------------------------------------


def chernoff_upper(b: float, x: float) -> float:
    """Optimized exponential bound on P(Poisson(b) >= x) for x >= b."""
    if b <= 0.0:
        raise DomainError("rate must be positive")
    if x < b:
        raise DomainError("upper bound needs x >= b; use chernoff_lower")
    if x == b:
        return 1.0
    return math.exp(x - b - x * math.log(x / b))


def chernoff_lower(b: float, x: float) -> float:
    """Optimized exponential bound on P(Poisson(b) <= x) for 0 <= x <= b."""
    if b <= 0.0:
        raise DomainError("rate must be positive")
    if x > b:
        raise DomainError("lower bound needs x <= b; use chernoff_upper")
    if x < 0.0:
        raise DomainError("count must be >= 0")
    if x == 0.0:
        return math.exp(-b)
    if x == b:
        return 1.0
    return math.exp(x - b - x * math.log(x / b))


def _log_poisson_pmf(lam: float, k: int) -> float:
    return k * math.log(lam) - lam - float(gammaln(k + 1))


def poisson_tail_upper(b: float, x: float) -> float:
    """Exact P(Poisson(b) >= x): log-space start, cumulative sum to relative 1e-15."""
    k = math.ceil(x)
    if k <= 0:
        return 1.0
    term = math.exp(_log_poisson_pmf(b, k))
    total = term
    while True:
        k += 1
        term *= b / k
        total += term
        if term <= total * 1e-15:
            return total


def poisson_tail_lower(b: float, x: float) -> float:
    """Exact P(Poisson(b) <= x)."""
    k = math.floor(x)
    if k < 0:
        return 0.0
    term = math.exp(_log_poisson_pmf(b, k)) if b > 0 else (1.0 if k >= 0 else 0.0)
    total = term
    while k > 0:
        term *= k / b
        k -= 1
        total += term
        if term <= total * 1e-15:
            break
    return total


def gamma_estimate(n: int, upper_mass: float = 0.5) -> float:
    """Peak ratio sup_k pmf_{Poisson(n*upper_mass)}(k) / pmf_{Poisson(n)}(n).

    ``upper_mass`` is mu([median, 1]); 1/2 when the CDF hits 1/2 exactly at
    the median, the mass of the upper half otherwise.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    lam = n * upper_mass
    mode = int(math.floor(lam))
    best = max(_log_poisson_pmf(lam, k)
               for k in range(max(0, mode - 3), mode + 4))
    return math.exp(best - _log_poisson_pmf(float(n), n))


def gamma_sweep(ns, upper_mass: float = 0.5) -> np.ndarray:
    """Vectorized gamma_estimate over many n."""
    ns = np.asarray(ns, dtype=np.int64)
    lam = ns * upper_mass
    modes = np.floor(lam).astype(np.int64)
    best = np.full(len(ns), -np.inf)
    for off in range(-3, 4):
        k = np.maximum(modes + off, 0)
        best = np.maximum(best, k * np.log(lam) - lam - gammaln(k + 1))
    denom = ns * np.log(ns) - ns - gammaln(ns + 1)
    return np.exp(best - denom)


def gamma_window(n: int, mass: float, alpha: float) -> tuple[float, float]:
    """Count window n*mass +/- n^(1/2+alpha) used to pick partial-sum lengths."""
    if not (0.0 < alpha < 0.5):
        raise DomainError("window exponent must lie in (0, 1/2)")
    half = n ** (0.5 + alpha)
    center = n * mass
    return max(0.0, center - half), center + half


# ----- mass partition --------------------------------------------------------


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool
    mass: float
    provenance: str               # "unsplit" | "split" | "remainder"


@dataclass(frozen=True)
class MassPartition:
    threshold: float
    median: float
    heavy_atoms: tuple[Atom, ...]
    pieces: tuple[Piece, ...]


def partition_by_mass(d: Distribution, a: float) -> MassPartition:
    """Cover [0, median] by heavy-atom singletons and intervals of mass <= 2a.

    Atoms of mass >= a are isolated; each remaining open stretch of mass > 2a
    is cut at quantile points into pieces of mass in [a, 2a] plus at most one
    lighter remainder.  Light atoms inside a stretch may shrink a cut from
    target 2a to target a, which keeps every piece at mass < 2a.
    """
    if not (0.0 < a < 1.0):
        raise DomainError("mass threshold must lie in (0, 1)")
    m = d.median()
    heavy = tuple(atom for atom in d.atoms if atom.mass >= a and atom.at <= m)
    bounds = [0.0] + [h.at for h in heavy] + [m]
    bounds = sorted(set(bounds))
    heavy_locs = {h.at for h in heavy}
    pieces: list[Piece] = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        lo_closed = lo == 0.0 and 0.0 not in heavy_locs
        hi_closed = hi not in heavy_locs
        f_lo = 0.0 if lo_closed else d.cdf(lo)
        f_hi = d.cdf(hi) if hi_closed else d.cdf_left(hi)
        pieces.extend(_split_stretch(d, a, lo, hi, lo_closed, hi_closed, f_lo, f_hi))
    return MassPartition(threshold=a, median=m, heavy_atoms=heavy,
                         pieces=tuple(pieces))


def _split_stretch(d, a, lo, hi, lo_closed, hi_closed, f_lo, f_hi):
    total = max(f_hi - f_lo, 0.0)
    if total <= 2.0 * a:
        return [Piece(lo, hi, lo_closed, hi_closed, total, "unsplit")]
    out = []
    cur, f_cur, first = lo, f_lo, True
    remaining = total
    while remaining > 2.0 * a:
        q = d.quantile(min(f_cur + 2.0 * a, 1.0))
        mass = d.cdf(q) - f_cur
        if mass > 2.0 * a or q >= hi:
            q = d.quantile(min(f_cur + a, 1.0))
            mass = d.cdf(q) - f_cur
        out.append(Piece(cur, q, lo_closed and first, True, mass, "split"))
        first = False
        cur, f_cur = q, f_cur + mass
        remaining = f_hi - f_cur
    out.append(Piece(cur, hi, lo_closed and first, hi_closed, remaining, "remainder"))
    return out


def check_partition(d: Distribution, part: MassPartition) -> list[str]:
    """Invariant violations (empty list when the partition is sound)."""
    a = part.threshold
    errors = []
    if len(part.heavy_atoms) > 1.0 / a + 1e-9:
        errors.append("too many heavy atoms")
    if len(part.pieces) > 3.0 / a + 1e-9:
        errors.append("too many pieces")
    for p in part.pieces:
        if p.mass > 2.0 * a + 1e-12:
            errors.append(f"piece ({p.lo}, {p.hi}) mass {p.mass} exceeds 2a")
    # geometric cover of [0, median]
    cursor = 0.0
    heavy_iter = {h.at for h in part.heavy_atoms}
    for i, p in enumerate(part.pieces):
        if abs(p.lo - cursor) > 1e-12:
            errors.append(f"gap before piece {i} at {p.lo} (cursor {cursor})")
        cursor = p.hi
    if abs(cursor - part.median) > 1e-12:
        errors.append("pieces do not reach the median")
    total = sum(p.mass for p in part.pieces) + sum(h.mass for h in part.heavy_atoms)
    if abs(total - d.cdf(part.median)) > 1e-9:
        errors.append(f"masses sum to {total}, expected F(median)")
    for h in part.heavy_atoms:
        if h.mass < a:
            errors.append("light atom flagged heavy")
    for p in part.pieces:
        if not p.hi_closed and p.hi not in heavy_iter and p.hi != part.median:
            errors.append("open right endpoint without a heavy atom")
    return errors


# ----- maximal inequality and tightness probes -------------------------------


@dataclass(frozen=True)
class MaximalInequalityReport:
    lhs: float
    rhs: float
    se_lhs: float
    se_rhs: float
    constant: float
    passed: bool
    degenerate: bool


def maximal_inequality_probe(d: Distribution, f: WeightFunction, interval: Interval,
                             n: int, length: int, x: float, reps: int,
                             seed: int = 0) -> MaximalInequalityReport:
    """Monte Carlo check of the reflection-style maximal bound on conditional sums.

    Compares P(max_i S_i >= x) against 2 P(S_L >= x - sqrt(2 L Var(f|I)/n))
    where S_i are centered conditional partial sums scaled by sqrt(n).
    """
    if length < 1:
        raise DomainError("partial-sum length must be >= 1")
    mass = d.interval_mass(interval)
    if mass <= 0.0:
        raise ZeroMassError("probe interval has zero mass")
    mean, var = conditional_moments(d, f, interval)
    const = math.sqrt(2.0 * length * var / n)
    rng = stream(seed, 0)
    base = d.cdf(interval.lower)
    u = base + (1.0 - rng.random((reps, length))) * mass
    draws = d.quantile_array(np.minimum(u.ravel(), 1.0)).reshape(reps, length)
    steps = (f.eval_array(draws) - mean) / math.sqrt(n)
    s = np.cumsum(steps, axis=1)
    lhs_hits = float(np.mean(s.max(axis=1) >= x))
    rhs_hits = float(np.mean(s[:, -1] >= x - const))
    se_lhs = math.sqrt(lhs_hits * (1.0 - lhs_hits) / reps)
    se_rhs = 2.0 * math.sqrt(rhs_hits * (1.0 - rhs_hits) / reps)
    rhs = 2.0 * rhs_hits
    combined = math.sqrt(se_lhs ** 2 + se_rhs ** 2)
    passed = lhs_hits <= rhs + 3.0 * combined
    degenerate = var == 0.0
    return MaximalInequalityReport(lhs=lhs_hits, rhs=rhs, se_lhs=se_lhs, se_rhs=se_rhs,
                                   constant=const, passed=passed, degenerate=degenerate)


@dataclass(frozen=True)
class TightnessCell:
    n: int
    delta: float
    exceed_prob: float
    se: float
    replicates: int


@dataclass(frozen=True)
class TightnessTable:
    epsilon: float
    cells: tuple[TightnessCell, ...]

    def monotone_in_delta(self, slack_se: float = 2.0) -> bool:
        """Exceedance probabilities should not increase as delta shrinks."""
        by_n: dict[int, list[TightnessCell]] = {}
        for c in self.cells:
            by_n.setdefault(c.n, []).append(c)
        for cells in by_n.values():
            ordered = sorted(cells, key=lambda c: -c.delta)
            for prev, nxt in zip(ordered[:-1], ordered[1:]):
                allowance = slack_se * math.hypot(prev.se, nxt.se)
                if nxt.exceed_prob > prev.exceed_prob + allowance:
                    return False
        return True


def _tightness_block(args):
    d, f, n, deltas, epsilon, seed, rep_lo, rep_hi = args
    counts = np.zeros(len(deltas), dtype=np.int64)
    for r in range(rep_lo, rep_hi):
        path = simulate(d, f, n, mode="fixed", seed_or_rng=stream(seed, n, r))
        for i, delta in enumerate(deltas):
            if path.modulus_exceeds(delta, epsilon):
                counts[i] += 1
    return counts


def tightness_probe(d: Distribution, f: WeightFunction, ns, deltas, epsilon: float,
                    reps: int, seed: int = 0, workers: int = 1) -> TightnessTable:
    """Estimated P(modulus >= epsilon) per (n, delta) with binomial SEs."""
    deltas = [float(x) for x in deltas]
    if any(not (0.0 < x < 1.0) for x in deltas):
        raise DomainError("spacings must lie in (0, 1)")
    if any(b >= a_ for a_, b in zip(deltas[:-1], deltas[1:])):
        raise DomainError("spacings must be strictly decreasing")
    if epsilon <= 0.0:
        raise DomainError("epsilon must be positive")
    cells = []
    for n in ns:
        chunk = max(1, reps // max(workers * 4, 1))
        jobs = [(d, f, int(n), deltas, epsilon, seed, lo, min(lo + chunk, reps))
                for lo in range(0, reps, chunk)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_tightness_block, jobs))
        else:
            parts = [_tightness_block(job) for job in jobs]
        counts = np.sum(parts, axis=0)
        for delta, c in zip(deltas, counts):
            p = c / reps
            cells.append(TightnessCell(n=int(n), delta=delta, exceed_prob=float(p),
                                       se=math.sqrt(p * (1.0 - p) / reps),
                                       replicates=reps))
    return TightnessTable(epsilon=epsilon, cells=tuple(cells))


# ----- random instances for consistency sweeps --------------------------------


def random_instance(rng) -> tuple[Distribution, WeightFunction, np.ndarray]:
    """A random (law, weight, grid) triple with finite conditional variances.

    Weight families are restricted to combinations with registered closed
    forms so that downstream identities hold to near machine precision.
    """
    parts = []
    n_parts = int(rng.integers(1, 4))
    raw = rng.random(n_parts) + 0.2
    has_power = False
    for w in raw:
        if rng.random() < 0.3:
            beta = float(rng.uniform(-0.4, 1.5))
            hi = float(rng.uniform(0.4, 1.0))
            parts.append(["power", beta, hi, float(w)])
            has_power = True
        else:
            lo = float(rng.uniform(0.0, 0.7))
            hi = float(rng.uniform(lo + 0.2, 1.0))
            parts.append(["uniform", lo, hi, float(w)])
    n_atoms = int(rng.integers(0, 3))
    atom_locs = np.unique(rng.uniform(0.05, 0.99, size=n_atoms))
    atom_raw = rng.random(len(atom_locs)) + 0.1
    cont_frac = float(rng.uniform(0.5, 1.0)) if len(atom_locs) else 1.0
    wsum = sum(p[3] for p in parts)
    for p in parts:
        p[3] *= cont_frac / wsum
    atoms = []
    if len(atom_locs):
        asum = atom_raw.sum()
        atoms = [Atom(float(loc), float(m / asum * (1.0 - cont_frac)))
                 for loc, m in zip(atom_locs, atom_raw)]
    built = []
    for p in parts:
        if p[0] == "power":
            built.append(PowerPart(beta=p[1], hi=p[2], weight=p[3]))
        else:
            built.append(UniformPart(lo=p[1], hi=p[2], weight=p[3]))
    d = Distribution(built, atoms)
    choice = rng.random()
    if choice < 0.3:
        f: WeightFunction = ConstantWeight(float(rng.uniform(-2.0, 2.0)))
    elif choice < 0.6:
        coeffs = tuple(float(c) for c in rng.uniform(-2.0, 2.0, size=int(rng.integers(2, 5))))
        f = PolynomialWeight(coeffs)
    elif choice < 0.85 or has_power:
        k = int(rng.integers(2, 5))
        bps = np.concatenate(([0.0], np.sort(rng.uniform(0.1, 0.9, size=k - 1)), [1.0]))
        f = TableWeight(tuple(bps), tuple(float(v) for v in rng.uniform(-3.0, 3.0, size=k)))
    else:
        f = PowerWeight(float(rng.uniform(0.05, 0.2)))
    k = int(rng.integers(2, 6))
    grid = np.sort(rng.uniform(0.05, 0.99, size=k))
    while len(np.unique(grid)) != len(grid):
        grid = np.sort(rng.uniform(0.05, 0.99, size=k))
    return d, f, grid
