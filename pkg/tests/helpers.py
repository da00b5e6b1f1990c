"""Shared fixtures and independent oracles for the test suite.

Oracles here deliberately avoid the package's own integration and scan code:
moment integrals go through mpmath quadrature, tail probabilities through
direct pmf summation, and the KS null quantile through the alternating
series.
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np

import weproc as w


def uniform01():
    return w.Distribution([w.UniformPart(0.0, 1.0, 1.0)])


def point_mass(at=0.5):
    return w.Distribution([], [w.Atom(at, 1.0)])


def half_uniform_half_atom():
    return w.Distribution([w.UniformPart(0.0, 1.0, 0.5)], [w.Atom(0.5, 0.5)])


def mp_conditional_moments(density, f, a, b, mass=None, atoms=(), breaks=()):
    """Conditional mean/variance on (a, b] by mpmath quadrature plus atom sums.

    density(x) is the full mixture density of the continuous share; atoms is
    a list of (location, mass) pairs; breaks lists density/weight
    discontinuities that quadrature must not straddle.
    """
    inner = sorted({loc for loc, _ in atoms if a < loc <= b}
                   | {x for x in breaks if a < x < b})
    pts = [a] + inner + [b]
    m0 = mp.quad(lambda x: density(x), pts)
    m1 = mp.quad(lambda x: f(x) * density(x), pts)
    m2 = mp.quad(lambda x: f(x) ** 2 * density(x), pts)
    for loc, am in atoms:
        if a < loc <= b:
            m0 += am
            m1 += am * f(loc)
            m2 += am * f(loc) ** 2
    if mass is None:
        mass = m0
    mean = m1 / mass
    var = m2 / mass - mean ** 2
    return float(mean), float(var)


def ks_null_quantile(level: float) -> float:
    """Quantile of the asymptotic Kolmogorov distribution via the series."""

    def cdf(x):
        return float(1 - 2 * mp.nsum(lambda k: (-1) ** (k - 1) * mp.e ** (-2 * k * k * x * x),
                                     [1, mp.inf]))

    lo, hi = 0.2, 4.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if cdf(mid) < level:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ks_statistic(samples, cdf) -> float:
    xs = np.sort(np.asarray(samples, dtype=float))
    n = len(xs)
    vals = np.array([cdf(x) for x in xs])
    steps = np.arange(1, n + 1) / n
    return float(max(np.max(steps - vals), np.max(vals - (steps - 1.0 / n))))


def poisson_tail_ge_oracle(lam: float, x: float) -> float:
    """P(Poisson(lam) >= x) by mpmath summation (independent of the package)."""
    k0 = math.ceil(x)
    return float(mp.nsum(lambda k: mp.e ** (-lam) * mp.mpf(lam) ** k / mp.factorial(k),
                         [k0, mp.inf]))


def poisson_tail_le_oracle(lam: float, x: float) -> float:
    k0 = math.floor(x)
    if k0 < 0:
        return 0.0
    return float(sum(mp.e ** (-lam) * mp.mpf(lam) ** k / mp.factorial(k)
                     for k in range(0, k0 + 1)))


# ----- brute-force partition modulus for flat step paths ----------------------


def step_path_levels(path) -> tuple[list[float], list[float]]:
    """(breakpoints, levels) of a flat-drift path; levels[i] holds on [b_i, b_{i+1})."""
    breaks = sorted({float(v) for v in path.values} | {a.at for a in path.dist.atoms})
    breaks = [b for b in breaks if 0.0 < b < 1.0]
    levels = [path.y_value(0.0)]
    for b in breaks:
        levels.append(path.y_value(b))
    return breaks, levels


def brute_modulus(breaks, levels, delta, eps=1e-12):
    """Exact partition modulus of a pure step path by branch-and-bound search.

    Slots alternate cut-inside-segment / cut-at-breakpoint; positions are
    placed greedily leftmost, which is optimal for a fixed cut pattern.
    Blocks are [t_{i-1}, t_i) and the partition ends at 1.
    """
    m = len(breaks)
    best = [max(levels) - min(levels)]

    # slot list: ("seg", i) allows one cut strictly inside segment i,
    # ("at", i) allows a cut exactly at breaks[i]
    slots = []
    for i in range(m):
        slots.append(("seg", i))
        slots.append(("at", i))
    slots.append(("seg", m))
    seg_lo = [0.0] + breaks
    seg_hi = breaks + [1.0]

    def walk(idx, last_cut, block_min, block_max, running):
        if running >= best[0]:
            return
        if idx == len(slots):
            value = max(running, block_max - block_min)
            if value < best[0]:
                best[0] = value
            return
        kind, i = slots[idx]
        # option 1: no cut here
        if kind == "at":
            lvl = levels[i + 1]
            walk(idx + 1, last_cut, min(block_min, lvl), max(block_max, lvl), running)
        else:
            walk(idx + 1, last_cut, block_min, block_max, running)
        # option 2: cut here (greedy leftmost position)
        if kind == "at":
            pos = breaks[i]
            if pos - last_cut < delta or pos > 1.0 - delta:
                return
            new_running = max(running, block_max - block_min)
            lvl = levels[i + 1]
            walk(idx + 1, pos, lvl, lvl, new_running)
        else:
            lo = max(seg_lo[i] + eps, last_cut + delta)
            if lo >= seg_hi[i] or lo > 1.0 - delta:
                return
            new_running = max(running, block_max - block_min)
            lvl = levels[i]
            walk(idx + 1, lo, lvl, lvl, new_running)

    walk(0, 0.0, levels[0], levels[0], 0.0)
    return best[0]
