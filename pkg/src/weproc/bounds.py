"""Certification of interval-wise conditional-variance bounds.

A candidate bound h must be increasing with x/h(x) bounded and
h(x) ln(x) -> 0, and must dominate Var(f|I) * mu(I) on every interval.
The universal quantifier is approximated by a dyadic scan (all intervals
(k 2^-j, (k+l) 2^-j] with l in {1, 2, 3} up to the requested depth) plus
intervals anchored at every atom; the two limit conditions are probed
numerically on log grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import chain

import numpy as np

from .dist import Distribution, Interval, conditional_moments
from .errors import DivergenceError, DomainError, QuadratureBudgetError
from .weights import WeightFunction

RATIO_TOL = 1e-6          # slack on the worst ratio, absorbing quadrature error
_GRID_CHECK = 10_000
_GROWTH_FACTOR = 1.25     # per-level growth that flags a non-certifiable weight


class BoundFunction:
    """Increasing candidate bound on [0, 1]."""

    def eval(self, x: float) -> float:
        raise NotImplementedError

    def _check_increasing(self):
        xs = np.linspace(0.0, 1.0, _GRID_CHECK)
        vals = np.array([self.eval(float(x)) for x in xs])
        if np.any(np.diff(vals) < -1e-15) or vals[-1] <= vals[0]:
            raise DomainError("bound function must be increasing on [0, 1]")


@dataclass(frozen=True)
class LinearBound(BoundFunction):
    """h(x) = coeff * x (coeff = gamma^2 certifies any f bounded by gamma)."""

    coeff: float

    def __post_init__(self):
        if self.coeff <= 0.0:
            raise DomainError("linear bound needs a positive coefficient")

    def eval(self, x):
        return self.coeff * x


@dataclass(frozen=True)
class PowerBound(BoundFunction):
    """h(x) = coeff * x^exponent with exponent in (0, 1]."""

    coeff: float
    exponent: float

    def __post_init__(self):
        if self.coeff <= 0.0:
            raise DomainError("power bound needs a positive coefficient")
        if not (0.0 < self.exponent <= 1.0):
            raise DomainError("power bound exponent must lie in (0, 1]")

    def eval(self, x):
        return self.coeff * x ** self.exponent


@dataclass(frozen=True)
class TableBound(BoundFunction):
    """Piecewise-linear increasing bound through user-supplied knots."""

    xs: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "xs", tuple(float(x) for x in self.xs))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.xs) != len(self.values) or len(self.xs) < 2:
            raise DomainError("table bound needs matching xs/values of length >= 2")
        if any(self.xs[i] >= self.xs[i + 1] for i in range(len(self.xs) - 1)):
            raise DomainError("table bound xs must be strictly increasing")
        self._check_increasing()

    def eval(self, x):
        return float(np.interp(x, self.xs, self.values))


@dataclass(frozen=True)
class LimitCheck:
    passed: bool
    xs: tuple[float, ...]
    values: tuple[float, ...]
    detail: str = ""


def limit_zero_check(h: BoundFunction) -> LimitCheck:
    """Probe h(x) ln(x) -> 0 on x = 10^-1 .. 10^-12."""
    xs = tuple(10.0 ** (-k) for k in range(1, 13))
    vals = tuple(h.eval(x) * math.log(x) for x in xs)
    tail = [abs(v) for v in vals[-7:]]
    shrinking = all(tail[i + 1] <= tail[i] + 1e-15 for i in range(len(tail) - 1))
    small = abs(vals[-1]) < 1e-3
    detail = "" if shrinking and small else "h(x) ln x does not vanish"
    return LimitCheck(shrinking and small, xs, vals, detail)


def ratio_bounded_check(h: BoundFunction) -> LimitCheck:
    """Probe boundedness of x / h(x) on x = 2^0 .. 2^-40."""
    xs = tuple(2.0 ** (-k) for k in range(0, 41))
    vals = []
    for x in xs:
        hx = h.eval(x)
        if hx <= 0.0:
            return LimitCheck(False, xs, tuple(vals), f"h({x}) <= 0")
        vals.append(x / hx)
    tail = vals[-10:]
    non_increasing = all(tail[i + 1] <= tail[i] + 1e-12 for i in range(len(tail) - 1))
    bounded = max(vals) <= 1e6
    detail = "" if bounded and non_increasing else "x/h(x) appears unbounded"
    return LimitCheck(bounded and non_increasing, xs, tuple(vals), detail)


@dataclass(frozen=True)
class HypothesisReport:
    depth: int
    worst_interval: Interval | None
    worst_ratio: float
    divergent_interval: Interval | None
    per_depth_worst: tuple[float, ...]     # cumulative worst ratio up to each level
    limit_zero: LimitCheck
    ratio_bounded: LimitCheck
    verdict: str                            # pass | fail | inconclusive


def _dyadic_intervals(depth: int):
    """Deduplicated (level, interval) pairs; first occurrence fixes the level."""
    seen = set()
    for j in range(depth + 1):
        step = 2.0 ** (-j)
        cells = 1 << j
        for ell in (1, 2, 3):
            if ell > cells:
                continue
            for k in range(cells - ell + 1):
                lo, hi = k * step, (k + ell) * step
                key = (lo, hi)
                if key not in seen:
                    seen.add(key)
                    yield j, Interval(lo, hi)


def _atom_intervals(d: Distribution, depth: int):
    seen = set()
    for atom in d.atoms:
        for j in range(depth + 1):
            step = 2.0 ** (-j)
            for ell in (1, 2, 3):
                for lo, hi in ((atom.at - ell * step, atom.at),
                               (atom.at, atom.at + ell * step)):
                    lo, hi = max(lo, 0.0), min(hi, 1.0)
                    if hi > lo and (lo, hi) not in seen:
                        seen.add((lo, hi))
                        yield j, Interval(lo, hi)


def _scan_items(d, f, depth):
    """Per-interval (level, interval, Var*mass, mass) plus a divergence witness."""
    items = []
    divergent = None
    for j, iv in chain(_dyadic_intervals(depth), _atom_intervals(d, depth)):
        mass = d.interval_mass(iv)
        if mass <= 0.0:
            continue
        try:
            _, var = conditional_moments(d, f, iv)
        except (DivergenceError, QuadratureBudgetError):
            if divergent is None:
                divergent = iv
            continue
        items.append((j, iv, var * mass, mass))
    return items, divergent


def scan_bound(d: Distribution, f: WeightFunction, h: BoundFunction,
               depth: int) -> HypothesisReport:
    """Scan dyadic and atom-anchored intervals; verdict on the worst ratio."""
    if not (0 <= depth <= 24):
        raise DomainError("scan depth must lie in [0, 24]")
    items, divergent = _scan_items(d, f, depth)
    worst = 0.0
    worst_iv = None
    level_worst = [0.0] * (depth + 1)
    for j, iv, num, mass in items:
        hx = h.eval(mass)
        ratio = math.inf if hx <= 0.0 else num / hx
        if ratio > worst:
            worst, worst_iv = ratio, iv
        if ratio > level_worst[j]:
            level_worst[j] = ratio
    cumulative = tuple(float(np.max(level_worst[:j + 1])) for j in range(depth + 1))
    lz = limit_zero_check(h)
    rb = ratio_bounded_check(h)
    if divergent is not None or worst > 1.0 + RATIO_TOL:
        verdict = "fail"
    elif lz.passed and rb.passed:
        verdict = "pass"
    else:
        verdict = "inconclusive"
    return HypothesisReport(depth=depth, worst_interval=worst_iv, worst_ratio=worst,
                            divergent_interval=divergent, per_depth_worst=cumulative,
                            limit_zero=lz, ratio_bounded=rb, verdict=verdict)


@dataclass(frozen=True)
class FitResult:
    certifiable: bool
    bound: BoundFunction | None
    constant: float | None
    per_depth_worst: tuple[float, ...]
    divergent_interval: Interval | None


def fit_constant(d: Distribution, f: WeightFunction, shape: str, depth: int,
                 rel_tol: float = 1e-3, exponent: float = 0.5) -> FitResult:
    """Smallest constant C making C * shape(x) pass the scan, or not-certifiable.

    shape is "linear" (C x) or "power" (C x^exponent).  Certifiability fails
    when a conditional variance diverges or the worst scan ratio keeps growing
    with depth.
    """
    if shape == "linear":
        base = lambda x: x
        make = lambda c: LinearBound(c)
    elif shape == "power":
        base = lambda x: x ** exponent
        make = lambda c: PowerBound(c, exponent)
    else:
        raise DomainError(f"unknown bound shape {shape!r}")
    items, divergent = _scan_items(d, f, depth)
    level_worst = [0.0] * (depth + 1)
    for j, _, num, mass in items:
        r = num / base(mass)
        if r > level_worst[j]:
            level_worst[j] = r
    cumulative = tuple(float(np.max(level_worst[:j + 1])) for j in range(depth + 1))
    if divergent is not None:
        return FitResult(False, None, None, cumulative, divergent)
    tail = cumulative[-5:]
    growing = (len(tail) == 5 and tail[0] > 0.0
               and all(tail[i + 1] >= _GROWTH_FACTOR * tail[i] for i in range(4)))
    if growing:
        return FitResult(False, None, None, cumulative, None)

    def sup_ratio(c):
        return max((num / (c * base(mass)) for _, _, num, mass in items), default=0.0)

    if not items or cumulative[-1] == 0.0:
        # degenerate weight: any constant certifies; report a unit bound
        return FitResult(True, make(1.0), 1.0, cumulative, None)
    lo_c, hi_c = cumulative[-1] / 2.0, cumulative[-1] * 2.0
    while sup_ratio(hi_c) > 1.0:
        hi_c *= 2.0
    while sup_ratio(lo_c) <= 1.0 and lo_c > 1e-300:
        lo_c /= 2.0
    while hi_c - lo_c > rel_tol * hi_c:
        mid = 0.5 * (lo_c + hi_c)
        if sup_ratio(mid) <= 1.0:
            hi_c = mid
        else:
            lo_c = mid
    return FitResult(True, make(hi_c), hi_c, cumulative, None)
