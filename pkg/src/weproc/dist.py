"""Mixture laws on [0, 1]: named continuous families plus atoms.

A ``Distribution`` is an immutable mixture of continuous parts (uniform on a
sub-interval, or a power density c*x^beta on (0, b]) and point masses.  All
interval arithmetic uses half-open ``(lower, upper]`` semantics so that
indicator sums ``1_{X <= t}`` stay consistent with a right-continuous CDF.
An atom sitting exactly at an interval's upper endpoint belongs to that
interval, never to the next one.  The atom at 0, when present, is included
in the event ``{X <= t}`` for every t >= 0.

Conditional moments of a weight function are computed through registered
closed forms (power-law antiderivatives) whenever the weight supports them,
with adaptive quadrature as the fallback.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import integrate
from .errors import DomainError, ZeroMassError
from .seeding import as_generator

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class Interval:
    """Half-open interval (lower, upper] inside [0, 1]."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise DomainError(f"interval ({self.lower}, {self.upper}] not inside [0, 1]")

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float) -> bool:
        return self.lower < x <= self.upper


@dataclass(frozen=True)
class UniformPart:
    """Uniform density on (lo, hi) with the given mixture weight."""

    lo: float
    hi: float
    weight: float

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi <= 1.0):
            raise DomainError(f"uniform support ({self.lo}, {self.hi}) invalid")
        if self.weight < 0.0:
            raise DomainError("mixture weight must be >= 0")

    def cdf01(self, x):
        # normalized within the part: 0 at lo, 1 at hi
        return np.clip((np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def quantile01(self, u):
        return self.lo + np.asarray(u, dtype=float) * (self.hi - self.lo)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > self.lo) & (x <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)

    # density = coefficient * x^exponent on the support
    @property
    def power_exponent(self) -> float:
        return 0.0

    @property
    def power_coefficient(self) -> float:
        return 1.0 / (self.hi - self.lo)


@dataclass(frozen=True)
class PowerPart:
    """Density proportional to x^beta on (0, hi]; beta > -1 keeps it integrable."""

    beta: float
    hi: float
    weight: float

    def __post_init__(self):
        if self.beta <= -1.0:
            raise DomainError("power density needs beta > -1")
        if not (0.0 < self.hi <= 1.0):
            raise DomainError(f"power support upper bound {self.hi} invalid")
        if self.weight < 0.0:
            raise DomainError("mixture weight must be >= 0")

    @property
    def lo(self) -> float:
        return 0.0

    def cdf01(self, x):
        x = np.asarray(x, dtype=float)
        scaled = np.clip(x / self.hi, 0.0, 1.0)
        return np.where(x <= 0.0, 0.0, scaled ** (self.beta + 1.0))

    def quantile01(self, u):
        return self.hi * np.asarray(u, dtype=float) ** (1.0 / (self.beta + 1.0))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0.0) & (x <= self.hi)
        coeff = self.power_coefficient
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = coeff * np.where(inside, x, 1.0) ** self.beta
        return np.where(inside, vals, 0.0)

    @property
    def power_exponent(self) -> float:
        return self.beta

    @property
    def power_coefficient(self) -> float:
        return (self.beta + 1.0) / self.hi ** (self.beta + 1.0)


@dataclass(frozen=True)
class Atom:
    at: float
    mass: float

    def __post_init__(self):
        if not (0.0 <= self.at <= 1.0):
            raise DomainError(f"atom location {self.at} outside [0, 1]")
        if self.mass <= 0.0:
            raise DomainError("atom mass must be > 0")


class Distribution:
    """Immutable mixture measure on [0, 1]; safe to share across workers."""

    def __init__(self, continuous=(), atoms=()):
        self.continuous = tuple(continuous)
        self.atoms = tuple(sorted(atoms, key=lambda a: a.at))
        locs = [a.at for a in self.atoms]
        if len(set(locs)) != len(locs):
            raise DomainError("atom locations must be pairwise distinct")
        total = sum(p.weight for p in self.continuous) + sum(a.mass for a in self.atoms)
        if abs(total - 1.0) > _NORM_TOL:
            raise DomainError(f"mixture weights and atom masses sum to {total}, expected 1")
        self._atom_locs = np.array(locs, dtype=float)
        self._atom_masses = np.array([a.mass for a in self.atoms], dtype=float)
        self._build_breakpoints()

    def _build_breakpoints(self):
        pts = {0.0, 1.0}
        pts.update(a.at for a in self.atoms)
        for p in self.continuous:
            pts.add(p.lo)
            pts.add(p.hi)
        self._bps = np.array(sorted(pts), dtype=float)
        self._f_right = self.cdf_array(self._bps)
        jump = np.zeros_like(self._bps)
        for a in self.atoms:
            jump[np.searchsorted(self._bps, a.at)] = a.mass
        self._f_left = self._f_right - jump
        # parts whose support spans each open gap (bps[i], bps[i+1])
        gaps = []
        for i in range(len(self._bps) - 1):
            lo, hi = self._bps[i], self._bps[i + 1]
            gaps.append(tuple(p for p in self.continuous
                              if p.weight > 0.0 and p.lo <= lo and p.hi >= hi))
        self._gap_parts = gaps

    # ----- CDF / masses -------------------------------------------------

    def cdf(self, t: float) -> float:
        """F(t) = mu([0, t]); right-continuous, F(1) = 1."""
        if not (0.0 <= t <= 1.0):
            raise DomainError(f"cdf argument {t} outside [0, 1]")
        return float(self.cdf_array(np.array([t]))[0])

    def cdf_array(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.zeros_like(ts)
        for p in self.continuous:
            if p.weight > 0.0:
                out = out + p.weight * p.cdf01(ts)
        if len(self.atoms):
            out = out + (ts[..., None] >= self._atom_locs).dot(self._atom_masses)
        return out

    def cdf_left(self, t: float) -> float:
        """Left limit F(t-)."""
        return self.cdf(t) - self.atom_mass_at(t)

    def atom_mass_at(self, x: float) -> float:
        i = np.searchsorted(self._atom_locs, x)
        if i < len(self._atom_locs) and self._atom_locs[i] == x:
            return float(self._atom_masses[i])
        return 0.0

    def atom_masses_at(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.zeros_like(xs)
        if len(self._atom_locs):
            idx = np.searchsorted(self._atom_locs, xs)
            ok = idx < len(self._atom_locs)
            hit = ok & (self._atom_locs[np.minimum(idx, len(self._atom_locs) - 1)] == xs)
            out[hit] = self._atom_masses[idx[hit]]
        return out

    def interval_mass(self, interval: Interval) -> float:
        """mu((lower, upper]) = F(upper) - F(lower)."""
        return max(self.cdf(interval.upper) - self.cdf(interval.lower), 0.0)

    def median(self) -> float:
        """inf{x : F(x) >= 1/2}."""
        return self.quantile(0.5)

    # ----- quantiles ----------------------------------------------------

    def quantile(self, u: float) -> float:
        """Generalized inverse inf{x : F(x) >= u}."""
        return float(self.quantile_array(np.array([u]))[0])

    def quantile_array(self, us: np.ndarray) -> np.ndarray:
        us = np.asarray(us, dtype=float)
        if np.any((us < 0.0) | (us > 1.0)):
            raise DomainError("quantile argument outside [0, 1]")
        out = np.empty_like(us)
        idx = np.searchsorted(self._f_right, us, side="left")
        idx = np.minimum(idx, len(self._bps) - 1)
        at_zero = idx == 0
        out[at_zero] = self._bps[0]
        todo = ~at_zero
        jump = todo & (us > self._f_left[idx])
        out[jump] = self._bps[idx[jump]]
        inner = todo & ~jump
        for i in np.unique(idx[inner]):
            mask = inner & (idx == i)
            out[mask] = self._invert_gap(int(i), us[mask])
        return out

    def _invert_gap(self, i: int, us: np.ndarray) -> np.ndarray:
        lo, hi = self._bps[i - 1], self._bps[i]
        base = self._f_right[i - 1]
        parts = self._gap_parts[i - 1]
        if len(parts) == 1:
            p = parts[0]
            rel = p.cdf01(lo) + (us - base) / p.weight
            return np.clip(p.quantile01(rel), lo, hi)
        out = np.empty_like(us)
        for k, u in enumerate(us):
            out[k] = brentq(lambda x: float(self.cdf_array(np.array([x]))[0]) - u,
                            lo, hi, xtol=1e-15, rtol=8.9e-16)
        return out

    # ----- sampling -----------------------------------------------------

    def sample(self, n: int, seed_or_rng) -> np.ndarray:
        """n i.i.d. draws, sorted ascending; deterministic given the seed."""
        if n < 0:
            raise DomainError("sample size must be >= 0")
        rng = as_generator(seed_or_rng)
        return np.sort(self.draw(n, rng))

    def draw(self, n: int, rng) -> np.ndarray:
        """n i.i.d. draws in generation order (unsorted)."""
        u = 1.0 - rng.random(n)  # in (0, 1]
        if self._is_standard_uniform():
            return u
        return self.quantile_array(u)

    def draw_matrix(self, rows: int, cols: int, rng) -> np.ndarray:
        """Unsorted (rows, cols) matrix of i.i.d. draws; rows filled in order."""
        u = 1.0 - rng.random((rows, cols))
        if self._is_standard_uniform():
            return u
        return self.quantile_array(u.ravel()).reshape(rows, cols)

    def _is_standard_uniform(self) -> bool:
        return (not self.atoms and len(self.continuous) == 1
                and isinstance(self.continuous[0], UniformPart)
                and self.continuous[0].lo == 0.0 and self.continuous[0].hi == 1.0)

    def conditional_sample(self, interval: Interval, n: int, seed_or_rng) -> np.ndarray:
        """n i.i.d. draws from mu conditioned on (lower, upper], in draw order."""
        mass = self.interval_mass(interval)
        if mass <= 0.0:
            raise ZeroMassError(
                f"interval ({interval.lower}, {interval.upper}] has zero mass")
        rng = as_generator(seed_or_rng)
        base = self.cdf(interval.lower)
        u = base + (1.0 - rng.random(n)) * mass
        return self.quantile_array(np.minimum(u, 1.0))


# ----- integrals of weight functions against the mixture ------------------


def _part_integral(part, f, a: float, b: float, squared: bool) -> float:
    """Integral of f^k(x) * part-density(x) over (a, b] clipped to the support."""
    lo = max(a, part.lo)
    hi = min(b, part.hi)
    if hi <= lo:
        return 0.0
    q = part.power_exponent
    coeff = part.weight * part.power_coefficient
    closed = f.integrate_against_power(lo, hi, q, squared)
    if closed is not None:
        return coeff * closed

    def integrand(x):
        v = f.eval(x)
        if squared:
            v *= v
        return v * x ** q if q != 0.0 else v

    if lo == 0.0:
        return coeff * integrate.left_singular_quadrature(integrand, lo, hi)
    return coeff * integrate.adaptive_quadrature(integrand, lo, hi)


def integral_f(d: Distribution, f, interval: Interval, squared: bool = False,
               include_zero_atom: bool = False) -> float:
    """E[f(X)^k 1_{X in (lower, upper]}], optionally adding the atom at 0."""
    total = 0.0
    for p in d.continuous:
        if p.weight > 0.0:
            total += _part_integral(p, f, interval.lower, interval.upper, squared)
    for a in d.atoms:
        picked = interval.contains(a.at) or (include_zero_atom and a.at == 0.0
                                             and interval.lower <= 0.0)
        if picked:
            v = f.eval(a.at)
            total += a.mass * (v * v if squared else v)
    return total


def conditional_moments(d: Distribution, f, interval: Interval,
                        method: str = "auto") -> tuple[float, float]:
    """(E(f|X in I), Var(f|X in I)) on I = (lower, upper]; (0, 0) for zero mass.

    ``method="quadrature"`` bypasses registered closed forms (testing hook);
    the default uses a closed form whenever the weight family provides one.
    """
    if method not in ("auto", "quadrature"):
        raise DomainError(f"unknown moments method {method!r}")
    mass = d.interval_mass(interval)
    if mass <= 0.0:
        return 0.0, 0.0
    f_used = _ForceQuadrature(f) if method == "quadrature" else f
    m1 = integral_f(d, f_used, interval) / mass
    m2 = integral_f(d, f_used, interval, squared=True) / mass
    return m1, max(m2 - m1 * m1, 0.0)


def moments_leq(d: Distribution, f, s: float) -> tuple[float, float]:
    """(E(f|X <= s), Var(f|X <= s)); the atom at 0 belongs to the event."""
    mass = d.cdf(s)
    if mass <= 0.0:
        return 0.0, 0.0
    iv = Interval(0.0, s) if s > 0.0 else Interval(0.0, 0.0)
    m1 = integral_f(d, f, iv, include_zero_atom=True) / mass
    m2 = integral_f(d, f, iv, squared=True, include_zero_atom=True) / mass
    return m1, max(m2 - m1 * m1, 0.0)


class _ForceQuadrature:
    """Wrapper hiding a weight's closed forms so the numeric path runs."""

    def __init__(self, f):
        self._f = f

    def eval(self, x):
        return self._f.eval(x)

    def integrate_against_power(self, a, b, q, squared):
        return None
