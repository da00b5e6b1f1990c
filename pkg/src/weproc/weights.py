"""Weight functions f and the deterministic drift E(f(X) 1_{X <= t}).

Each family knows how to integrate itself (and its square) against a power
density x^q in closed form when that is possible; returning ``None`` sends
the caller down the adaptive-quadrature route.  The drift is memoized per
(distribution, weight) pair because path decompositions query it at many
points per replicate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dist import Distribution, Interval, integral_f
from .errors import DomainError
from .integrate import power_integral

_TWO_PI = 2.0 * math.pi


class WeightFunction:
    """Base class; subclasses are immutable and shareable across workers."""

    #: declared square-integrability under the intended law, None if undeclared
    square_integrable = None

    def eval(self, x: float) -> float:
        raise NotImplementedError

    def eval_array(self, xs: np.ndarray) -> np.ndarray:
        return np.array([self.eval(float(x)) for x in np.asarray(xs).ravel()],
                        dtype=float).reshape(np.shape(xs))

    def integrate_against_power(self, a, b, q, squared):
        """Closed form of integral f(x)^{1|2} x^q dx over (a, b], or None."""
        return None

    def zeros_in(self, a: float, b: float) -> list[float]:
        """Sign-change and breakpoint locations of f strictly inside (a, b)."""
        return []

    @property
    def defined_at_zero(self) -> bool:
        return True


@dataclass(frozen=True)
class ConstantWeight(WeightFunction):
    value: float = 1.0
    square_integrable: bool | None = True

    def eval(self, x):
        return self.value

    def eval_array(self, xs):
        return np.full(np.shape(xs), self.value, dtype=float)

    def integrate_against_power(self, a, b, q, squared):
        c = self.value * self.value if squared else self.value
        if c == 0.0:
            return 0.0
        return c * power_integral(a, b, q)


@dataclass(frozen=True)
class PowerWeight(WeightFunction):
    """f(x) = x^(-alpha), alpha > 0; undefined at x = 0."""

    alpha: float
    square_integrable: bool | None = None

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise DomainError("power weight needs alpha > 0")

    def eval(self, x):
        if x == 0.0:
            raise DomainError("power weight undefined at x = 0")
        return x ** (-self.alpha)

    def eval_array(self, xs):
        xs = np.asarray(xs, dtype=float)
        if np.any(xs == 0.0):
            raise DomainError("power weight undefined at x = 0")
        return xs ** (-self.alpha)

    def integrate_against_power(self, a, b, q, squared):
        shift = 2.0 * self.alpha if squared else self.alpha
        return power_integral(a, b, q - shift)

    @property
    def defined_at_zero(self):
        return False


@dataclass(frozen=True)
class PolynomialWeight(WeightFunction):
    """f(x) = sum coeffs[k] * x^k."""

    coeffs: tuple[float, ...]
    square_integrable: bool | None = True

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if not self.coeffs:
            raise DomainError("polynomial weight needs at least one coefficient")

    def eval(self, x):
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_array(self, xs):
        xs = np.asarray(xs, dtype=float)
        acc = np.zeros_like(xs)
        for c in reversed(self.coeffs):
            acc = acc * xs + c
        return acc

    def _square_coeffs(self):
        return tuple(np.convolve(self.coeffs, self.coeffs))

    def integrate_against_power(self, a, b, q, squared):
        cs = self._square_coeffs() if squared else self.coeffs
        return sum(c * power_integral(a, b, q + k) for k, c in enumerate(cs) if c != 0.0)

    def zeros_in(self, a, b):
        roots = np.roots(list(reversed(self.coeffs)))
        real = roots[np.abs(roots.imag) < 1e-12].real
        return sorted(float(r) for r in real if a < r < b)


class _Trig(WeightFunction):
    square_integrable = True

    def zeros_in(self, a, b):
        # zeros of cos/sin(2 pi x) lie on a quarter-integer lattice
        out = []
        k = math.floor(4.0 * a)
        while (x := (k + 1) / 4.0) < b:
            k += 1
            if x > a and self._is_zero(x):
                out.append(x)
        return out


@dataclass(frozen=True)
class CosineWeight(_Trig):
    """f(x) = cos(2 pi x)."""

    def eval(self, x):
        return math.cos(_TWO_PI * x)

    def eval_array(self, xs):
        return np.cos(_TWO_PI * np.asarray(xs, dtype=float))

    def _is_zero(self, x):
        return abs(math.cos(_TWO_PI * x)) < 1e-9

    def integrate_against_power(self, a, b, q, squared):
        if q != 0.0:
            return None
        if squared:
            # cos^2(2 pi x) = (1 + cos(4 pi x)) / 2
            return 0.5 * (b - a) + (math.sin(2 * _TWO_PI * b) - math.sin(2 * _TWO_PI * a)) / (4 * _TWO_PI)
        return (math.sin(_TWO_PI * b) - math.sin(_TWO_PI * a)) / _TWO_PI


@dataclass(frozen=True)
class SineWeight(_Trig):
    """f(x) = sin(2 pi x)."""

    def eval(self, x):
        return math.sin(_TWO_PI * x)

    def eval_array(self, xs):
        return np.sin(_TWO_PI * np.asarray(xs, dtype=float))

    def _is_zero(self, x):
        return abs(math.sin(_TWO_PI * x)) < 1e-9

    def integrate_against_power(self, a, b, q, squared):
        if q != 0.0:
            return None
        if squared:
            return 0.5 * (b - a) - (math.sin(2 * _TWO_PI * b) - math.sin(2 * _TWO_PI * a)) / (4 * _TWO_PI)
        return (math.cos(_TWO_PI * a) - math.cos(_TWO_PI * b)) / _TWO_PI


@dataclass(frozen=True)
class TableWeight(WeightFunction):
    """Left-continuous step function: value[i] on (breakpoints[i], breakpoints[i+1]].

    Step interpolation keeps every level set a finite union of intervals.
    f(0) extends the first piece's value.
    """

    breakpoints: tuple[float, ...]
    values: tuple[float, ...]
    square_integrable: bool | None = True

    def __post_init__(self):
        bp = tuple(float(x) for x in self.breakpoints)
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if len(bp) < 2 or bp[0] != 0.0 or bp[-1] != 1.0:
            raise DomainError("table breakpoints must run from 0 to 1")
        if any(bp[i] >= bp[i + 1] for i in range(len(bp) - 1)):
            raise DomainError("table breakpoints must be strictly increasing")
        if len(vals) != len(bp) - 1:
            raise DomainError("table needs one value per piece")

    def eval(self, x):
        if x == 0.0:
            return self.values[0]
        i = np.searchsorted(self.breakpoints, x, side="left") - 1
        return self.values[min(max(int(i), 0), len(self.values) - 1)]

    def eval_array(self, xs):
        xs = np.asarray(xs, dtype=float)
        idx = np.searchsorted(self.breakpoints, xs, side="left") - 1
        idx = np.clip(idx, 0, len(self.values) - 1)
        return np.asarray(self.values, dtype=float)[idx]

    def integrate_against_power(self, a, b, q, squared):
        total = 0.0
        for i, v in enumerate(self.values):
            lo = max(a, self.breakpoints[i])
            hi = min(b, self.breakpoints[i + 1])
            if hi > lo:
                c = v * v if squared else v
                if c != 0.0:
                    total += c * power_integral(lo, hi, q)
        return total

    def zeros_in(self, a, b):
        return [x for x in self.breakpoints[1:-1] if a < x < b]


@dataclass
class Compensator:
    """Memoized t -> E(f(X) 1_{X <= t}); cadlag, jumps exactly at atoms of mu."""

    d: Distribution
    f: WeightFunction
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, t: float) -> float:
        if not (0.0 <= t <= 1.0):
            raise DomainError(f"compensator argument {t} outside [0, 1]")
        if isinstance(self.f, ConstantWeight):
            # c * F(t) exactly, so a unit weight reproduces the CDF bitwise
            return self.f.value * self.d.cdf(t)
        hit = self._cache.get(t)
        if hit is None:
            iv = Interval(0.0, t) if t > 0.0 else Interval(0.0, 0.0)
            hit = integral_f(self.d, self.f, iv, include_zero_atom=True)
            self._cache[t] = hit
        return hit

    def batch(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if isinstance(self.f, ConstantWeight):
            return self.f.value * self.d.cdf_array(ts)
        return np.array([self(float(t)) for t in ts])

    def left_limit(self, t: float) -> float:
        m = self.d.atom_mass_at(t)
        if m == 0.0:
            return self(t)
        return self(t) - m * self.f.eval(t)

    def total(self) -> float:
        return self(1.0)


def compensator(d: Distribution, f: WeightFunction, t: float) -> float:
    """One-shot E(f(X) 1_{X <= t}); build a Compensator for repeated queries."""
    return Compensator(d, f)(t)
