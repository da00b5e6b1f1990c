"""Exact and adaptive integration helpers for mixture components.

Power-law integrands have closed antiderivatives and get exact treatment,
including divergence detection at the origin.  Everything else goes through
adaptive Simpson refinement with an explicit depth budget so that
non-integrable singularities surface as errors instead of silent garbage,
plus a dyadic-shell scheme for integrable endpoint singularities at the
left end of the interval.
"""

from __future__ import annotations

import math

from .errors import DivergenceError, QuadratureBudgetError

ABS_TOL = 1e-10
MAX_DEPTH = 60
_MAX_SHELLS = 1100
_GROWTH_LIMIT = 8


def power_integral(a: float, b: float, q: float) -> float:
    """Integral of x^q over (a, b] with 0 <= a <= b; divergent when a == 0 and q <= -1."""
    if a > b:
        raise ValueError(f"inverted integration bounds ({a}, {b})")
    if a == b:
        return 0.0
    if a == 0.0:
        if q <= -1.0:
            raise DivergenceError(f"integral of x^{q} diverges at 0")
        return b ** (q + 1.0) / (q + 1.0)
    if q == -1.0:
        return math.log(b / a)
    return (b ** (q + 1.0) - a ** (q + 1.0)) / (q + 1.0)


def _simpson(fa, fm, fb, h):
    return h * (fa + 4.0 * fm + fb) / 6.0


def adaptive_quadrature(fn, a: float, b: float, tol: float = ABS_TOL,
                        max_depth: int = MAX_DEPTH) -> float:
    """Adaptive Simpson integral of fn over [a, b] to absolute tolerance tol."""
    if a == b:
        return 0.0
    m = 0.5 * (a + b)
    fa, fm, fb = fn(a), fn(m), fn(b)
    whole = _simpson(fa, fm, fb, b - a)
    return _refine(fn, a, b, fa, fm, fb, whole, tol, max_depth)


def _refine(fn, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = fn(lm), fn(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    diff = left + right - whole
    if abs(diff) <= 15.0 * tol:
        return left + right + diff / 15.0
    if depth <= 0:
        raise QuadratureBudgetError(
            f"refinement budget exhausted on [{a}, {b}] (residual {abs(diff):.3e})")
    half = tol / 2.0
    return (_refine(fn, a, m, fa, flm, fm, left, half, depth - 1)
            + _refine(fn, m, b, fm, frm, fb, right, half, depth - 1))


def left_singular_quadrature(fn, a: float, b: float, tol: float = ABS_TOL) -> float:
    """Integral of fn over (a, b] when fn may blow up at a.

    Dyadic shells shrink toward a; shell contributions must decay
    geometrically or the integral is declared divergent.
    """
    if a == b:
        return 0.0
    total = 0.0
    hi = b
    width = b - a
    prev = None
    growth = 0
    for k in range(1, _MAX_SHELLS):
        lo = a + width * 2.0 ** (-k)
        if lo >= hi:
            break
        piece = adaptive_quadrature(fn, lo, hi, tol=tol / 4.0)
        total += piece
        if prev is not None and abs(prev) > 0.0:
            ratio = abs(piece) / abs(prev)
            if ratio >= 0.999:
                growth += 1
                if growth >= _GROWTH_LIMIT:
                    raise DivergenceError(
                        f"shell contributions do not decay near {a}; integral diverges")
            else:
                growth = 0
                # geometric tail bound once shells shrink
                tail = abs(piece) * ratio / (1.0 - ratio) if ratio < 1.0 else math.inf
                if tail < tol / 2.0 and k >= 4:
                    return total
        if piece == 0.0 and k >= 4:
            return total
        prev = piece
        hi = lo
    if lo <= a or hi <= a:
        return total
    raise QuadratureBudgetError(f"shell budget exhausted integrating near {a}")
