"""Sample paths of the weighted empirical process and their path functionals.

A path stores the sorted sample with weight values and prefix sums once
(O(N log N) build), after which point queries are O(log N).  The centered,
sqrt(n)-scaled fluctuation is evaluated exactly as a step function minus the
memoized drift.  The module also provides the exact split into a
conditionally-centered part and a counting-fluctuation part, the oscillation
of a path over an interval, and the partition modulus used for tightness
probes.

Modulus conventions: partitions run 0 = t_0 < ... < t_v = 1 with every block
length >= delta; blocks are half-open [t_{i-1}, t_i), so a cut placed exactly
at a jump isolates that jump.  Candidate cut points are the path's jump
locations plus either delta-stepped chains from each jump (small paths; exact
for flat-drift step paths) or a delta/4 grid (large paths; the residual drift
resolution is reported alongside the value).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .dist import Distribution, Interval
from .errors import DomainError
from .seeding import as_generator
from .weights import Compensator, WeightFunction

_EXACT_JUMP_LIMIT = 64


@dataclass
class SamplePath:
    """One realization: sorted points, weight values, prefix sums, drift handle."""

    n: int
    mode: str
    values: np.ndarray            # sorted ascending, length N
    fvals: np.ndarray             # f at values
    prefix: np.ndarray            # length N + 1, prefix[k] = sum of first k fvals
    dist: Distribution
    weight: WeightFunction
    drift: Compensator = field(repr=False)

    @property
    def size(self) -> int:
        """Number of sampled points N (equals n in fixed-n mode)."""
        return len(self.values)

    # ----- point queries --------------------------------------------------

    def count_upto(self, t: float) -> int:
        """#{i : X_i <= t}."""
        if not (0.0 <= t <= 1.0):
            raise DomainError(f"time {t} outside [0, 1]")
        return int(np.searchsorted(self.values, t, side="right"))

    def z_value(self, t: float) -> float:
        """Empirical weighted mean (1/n) sum f(X_i) 1_{X_i <= t}; divisor is n in both modes."""
        return float(self.prefix[self.count_upto(t)]) / self.n

    def y_value(self, t: float) -> float:
        """sqrt(n) * (empirical - drift) at t."""
        return math.sqrt(self.n) * (self.z_value(t) - self.drift(t))

    def decompose(self, t: float) -> tuple[float, float]:
        """Exact split (centered-sum part, counting part); the two add back to y_value(t).

        The counting part is (N(t) - n F(t))/sqrt(n) * Z(t)/F(t), set to 0
        where F(t) = 0.  It is evaluated with the same floating-point shape
        as y_value so that a constant weight yields a bitwise-zero first part.
        """
        y = self.y_value(t)
        ft = self.dist.cdf(t)
        if ft == 0.0:
            return y, 0.0
        counting = (math.sqrt(self.n) * (self.count_upto(t) / self.n - ft)
                    * (self.drift(t) / ft))
        return y - counting, counting

    # ----- vectorized helpers ----------------------------------------------

    def z_values(self, ts: np.ndarray) -> np.ndarray:
        counts = np.searchsorted(self.values, ts, side="right")
        return self.prefix[counts] / self.n

    def drift_values(self, ts: np.ndarray) -> np.ndarray:
        return self.drift.batch(ts)

    def y_values(self, ts: np.ndarray) -> np.ndarray:
        return math.sqrt(self.n) * (self.z_values(ts) - self.drift_values(ts))

    # ----- path functionals -------------------------------------------------

    def _one_sided(self, ts: np.ndarray, which: str) -> tuple[np.ndarray, np.ndarray]:
        """(right values, left limits) of the selected path component at ts."""
        root_n = math.sqrt(self.n)
        counts_r = np.searchsorted(self.values, ts, side="right")
        counts_l = np.searchsorted(self.values, ts, side="left")
        drift_r = self.drift_values(ts)
        amass = self.dist.atom_masses_at(ts)
        f_at = np.zeros_like(amass)
        hit = amass > 0.0
        if hit.any():
            f_at[hit] = self.weight.eval_array(ts[hit])
        drift_l = drift_r - amass * f_at
        y_r = root_n * (self.prefix[counts_r] / self.n - drift_r)
        y_l = root_n * (self.prefix[counts_l] / self.n - drift_l)
        if which == "Y":
            return y_r, y_l
        f_r = self.dist.cdf_array(ts)
        f_l = f_r - amass
        with np.errstate(divide="ignore", invalid="ignore"):
            c_r = np.where(f_r > 0.0, (counts_r - self.n * f_r) / root_n
                           * np.where(f_r > 0.0, drift_r, 0.0) / np.where(f_r > 0.0, f_r, 1.0), 0.0)
            c_l = np.where(f_l > 0.0, (counts_l - self.n * f_l) / root_n
                           * np.where(f_l > 0.0, drift_l, 0.0) / np.where(f_l > 0.0, f_l, 1.0), 0.0)
        if which == "Yxx":
            return c_r, c_l
        return y_r - c_r, y_l - c_l

    def _component_at(self, t: float, which: str) -> float:
        if which == "Y":
            return self.y_value(t)
        yp, yxx = self.decompose(t)
        return yxx if which == "Yxx" else yp

    def _event_points(self, lo: float, hi: float) -> np.ndarray:
        """Jump and drift-extremum candidates in (lo, hi]."""
        pts = set()
        i0 = np.searchsorted(self.values, lo, side="right")
        i1 = np.searchsorted(self.values, hi, side="right")
        pts.update(float(v) for v in self.values[i0:i1])
        pts.update(a.at for a in self.dist.atoms if lo < a.at <= hi)
        pts.update(z for z in self.weight.zeros_in(lo, hi))
        return np.array(sorted(pts), dtype=float)

    def oscillation(self, interval: Interval, which: str = "Y") -> float:
        """sup |path(s) - path(t)| over s, t in (lower, upper], one-sided limits included.

        which selects the full path "Y", the centered-sum part "Yp", or the
        counting part "Yxx".
        """
        if which not in ("Y", "Yp", "Yxx"):
            raise DomainError(f"unknown path component {which!r}")
        lo, hi = interval.lower, interval.upper
        if hi <= lo:
            return 0.0
        inner = self._event_points(lo, hi)
        cand = np.concatenate(([lo], inner, [hi])) if (len(inner) == 0 or inner[-1] != hi) \
            else np.concatenate(([lo], inner))
        v, u = self._one_sided(cand, which)
        # at the open left endpoint only the right limit is approached
        vals = list(v) + list(u[1:])
        if which != "Y":
            vals.extend(self._stretch_extrema(cand, which))
        return float(max(vals) - min(vals))

    def _stretch_extrema(self, cand: np.ndarray, which: str) -> list[float]:
        # interior extrema of the smooth piece between consecutive candidates;
        # only the ratio-form components need a numeric search
        out = []
        for a, b in zip(cand[:-1], cand[1:]):
            if b - a < 1e-12:
                continue
            k = int(np.searchsorted(self.values, a, side="right"))

            def g(t, k=k):
                ft = self.dist.cdf(t)
                if ft <= 0.0:
                    return 0.0
                counting = ((k - self.n * ft) / math.sqrt(self.n)) * self.drift(t) / ft
                if which == "Yxx":
                    return counting
                return math.sqrt(self.n) * (self.prefix[k] / self.n - self.drift(t)) - counting

            pad = (b - a) * 1e-9
            for sign in (1.0, -1.0):
                res = minimize_scalar(lambda t: sign * g(t), bounds=(a + pad, b - pad),
                                      method="bounded", options={"xatol": 1e-12})
                out.append(float(g(res.x)))
        return out

    def modulus(self, delta: float) -> "ModulusResult":
        """Partition modulus at spacing delta (see module docstring for conventions)."""
        return _modulus(self, delta)

    def modulus_exceeds(self, delta: float, epsilon: float) -> bool:
        """True when the partition modulus is >= epsilon (single feasibility check)."""
        state = _ModulusState(self, delta)
        return not state.feasible(epsilon * (1.0 - 1e-12))


def simulate(d: Distribution, f: WeightFunction, n: int, mode: str = "fixed",
             seed_or_rng=0) -> SamplePath:
    """Draw a path: exactly n points, or N ~ Poisson(n) points in "poisson" mode."""
    if n < 1:
        raise DomainError("sample size must be >= 1")
    if mode not in ("fixed", "poisson"):
        raise DomainError(f"unknown mode {mode!r}")
    rng = as_generator(seed_or_rng)
    count = n if mode == "fixed" else int(rng.poisson(n))
    values = d.sample(count, rng)
    fvals = f.eval_array(values) if count else np.empty(0)
    prefix = np.zeros(count + 1)
    np.cumsum(fvals, out=prefix[1:])
    return SamplePath(n=n, mode=mode, values=values, fvals=fvals, prefix=prefix,
                      dist=d, weight=f, drift=Compensator(d, f))


# ----- partition modulus ---------------------------------------------------


@dataclass(frozen=True)
class ModulusResult:
    value: float
    resolution: float            # drift oscillation unresolved by the cut grid
    partition: tuple[float, ...]

    def __float__(self):
        return self.value


class _SparseTable:
    """O(1) range max/min over a fixed array."""

    def __init__(self, arr: np.ndarray):
        m = len(arr)
        self.maxs = [np.asarray(arr, dtype=float)]
        self.mins = [np.asarray(arr, dtype=float)]
        k = 1
        while (1 << k) <= m:
            prev_max, prev_min = self.maxs[-1], self.mins[-1]
            half = 1 << (k - 1)
            self.maxs.append(np.maximum(prev_max[:-half], prev_max[half:]))
            self.mins.append(np.minimum(prev_min[:-half], prev_min[half:]))
            k += 1

    def query(self, lo: int, hi: int) -> tuple[float, float]:
        """(max, min) over inclusive index range [lo, hi]; empty range -> (-inf, inf)."""
        if hi < lo:
            return -math.inf, math.inf
        k = (hi - lo + 1).bit_length() - 1
        off = hi - (1 << k) + 1
        return (max(self.maxs[k][lo], self.maxs[k][off]),
                min(self.mins[k][lo], self.mins[k][off]))


class _ModulusState:
    """Candidate cuts, one-sided path values, and the feasibility sweep."""

    def __init__(self, path: SamplePath, delta: float):
        if not (0.0 < delta < 1.0):
            raise DomainError("modulus spacing must lie in (0, 1)")
        self.delta = delta
        jumps = np.unique(path.values[(path.values > 0.0) & (path.values < 1.0)])
        events = set(float(j) for j in jumps)
        events.update(a.at for a in path.dist.atoms if 0.0 < a.at < 1.0)
        events.update(path.weight.zeros_in(0.0, 1.0))
        if len(jumps) <= _EXACT_JUMP_LIMIT:
            eps_base = min(np.diff(np.concatenate(([0.0], np.array(sorted(events)), [1.0]))).min()
                           if events else 1.0, delta)
            eps = max(eps_base / 1024.0, 1e-13)
            anchors = {0.0}
            for b in events:
                anchors.add(b)
                anchors.add(b + eps)
            cuts = set()
            for a in anchors:
                x = a
                while x < 1.0:
                    cuts.add(x)
                    x += delta
            cuts.update(events)
        else:
            cuts = set(np.arange(0.0, 1.0, delta / 4.0))
            cuts.update(events)
        cuts.add(0.0)
        cuts.add(1.0)
        self.cands = np.array(sorted(c for c in cuts if 0.0 <= c <= 1.0), dtype=float)
        v, u = path._one_sided(self.cands, "Y")
        self.v_table = _SparseTable(v)
        self.u_table = _SparseTable(u)
        self.v, self.u = v, u
        drift = path.drift_values(self.cands)
        self.resolution = float(np.max(np.abs(np.diff(drift)))) * math.sqrt(path.n) \
            if len(self.cands) > 1 else 0.0
        self.last = len(self.cands) - 1

    def osc(self, j: int, i: int) -> float:
        """Oscillation over the block [cands[j], cands[i])."""
        vmax, vmin = self.v_table.query(j, i - 1)
        umax, umin = self.u_table.query(j + 1, i)
        return max(vmax, umax) - min(vmin, umin)

    def full(self) -> float:
        return self.osc(0, self.last)

    def feasible(self, threshold: float, collect: bool = False):
        """Is there a valid partition with every block oscillation <= threshold?"""
        cands, delta = self.cands, self.delta
        m = len(cands)
        reach = np.zeros(m, dtype=bool)
        reach[0] = True
        prefix = np.zeros(m + 1, dtype=np.int64)
        prefix[1] = 1
        parent = np.full(m, -1, dtype=np.int64) if collect else None
        jmin = 0
        for i in range(1, m):
            jmax = int(np.searchsorted(cands, cands[i] - delta, side="right")) - 1
            if jmax >= i:
                jmax = i - 1
            while jmin <= jmax and self.osc(jmin, i) > threshold:
                jmin += 1
            ok = jmin <= jmax and (prefix[jmax + 1] - prefix[jmin]) > 0
            reach[i] = ok
            prefix[i + 1] = prefix[i] + (1 if ok else 0)
            if ok and collect:
                window = np.nonzero(reach[jmin:jmax + 1])[0]
                parent[i] = jmin + window[-1]
        if collect:
            return bool(reach[self.last]), parent
        return bool(reach[self.last])


def _modulus(path: SamplePath, delta: float) -> ModulusResult:
    state = _ModulusState(path, delta)
    full = state.full()
    if full <= 0.0:
        return ModulusResult(0.0, state.resolution, (0.0, 1.0))
    lo, hi = 0.0, full
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if state.feasible(mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= max(1e-15, 1e-13 * full):
            break
    ok, parent = state.feasible(hi, collect=True)
    if not ok:                     # numerical edge: fall back to the full block
        return ModulusResult(full, state.resolution, (0.0, 1.0))
    idx = [state.last]
    while idx[-1] != 0:
        idx.append(int(parent[idx[-1]]))
    idx.reverse()
    value = max(state.osc(a, b) for a, b in zip(idx[:-1], idx[1:]))
    return ModulusResult(float(value), state.resolution,
                         tuple(float(state.cands[i]) for i in idx))
