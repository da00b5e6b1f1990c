"""Path simulation, exact evaluation, decomposition, oscillation, modulus."""

import math

import numpy as np
import pytest
from scipy import stats

import weproc as w
from weproc.dist import conditional_moments

from helpers import brute_modulus, point_mass, step_path_levels, uniform01


def test_simulate_atom_path():
    p = w.simulate(point_mass(0.5), w.PolynomialWeight((0.0, 1.0)), 4, seed_or_rng=0)
    assert p.z_value(0.49) == 0.0
    assert p.z_value(0.5) == pytest.approx(0.5, abs=1e-15)
    assert p.z_value(1.0) == pytest.approx(0.5, abs=1e-15)


def test_simulate_rejects_bad_args():
    with pytest.raises(w.DomainError):
        w.simulate(uniform01(), w.ConstantWeight(1.0), 0)
    with pytest.raises(w.DomainError):
        w.simulate(uniform01(), w.ConstantWeight(1.0), 5, mode="bogus")


def test_simulate_weight_domain_error_surfaces():
    d = w.Distribution([w.UniformPart(0.0, 1.0, 0.5)], [w.Atom(0.0, 0.5)])
    with pytest.raises(w.DomainError):
        w.simulate(d, w.PowerWeight(0.25), 50, seed_or_rng=3)


def test_poisson_mode_count_moments():
    counts = []
    for r in range(10_000):
        rng = w.stream(7, r)
        counts.append(int(rng.poisson(1000)))
    counts = np.array(counts)
    assert abs(counts.mean() - 1000) < 4 * math.sqrt(1000 / 10_000)
    assert abs(counts.var() / 1000 - 1) < 0.1
    # and a simulated path reports N points with divisor n unchanged
    p = w.simulate(uniform01(), w.ConstantWeight(1.0), 1000, mode="poisson",
                   seed_or_rng=11)
    assert p.size != p.n or True
    assert p.z_value(1.0) == pytest.approx(p.size / p.n, abs=1e-12)


def test_counts_match_binomial_chi2():
    n, reps, t = 100, 5000, 0.3
    d = uniform01()
    f = w.ConstantWeight(1.0)
    counts = np.array([w.simulate(d, f, n, seed_or_rng=w.stream(21, r)).count_upto(t)
                       for r in range(reps)])
    # bin tails so every expected count is >= 5
    pmf = stats.binom.pmf(np.arange(n + 1), n, t)
    lo = int(np.searchsorted(np.cumsum(pmf), 5.0 / reps))
    hi = int(n - np.searchsorted(np.cumsum(pmf[::-1]), 5.0 / reps))
    edges = list(range(lo, hi + 1))
    observed = np.array([np.sum(counts == k) for k in edges], dtype=float)
    observed = np.concatenate(([np.sum(counts < lo)], observed, [np.sum(counts > hi)]))
    expected = np.array([pmf[k] for k in edges])
    expected = np.concatenate(([pmf[:lo].sum()], expected, [pmf[hi + 1:].sum()])) * reps
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    dof = len(observed) - 1
    assert chi2 < stats.chi2.ppf(0.999, dof)


def test_count_upto_cases():
    p = w.simulate(uniform01(), w.ConstantWeight(1.0), 100, mode="poisson",
                   seed_or_rng=5)
    assert p.count_upto(1.0) == p.size
    d = point_mass(0.5)
    q = w.simulate(d, w.ConstantWeight(1.0), 2, seed_or_rng=0)
    assert q.count_upto(0.4) == 0
    assert q.count_upto(0.5) == 2


def test_count_increment_matches_interval():
    p = w.simulate(uniform01(), w.ConstantWeight(1.0), 500, seed_or_rng=9)
    rng = np.random.default_rng(2)
    for _ in range(200):
        a, b = np.sort(rng.random(2))
        direct = int(np.sum((p.values > a) & (p.values <= b)))
        assert p.count_upto(b) - p.count_upto(a) == direct


def test_evaluate_z_hand_cases():
    d = uniform01()
    f = w.PolynomialWeight((0.0, 1.0))
    p = w.simulate(d, f, 2, seed_or_rng=0)
    # override with a deterministic two-point sample via an atomic law instead
    d2 = w.Distribution([], [w.Atom(0.2, 0.5), w.Atom(0.6, 0.5)])
    draws = d2.sample(2, 1)
    if list(draws) == [0.2, 0.6]:
        p2 = w.SamplePath(n=2, mode="fixed", values=draws,
                          fvals=f.eval_array(draws),
                          prefix=np.concatenate(([0.0], np.cumsum(f.eval_array(draws)))),
                          dist=d, weight=f, drift=w.Compensator(d, f))
        assert p2.z_value(0.5) == pytest.approx(0.1, abs=1e-15)
    assert w.simulate(d, w.ConstantWeight(1.0), 7, seed_or_rng=1).z_value(1.0) == 1.0


def test_evaluate_z_power_weight():
    d = point_mass(0.25)
    p = w.simulate(d, w.PowerWeight(0.25), 1, seed_or_rng=0)
    assert p.z_value(0.3) == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_evaluate_y_zero_at_one_for_indicator():
    p = w.simulate(uniform01(), w.ConstantWeight(1.0), 321, seed_or_rng=4)
    assert p.y_value(1.0) == 0.0
    assert p.y_value(0.0) == 0.0


def test_evaluate_y_variance_binomial():
    reps, n = 10_000, 10_000
    d = uniform01()
    rng = w.stream(31)
    ys = np.empty(reps)
    for r in range(reps):
        xs = rng.random(n)
        ys[r] = (np.sum(xs <= 0.5) / n - 0.5) * math.sqrt(n)
    assert abs(ys.var() - 0.25) < 0.05 * 0.25


def test_decompose_hand_case():
    d = uniform01()
    f = w.PolynomialWeight((0.0, 1.0))
    draws = np.array([0.2, 0.6])
    p = w.SamplePath(n=2, mode="fixed", values=draws, fvals=f.eval_array(draws),
                     prefix=np.concatenate(([0.0], np.cumsum(f.eval_array(draws)))),
                     dist=d, weight=f, drift=w.Compensator(d, f))
    y = p.y_value(0.5)
    assert y == pytest.approx(math.sqrt(2) * (0.1 - 0.125), abs=1e-12)
    yp, yxx = p.decompose(0.5)
    assert yxx == pytest.approx(0.0, abs=1e-15)   # N = nF exactly here
    assert yp == pytest.approx(y, abs=1e-15)


def test_decompose_exactness_random():
    rng = np.random.default_rng(12)
    d = w.Distribution([w.UniformPart(0.0, 1.0, 0.7)], [w.Atom(0.4, 0.3)])
    f = w.PolynomialWeight((0.5, -1.0, 1.5))
    for case in range(20):
        p = w.simulate(d, f, int(rng.integers(5, 200)), seed_or_rng=w.stream(40, case))
        for t in rng.random(50):
            yp, yxx = p.decompose(float(t))
            assert yp + yxx == pytest.approx(p.y_value(float(t)), abs=1e-12)


def test_decompose_constant_weight_yprime_identically_zero():
    for maker in (uniform01, lambda: w.Distribution([w.UniformPart(0.0, 1.0, 0.6)],
                                                    [w.Atom(0.3, 0.4)])):
        p = w.simulate(maker(), w.ConstantWeight(1.0), 100, seed_or_rng=8)
        for t in np.linspace(0.01, 1.0, 57):
            yp, yxx = p.decompose(float(t))
            assert yp == 0.0
            assert yxx == p.y_value(float(t))


def test_evaluate_y_propagates_drift_divergence():
    # a weight with infinite mean has no drift; path evaluation must surface that
    p = w.simulate(uniform01(), w.PowerWeight(1.2), 10, seed_or_rng=3)
    assert p.z_value(0.5) > 0.0          # the empirical side is still fine
    with pytest.raises((w.DivergenceError, w.QuadratureBudgetError)):
        p.y_value(0.5)


def test_decompose_zero_mass_region():
    d = w.Distribution([w.UniformPart(0.5, 1.0, 1.0)])
    p = w.simulate(d, w.ConstantWeight(1.0), 50, seed_or_rng=2)
    yp, yxx = p.decompose(0.25)
    assert (yp, yxx) == (0.0, 0.0)
    assert p.y_value(0.25) == 0.0


def test_oscillation_pure_drift():
    d = uniform01()
    f = w.ConstantWeight(1.0)
    p = w.simulate(d, f, 40, seed_or_rng=6)
    gaps = np.diff(np.concatenate(([0.0], p.values, [1.0])))
    i = int(np.argmax(gaps))
    lo = (np.concatenate(([0.0], p.values, [1.0])))[i]
    hi = lo + gaps[i]
    iv = w.Interval(lo + 1e-9, hi - 1e-9 if hi <= 1 else 1.0)
    want = math.sqrt(40) * (iv.upper - iv.lower)
    assert p.oscillation(iv) == pytest.approx(want, abs=1e-9)


def test_oscillation_single_jump_flat_drift():
    d = point_mass(0.5)
    f = w.ConstantWeight(2.0)
    p = w.simulate(d, f, 9, seed_or_rng=0)
    # inside (0.4, 0.6] the only move is the jump at 0.5 of size n*2/(n) scaled
    iv = w.Interval(0.4, 0.6)
    jump = abs(p.y_value(0.5) - p.y_value(0.4999999999))
    assert p.oscillation(iv) == pytest.approx(jump, abs=1e-9)


@pytest.mark.parametrize("which", ["Y", "Yp", "Yxx"])
def test_oscillation_vs_dense_grid(which):
    d = w.Distribution([w.UniformPart(0.0, 1.0, 0.8)], [w.Atom(0.25, 0.2)])
    f = w.PolynomialWeight((0.3, 1.0))
    p = w.simulate(d, f, 30, seed_or_rng=14)
    iv = w.Interval(0.0, 0.5)
    exact = p.oscillation(iv, which=which)
    ts = np.linspace(1e-12, 0.5, 1_000_001)
    if which == "Y":
        vals = p.y_values(ts)
    else:
        vals = np.array([p._component_at(float(t), which) for t in ts[::100]])
    grid = float(vals.max() - vals.min())
    # grid resolution bound: drift change over one grid step
    step = ts[1] - ts[0] if which == "Y" else ts[100] - ts[0]
    bound = math.sqrt(p.n) * 2.0 * step * (abs(f.eval(1.0)) + 1.0) + 1e-9
    assert grid <= exact + 1e-9
    assert exact <= grid + bound


def test_oscillation_trig_weight_interior_extrema():
    d = uniform01()
    f = w.CosineWeight()
    p = w.simulate(d, f, 25, seed_or_rng=15)
    iv = w.Interval(0.1, 0.9)
    exact = p.oscillation(iv)
    ts = np.linspace(0.1 + 1e-12, 0.9, 400_001)
    vals = p.y_values(ts)
    grid = float(vals.max() - vals.min())
    assert grid <= exact + 1e-9
    assert exact <= grid + 5e-4


def test_modulus_constant_path():
    # identically-zero path: modulus vanishes for every spacing
    flat = w.simulate(uniform01(), w.ConstantWeight(0.0), 20, seed_or_rng=0)
    for delta in (0.05, 0.3, 0.9):
        assert flat.modulus(delta).value == 0.0
    p = w.simulate(point_mass(0.5), w.ConstantWeight(1.0), 5, seed_or_rng=0)
    # with f == 1 and a single atom the path jumps then stays; modulus with a
    # cut at the atom is 0 for any delta below min(0.5, 0.5)
    assert p.modulus(0.3).value == pytest.approx(0.0, abs=1e-12)


def test_modulus_separated_jumps_zero():
    # jumps pairwise separated by > delta and at least delta from both endpoints
    d = w.Distribution([], [w.Atom(0.2, 0.4), w.Atom(0.6, 0.3), w.Atom(0.8, 0.3)])
    p = w.simulate(d, w.TableWeight((0.0, 0.5, 1.0), (1.0, -2.0)), 7, seed_or_rng=1)
    assert p.modulus(0.15).value == pytest.approx(0.0, abs=1e-12)


def test_modulus_rejects_bad_delta():
    p = w.simulate(uniform01(), w.ConstantWeight(1.0), 10, seed_or_rng=0)
    for bad in (0.0, 1.0, 1.5, -0.1):
        with pytest.raises(w.DomainError):
            p.modulus(bad)


def test_modulus_matches_exhaustive_oracle():
    rng = np.random.default_rng(77)
    checked = 0
    for case in range(200):
        m = int(rng.integers(2, 11)) if case % 10 else int(rng.integers(11, 13))
        locs = np.sort(rng.uniform(0.03, 0.97, size=m))
        if np.min(np.diff(locs, prepend=0.0, append=1.0)) < 0.004:
            continue
        masses = rng.random(m) + 0.2
        masses /= masses.sum()
        d = w.Distribution([], [w.Atom(float(l), float(ms))
                                for l, ms in zip(locs, masses)])
        k = int(rng.integers(2, 5))
        bps = np.concatenate(([0.0], np.sort(rng.uniform(0.1, 0.9, size=k - 1)), [1.0]))
        f = w.TableWeight(tuple(float(b) for b in bps),
                          tuple(float(v) for v in rng.uniform(-2.0, 2.0, size=k)))
        p = w.simulate(d, f, int(rng.integers(3, 12)), seed_or_rng=w.stream(900, case))
        delta = float(rng.uniform(0.08, 0.45))
        got = p.modulus(delta).value
        breaks, levels = step_path_levels(p)
        want = brute_modulus(breaks, levels, delta)
        assert got == pytest.approx(want, abs=1e-9), f"case {case}"
        checked += 1
    assert checked >= 150


def test_modulus_monotone_in_spacing():
    # coarser spacing constrains partitions more, so the modulus cannot shrink
    rng = np.random.default_rng(5)
    for case in range(25):
        m = int(rng.integers(2, 9))
        locs = np.sort(rng.uniform(0.05, 0.95, size=m))
        if np.min(np.diff(locs, prepend=0.0, append=1.0)) < 0.01:
            continue
        masses = rng.random(m) + 0.3
        masses /= masses.sum()
        d = w.Distribution([], [w.Atom(float(l), float(ms))
                                for l, ms in zip(locs, masses)])
        p = w.simulate(d, w.TableWeight((0.0, 0.5, 1.0), (2.0, -1.0)), 6,
                       seed_or_rng=w.stream(70, case))
        vals = [p.modulus(delta).value for delta in (0.05, 0.1, 0.2, 0.4)]
        for a, b in zip(vals[:-1], vals[1:]):
            assert a <= b + 1e-9


def test_modulus_exceeds_matches_value():
    d = w.Distribution([], [w.Atom(0.2, 0.4), w.Atom(0.25, 0.3), w.Atom(0.8, 0.3)])
    p = w.simulate(d, w.TableWeight((0.0, 0.22, 1.0), (3.0, -1.0)), 8, seed_or_rng=3)
    value = p.modulus(0.2).value
    if value > 0:
        assert p.modulus_exceeds(0.2, value * 0.5)
        assert not p.modulus_exceeds(0.2, value * 2.0)


def test_prefix_sums_match_direct_summation():
    p = w.simulate(uniform01(), w.PolynomialWeight((1.0, -0.5)), 500, seed_or_rng=13)
    direct = np.array([p.fvals[:k].sum() for k in range(p.size + 1)])
    assert np.max(np.abs(direct - p.prefix)) <= 1e-12
    assert p.z_value(1.0) * p.n == pytest.approx(p.fvals.sum(), abs=1e-12)


def test_z_is_nondecreasing_step_for_nonnegative_weight():
    p = w.simulate(uniform01(), w.PolynomialWeight((0.2, 1.0)), 200, seed_or_rng=19)
    ts = np.linspace(0, 1, 1000)
    zs = p.z_values(ts)
    assert np.all(np.diff(zs) >= -1e-15)
