"""Weight families and the drift t -> E(f(X) 1_{X <= t})."""

import numpy as np
import pytest

import weproc as w
from weproc.dist import conditional_moments

from helpers import point_mass, uniform01


def test_constant_eval():
    assert w.ConstantWeight(1.0).eval(0.7) == 1.0


def test_power_eval():
    f = w.PowerWeight(0.25)
    assert f.eval(1.0) == 1.0
    assert f.eval(1.0 / 16.0) == pytest.approx(2.0, abs=1e-14)


def test_power_undefined_at_zero():
    with pytest.raises(w.DomainError):
        w.PowerWeight(0.25).eval(0.0)
    with pytest.raises(w.DomainError):
        w.PowerWeight(0.25).eval_array(np.array([0.5, 0.0]))


def test_table_left_continuous():
    f = w.TableWeight((0.0, 0.5, 1.0), (3.0, -3.0))
    assert f.eval(0.5) == 3.0     # the breakpoint belongs to the left piece
    assert f.eval(0.50001) == -3.0
    assert f.eval(0.0) == 3.0


def test_polynomial_eval_matches_numpy():
    coeffs = (0.5, -1.0, 2.0, 0.25)
    f = w.PolynomialWeight(coeffs)
    xs = np.linspace(0, 1, 17)
    want = sum(c * xs ** k for k, c in enumerate(coeffs))
    assert np.allclose(f.eval_array(xs), want, atol=1e-14)


def test_trig_closed_forms_match_quadrature():
    d = uniform01()
    for f in (w.CosineWeight(), w.SineWeight()):
        closed = conditional_moments(d, f, w.Interval(0.1, 0.8))
        numeric = conditional_moments(d, f, w.Interval(0.1, 0.8), method="quadrature")
        assert closed[0] == pytest.approx(numeric[0], abs=1e-9)
        assert closed[1] == pytest.approx(numeric[1], abs=1e-9)


def test_compensator_uniform_identity():
    assert w.compensator(uniform01(), w.ConstantWeight(1.0), 0.4) == pytest.approx(0.4, abs=1e-15)


def test_compensator_single_atom():
    d = point_mass(0.5)
    f = w.PolynomialWeight((0.0, 0.0, 1.0))
    assert w.compensator(d, f, 0.49) == 0.0
    assert w.compensator(d, f, 0.5) == pytest.approx(0.25, abs=1e-15)


def test_compensator_power_weight_oracle_value():
    # integral_0^0.5 x^{-1/4} dx = (4/3) 0.5^{3/4}
    z = w.compensator(uniform01(), w.PowerWeight(0.25), 0.5)
    assert z == pytest.approx(0.7928047433351474, abs=1e-12)
    assert z == pytest.approx((4.0 / 3.0) * 0.5 ** 0.75, abs=1e-12)


def test_compensator_total_is_mean():
    comp = w.Compensator(uniform01(), w.PowerWeight(0.25))
    assert comp.total() == pytest.approx(4.0 / 3.0, abs=1e-12)


def test_compensator_monotone_for_nonnegative_weight():
    d = w.Distribution([w.UniformPart(0.0, 1.0, 0.8)], [w.Atom(0.25, 0.2)])
    comp = w.Compensator(d, w.PolynomialWeight((0.5, 1.0)))
    ts = np.linspace(0, 1, 1000)
    vals = comp.batch(ts)
    assert np.all(np.diff(vals) >= -1e-15)


def test_compensator_interval_identity():
    d = w.Distribution([w.UniformPart(0.0, 1.0, 0.6)],
                       [w.Atom(0.0, 0.1), w.Atom(0.6, 0.3)])
    f = w.PolynomialWeight((1.0, 1.0))
    for t in (0.2, 0.6, 0.61, 1.0):
        mass = d.interval_mass(w.Interval(0.0, t))
        mean, _ = conditional_moments(d, f, w.Interval(0.0, t))
        atom0 = 0.1 * f.eval(0.0)
        assert w.compensator(d, f, t) == pytest.approx(mass * mean + atom0, abs=1e-10)


def test_compensator_cadlag_at_atom():
    d = w.Distribution([w.UniformPart(0.0, 1.0, 0.5)], [w.Atom(0.6, 0.5)])
    f = w.PolynomialWeight((0.0, 1.0))
    comp = w.Compensator(d, f)
    jump = comp(0.6) - comp.left_limit(0.6)
    assert jump == pytest.approx(0.5 * 0.6, abs=1e-12)
    # right continuity: approach from above converges to the value at the atom
    assert comp(0.6 + 1e-9) == pytest.approx(comp(0.6), abs=1e-8)
    # left limit: approach from below converges to the left limit
    assert comp(0.6 - 1e-9) == pytest.approx(comp.left_limit(0.6), abs=1e-8)


def test_square_integrability_flag_consistent():
    f = w.PowerWeight(0.25, square_integrable=True)
    _, var = conditional_moments(uniform01(), f, w.Interval(0.0, 1.0))
    assert np.isfinite(var)
    g = w.PowerWeight(0.75)
    assert g.square_integrable is None
    with pytest.raises((w.DivergenceError, w.QuadratureBudgetError)):
        conditional_moments(uniform01(), g, w.Interval(0.0, 1.0))
