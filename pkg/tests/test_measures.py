import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import i0

from papdyn.errors import InvalidMeasureError
from papdyn.expr import compile_expression, parse_signal
from papdyn.measures import (WeightedMeasure, check_m1, check_m2, ergodic_remainder,
                             ergodicity_trend, in_class_m, mass)
from papdyn.netmodel import lp_norm
from papdyn.quadrature import integrate, robust_loglog_slope, simpson


class TestQuadrature:
    def test_simpson_polynomial_exact(self):
        assert simpson(lambda t: t ** 3 - 2 * t, 0.0, 2.0) == pytest.approx(0.0, abs=1e-14)

    def test_breakpoints(self):
        assert integrate(np.abs, -1.0, 2.0, breakpoints=(0.0,)) == pytest.approx(2.5, rel=1e-12)

    def test_theil_sen_power_law(self):
        x = np.array([5, 10, 20, 40, 80.0])
        assert robust_loglog_slope(x, 3 / x) == pytest.approx(-1.0)

    def test_theil_sen_all_zero_is_nan(self):
        assert math.isnan(robust_loglog_slope([1, 2, 3], [0, 0, 0]))


class TestMass:
    @pytest.mark.parametrize("r", [0.5, 3.0, 40.0])
    def test_lebesgue(self, lebesgue, r):
        assert mass(lebesgue, -r, r) == 2 * r

    def test_rho1_bessel(self, rho1):
        # integral of e^{sin t} over one period is 2 pi I0(1)
        assert mass(rho1, -math.pi, math.pi) == pytest.approx(2 * math.pi * i0(1.0), rel=1e-9)

    def test_rho2_closed_form(self, rho2):
        assert mass(rho2, -1.0, 1.0) == pytest.approx((1 - math.exp(-1)) + 1, rel=1e-10)

    def test_negative_density_rejected(self):
        with pytest.raises(InvalidMeasureError):
            mass(WeightedMeasure.from_density("sin(t)"), 0.0, 6.0)

    def test_negative_constant_rejected(self):
        with pytest.raises(InvalidMeasureError):
            mass(WeightedMeasure.from_density("-1"), 0.0, 1.0)

    @pytest.mark.parametrize("r", [1.0, 10.0, 100.0])
    def test_rho1_two_sided_bound(self, rho1, r):
        assert 2 * r / math.e <= mass(rho1, -r, r) <= 2 * math.e * r

    def test_monotone_in_radius(self, rho1):
        ms = [mass(rho1, -r, r) for r in (1, 2, 4, 8, 16)]
        assert all(b > a for a, b in zip(ms, ms[1:]))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-30, 30), min_size=3, max_size=3, unique=True))
def test_mass_additive(pts):
    a, b, c = sorted(pts)
    m = WeightedMeasure.two_piece("exp(t)", "exp(sin(t))")
    whole = mass(m, a, c)
    assert whole == pytest.approx(mass(m, a, b) + mass(m, b, c), rel=1e-9, abs=1e-12)


class TestRemainder:
    def test_exp_abs_closed_form(self, lebesgue):
        f = parse_signal("exp(-abs(t))")
        assert ergodic_remainder(f, lebesgue, lebesgue, 10.0) == pytest.approx((1 - math.exp(-10)) / 10, rel=1e-9)

    def test_normalization(self, rho1):
        one = parse_signal("1")
        assert ergodic_remainder(one, rho1, rho1, 7.0) == pytest.approx(1.0, rel=1e-9)

    def test_zero(self, rho1, rho2):
        assert ergodic_remainder(parse_signal("0"), rho1, rho2, 5.0) == 0.0

    def test_floor_restricts_domain(self, lebesgue):
        # exp(-t) on t >= 0 only: (1 - e^{-z}) / (2z)
        f = parse_signal("exp(-t)")
        assert ergodic_remainder(f, lebesgue, lebesgue, 4.0) == pytest.approx((1 - math.exp(-4)) / 8, rel=1e-9)

    @pytest.mark.parametrize("alpha", [-3.0, 0.25, 7.0])
    def test_homogeneous(self, rho1, rho2, alpha):
        f = parse_signal("exp(-abs(t)) + 1/(1+t*t)")
        g = parse_signal(f"{alpha}*exp(-abs(t)) + {alpha}/(1+t*t)")
        assert ergodic_remainder(g, rho1, rho2, 20.0) == pytest.approx(
            abs(alpha) * ergodic_remainder(f, rho1, rho2, 20.0), rel=1e-8)


class TestTrend:
    def test_decaying_passes(self, lebesgue):
        v = ergodicity_trend(parse_signal("exp(-abs(t))"), lebesgue, lebesgue)
        assert v.passed and v.trend_slope == pytest.approx(-1.0, abs=0.02)

    def test_abs_sin_fails(self, lebesgue):
        v = ergodicity_trend(compile_expression("abs(sin(t))"), lebesgue, lebesgue)
        assert not v.passed and v.remainders[-1] == pytest.approx(2 / math.pi, abs=0.02)

    def test_zero_passes(self, rho1, rho2):
        assert ergodicity_trend(parse_signal("0"), rho1, rho2).passed

    def test_schedule_validated(self, lebesgue):
        with pytest.raises(ValueError):
            ergodicity_trend(parse_signal("0"), lebesgue, lebesgue, [1, 2, 3])


class TestM1M2:
    def test_rho1_within_e_squared(self, rho1):
        r = check_m1(rho1)
        assert r.passed and r.beta_bound <= math.e ** 2

    def test_rho1_single_shift_exact(self, rho1):
        # sup of sin(t + pi) - sin(t) = 2
        assert check_m1(rho1, [math.pi]).beta_bound == pytest.approx(math.e ** 2, rel=1e-9)

    def test_lebesgue(self, lebesgue):
        assert check_m1(lebesgue).beta_bound == 1.0

    def test_rho2_unit_shift(self, rho2):
        assert check_m1(rho2, [1.0]).beta_bound == pytest.approx(math.e, rel=1e-9)

    def test_gaussian_ratio_unbounded(self):
        r = check_m1(WeightedMeasure.from_density("exp(-t*t)"), [1.0])
        assert not r.passed and "unbounded" in r.diagnostic

    def test_m2_example(self, rho1, rho2):
        assert check_m2(rho1, rho2).passed

    def test_m2_identical(self, rho1):
        r = check_m2(rho1, rho1)
        assert r.passed and np.allclose(r.ratios, 1.0)

    def test_m2_finite_nu_diverges(self, lebesgue):
        nu = WeightedMeasure.from_density("exp(-abs(t))")
        assert not check_m2(lebesgue, nu).passed
        assert not in_class_m(nu).passed

    def test_class_m(self, rho1, rho2):
        assert in_class_m(rho1).passed and in_class_m(rho2).passed


class _Floored:
    """Vectorized callable declared on t >= floor."""

    def __init__(self, fn, floor):
        self.fn, self.domain_floor = fn, floor

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))


def test_product_closure(rho1, rho2):
    y = parse_signal("(2*sin(t) + exp(-t))/10")
    z = parse_signal("(cos(sqrt(2)*t) + exp(-t))/10")
    y_ap, z_ap = y.__class__(y.ap_terms, (), y.scale), z.__class__(z.ap_terms, (), z.scale)
    for part in (y, z):
        assert ergodicity_trend(part.__class__((), part.erg_terms, part.scale), rho1, rho2).passed
    rest = _Floored(lambda t: y(t) * z(t) - y_ap(t) * z_ap(t), 0.0)
    assert ergodicity_trend(rest, rho1, rho2).passed


def test_composition_closure_holder_bound(rho1, rho2):
    p = q = 2.0
    w = parse_signal("exp(-abs(t))")
    y_ap, y_erg = parse_signal("sin(t)"), parse_signal("exp(-abs(t))")
    theta = 1.0
    diff = lambda t: w(t) * (np.sin(y_ap(t - theta) + y_erg(t - theta)) - np.sin(y_ap(t - theta)))
    w_norm = lp_norm(w, p, rho1)
    for z in (5.0, 10.0, 20.0, 40.0, 80.0, 160.0):
        mu_z, nu_z = rho1.mass(-z, z), rho2.mass(-z, z)
        bound = 1.0 * w_norm * (mu_z / nu_z) ** (1 / q) / nu_z ** (1 / p)
        assert ergodic_remainder(diff, rho1, rho2, z) <= bound
