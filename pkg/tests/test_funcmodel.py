import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from papdyn.errors import DomainError, ExpressionError, ModelValidationError, UnboundedError
from papdyn.expr import compile_expression, parse_signal
from papdyn.funcmodel import (ActivationSpec, APTerm, ErgTerm, SignalExpr, decompose,
                              evaluate, inf_on, sup_abs_bound)

EX = "(2*sin(t) + exp(-t))/10"


class TestEvaluate:
    def test_at_zero(self):
        assert evaluate(parse_signal(EX), 0.0) == pytest.approx(0.1, abs=1e-15)

    def test_at_half_pi(self):
        # (2 + e^{-pi/2}) / 10
        assert evaluate(parse_signal(EX), math.pi / 2) == pytest.approx(0.2207879576350762, rel=1e-14)

    def test_zero_expression(self):
        assert evaluate(SignalExpr.zero(), 123.4) == 0.0

    def test_vectorized_matches_scalar(self):
        e = parse_signal("3*cos(sqrt(2)*t) + exp(-abs(t)) + 1/(1+t*t)")
        t = np.linspace(-5, 5, 11)
        assert np.allclose(evaluate(e, t), [evaluate(e, float(x)) for x in t], rtol=0, atol=1e-15)

    def test_below_floor_raises(self):
        with pytest.raises(DomainError):
            evaluate(parse_signal(EX), -0.5)

    def test_floor_free_expression_has_no_floor(self):
        assert parse_signal("sin(t) + exp(-abs(t))").domain_floor == -math.inf


class TestBounds:
    def test_amplitude_sum(self):
        assert sup_abs_bound(parse_signal("(2*cos(sqrt(2)*t) + exp(-t))/10")) == pytest.approx(0.3, abs=1e-15)

    def test_sin_on_line(self):
        assert sup_abs_bound(parse_signal("sin(t)"), -math.inf) == 1.0

    def test_zero(self):
        assert sup_abs_bound(SignalExpr.zero()) == 0.0

    def test_exp_decay_unbounded_on_line(self):
        with pytest.raises(UnboundedError):
            sup_abs_bound(parse_signal("exp(-t)"), -math.inf)

    def test_refine_dominates(self):
        bound, est = sup_abs_bound(parse_signal(EX), refine=True)
        assert est <= bound

    @pytest.mark.parametrize("text,expected", [("2", 2.0), ("3 + sin(t)", 2.0), ("sin(t)", -1.0)])
    def test_inf(self, text, expected):
        assert inf_on(parse_signal(text)) == expected

    def test_negative_decay_lowers_inf(self):
        assert inf_on(parse_signal("2 - exp(-abs(t))")) == pytest.approx(1.0)


class TestDecompose:
    def test_structural_split(self):
        ap, erg = decompose(parse_signal(EX))
        assert ap.ap_terms == (APTerm(2.0, "sin", 1.0, 0.0),) and not ap.erg_terms
        assert erg.erg_terms == (ErgTerm(1.0, "exp_decay"),) and not erg.ap_terms
        assert ap.scale == erg.scale == 10.0

    def test_pure_ap(self):
        e = parse_signal("sin(t) + cos(2*t)")
        ap, erg = decompose(e)
        assert ap == e and erg.is_zero

    def test_pure_ergodic(self):
        ap, erg = decompose(parse_signal("exp(-abs(t))"))
        assert ap.is_zero and evaluate(erg, 0.7) == pytest.approx(math.exp(-0.7))


class TestGrammar:
    @pytest.mark.parametrize("text", ["t", "sin(t)*cos(t)", "exp(t)", "sin(t*t)", "log(t)",
                                      "__import__('os')", "1/t", "sin(t"])
    def test_rejects_outside_shape(self, text):
        with pytest.raises(ExpressionError):
            parse_signal(text)

    def test_pi_and_sqrt(self):
        e = parse_signal("sin(pi*t/2) + sqrt(4)")
        assert evaluate(e, 1.0) == pytest.approx(3.0)

    def test_shifted_exp(self):
        # exp(-t + 1) = e * exp(-t)
        assert evaluate(parse_signal("exp(-t + 1)"), 2.0) == pytest.approx(math.exp(-1))

    def test_general_expression_compiles(self):
        f = compile_expression("exp(sin(t))")
        assert f(0.0) == pytest.approx(1.0)
        assert np.allclose(f(np.array([0.0, math.pi / 2])), [1.0, math.e])

    def test_to_text_round_trip(self):
        e = parse_signal("(3*sin(sqrt(3)*t + 0.5) - 2 + exp(-t) + 4/(1+t*t))/7")
        assert parse_signal(e.to_text()) == e


class TestActivations:
    @pytest.mark.parametrize("shape", ["sine", "tanh", "piecewise_linear_saturation"])
    def test_intrinsic_constants(self, shape):
        a = ActivationSpec(shape)
        assert a.lipschitz_const == 1.0 and a.bound_const == 1.0
        assert a(0.0) == 0.0

    def test_custom_table(self):
        a = ActivationSpec("custom_table", table=[(-2, -1), (0, 0), (1, 3)])
        assert a.lipschitz_const == 3.0 and a.bound_const == 3.0
        assert a(0.5) == pytest.approx(1.5) and a(5.0) == 3.0

    def test_declared_below_intrinsic_rejected(self):
        with pytest.raises(ModelValidationError):
            ActivationSpec("tanh", lipschitz_const=0.5)

    def test_nonvanishing_table_rejected(self):
        with pytest.raises(ModelValidationError):
            ActivationSpec("custom_table", table=[(-1, 1), (1, 2)])

    @pytest.mark.parametrize("spec", [ActivationSpec("sine"), ActivationSpec("tanh"),
                                      ActivationSpec("piecewise_linear_saturation", saturation=2.5),
                                      ActivationSpec("custom_table", table=[(-1, -0.5), (0, 0), (2, 1.5)])])
    def test_sampled_quotients_within_declared(self, spec):
        assert spec.sampled_lipschitz() <= spec.lipschitz_const * (1 + 1e-9)
        x = np.linspace(-50, 50, 10001)
        assert np.max(np.abs(spec(x))) <= spec.bound_const


ap_terms = st.builds(APTerm, st.floats(-5, 5), st.sampled_from(["sin", "cos", "const"]),
                     st.floats(0.1, 4), st.floats(-3, 3))
erg_terms = st.builds(ErgTerm, st.floats(-5, 5),
                      st.sampled_from(["exp_decay", "exp_abs_decay", "rational_decay"]))
signals = st.builds(SignalExpr, st.lists(ap_terms, max_size=4), st.lists(erg_terms, max_size=3),
                    st.floats(0.5, 20))


@settings(max_examples=80, deadline=None)
@given(signals, st.lists(st.floats(0, 500), min_size=1, max_size=20))
def test_bounds_enclose_values(e, ts):
    v = evaluate(e, np.array(ts))
    tol = 1e-12 * (1 + sup_abs_bound(e))
    assert np.all(np.abs(v) <= sup_abs_bound(e) + tol)
    assert np.all(v >= inf_on(e) - tol)


@settings(max_examples=60, deadline=None)
@given(signals)
def test_decompose_lossless(e):
    t = np.linspace(0, 50, 2001)
    ap, erg = decompose(e)
    err = np.max(np.abs(evaluate(ap, t) + evaluate(erg, t) - evaluate(e, t)))
    assert err <= 1e-12 * (1 + sup_abs_bound(e))


@settings(max_examples=60, deadline=None)
@given(signals)
def test_to_text_round_trip_property(e):
    back = parse_signal(e.to_text())
    t = np.linspace(0, 20, 201)
    assert np.allclose(evaluate(back, t), evaluate(e, t), rtol=1e-12, atol=1e-12)


def test_ap_part_has_almost_periods():
    # sin t + sin(sqrt(2) t): search shifts tau for which both phases nearly return
    g = parse_signal("sin(t) + sin(sqrt(2)*t)")
    taus = np.arange(1.0, 20000.0, 1e-3)
    miss = (np.abs(((taus + np.pi) % (2 * np.pi)) - np.pi)
            + np.abs(((np.sqrt(2) * taus + np.pi) % (2 * np.pi)) - np.pi))
    tau = taus[np.argmin(miss)]
    t = np.linspace(-100, 100, 20001)
    assert np.max(np.abs(evaluate(g, t + tau) - evaluate(g, t))) < 1e-3
