import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from papdyn.errors import ModelValidationError, UnboundedError
from papdyn.expr import parse_signal
from papdyn.funcmodel import ActivationSpec
from papdyn.netmodel import (HypothesisOptions, NetModel, bar_bounds, c_star, check_hypotheses,
                             constants_m5, constants_m7, coupling_rows, lp_norm, rhs)
from papdyn.stability import f_decay


def scaled(model, alpha):
    """Every d, a, b coefficient multiplied by ``alpha``."""
    def mul(e):
        return e.__class__(e.ap_terms, e.erg_terms, e.scale / alpha, e.t_floor)

    def walk(x):
        return tuple(walk(v) for v in x) if isinstance(x, tuple) else mul(x)

    return model.replace(d=walk(model.d), a=walk(model.a), b=walk(model.b))


class TestBuild:
    def test_defaults(self):
        m = NetModel.build(2, c=["1", "1"])
        assert m.theta == 1.0 and m.min_delay == 1.0
        assert all(e.is_zero for row in m.d for e in row)
        assert np.array_equal(m.history(np.array([-0.5, 0.0])), np.zeros((2, 2)))

    def test_dimension_mismatch(self):
        with pytest.raises(ModelValidationError, match=r"d\[0\]"):
            NetModel.build(2, c=["1", "1"], d=[["0", "0", "0"], ["0", "0"]])

    def test_zero_delay_rejected(self):
        with pytest.raises(ModelValidationError):
            NetModel.build(1, c=["1"], tau=[[0.0]])

    def test_theta_is_largest_delay(self):
        m = NetModel.build(2, c=["1", "1"], sigma=[[1, 2.5], [1, 1]], nu_delay=[[0.5, 1], [1, 1]])
        assert m.theta == 2.5 and m.min_delay == 0.5


class TestRhs:
    def test_zero_state_zero_input(self, ex41):
        m = ex41.replace(I=tuple(parse_signal("0") for _ in range(2)))
        assert np.array_equal(rhs(m, 3.0, [0, 0], lambda s: np.zeros(2)), [0.0, 0.0])

    def test_scalar_input(self):
        m = NetModel.build(1, c=["1"], I=["1"])
        assert rhs(m, 0.0, [0.0], lambda s: np.zeros(1))[0] == 1.0

    def test_example_hand_expansion(self, ex41):
        # t = 0, x = 0.1 everywhere; nonzero entries at t = 0:
        # d = [[.1,.1],[.1,.3]], a = [[.2,0],[.5,.1]], b112 = .1, b212 = .3, I = (.8, .1)
        s = math.sin(0.1)
        expected = [-0.2 + 0.2 * s + 0.2 * s + 0.1 * s * s + 0.8,
                    -0.2 + 0.4 * s + 0.6 * s + 0.3 * s * s + 0.1]
        got = rhs(ex41, 0.0, [0.1, 0.1], lambda s_: np.full(2, 0.1))
        assert np.allclose(got, expected, rtol=0, atol=1e-15)

    def test_zero_state_gives_input(self, ex41):
        for t in (0.0, 1.3, 17.0):
            got = rhs(ex41, t, [0, 0], lambda s: np.zeros(2))
            assert np.array_equal(got, [ex41.I[0](t), ex41.I[1](t)])

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0, 50), st.floats(-2, 2), st.floats(-2, 2), st.floats(-3, 3))
    def test_linear_in_input(self, t, x1, x2, dI):
        m = NetModel.build(2, c=["2", "1 + 0.5*sin(t)"], I=["cos(t)", "0"],
                           a=[["0.3", "0"], ["sin(t)", "0.2"]], b=[[["0", "0.1"], ["0", "0"]]] * 2)
        m2 = m.replace(I=(parse_signal(f"cos(t) + {dI}"), parse_signal(f"{dI}")))
        hist = lambda s: np.array([np.sin(s), np.cos(s)])
        diff = rhs(m2, t, [x1, x2], hist) - rhs(m, t, [x1, x2], hist)
        assert np.allclose(diff, dI, atol=1e-12)

    def test_history_errors_propagate(self):
        m = NetModel.build(1, c=["1"], a=[["1"]])

        def hist(s):
            raise LookupError(s)

        with pytest.raises(LookupError):
            rhs(m, 0.0, [0.0], hist)


class TestConstants:
    def test_example_bars(self, ex41):
        bars = bar_bounds(ex41)
        assert bars.I[0] == pytest.approx(0.8, abs=1e-15)
        assert bars.a[1, 0] == pytest.approx(0.5, abs=1e-15)
        assert np.array_equal(c_star(ex41), [2.0, 2.0])

    def test_example_m7(self, ex41):
        k = constants_m7(ex41)
        assert k.L == pytest.approx(0.4, abs=1e-12)
        assert k.p1 == pytest.approx(0.75, abs=1e-12)
        assert k.q1 == pytest.approx(0.9, abs=1e-12)
        assert k.ball_radius == pytest.approx(1.2, abs=1e-12)

    def test_zero_coupling(self):
        m = NetModel.build(2, c=["1", "3"], I=["1", "0"])
        k = constants_m7(m)
        assert k.p1 == k.q1 == 0.0 and k.ball_radius == 0.0
        assert np.array_equal(bar_bounds(m).d, np.zeros((2, 2)))

    def test_scalar_toy(self, decay_toy):
        k = constants_m7(decay_toy)
        assert k.p1 == k.q1 == 0.5

    def test_nonpositive_decay(self):
        with pytest.raises(ModelValidationError):
            constants_m7(NetModel.build(1, c=["sin(t)"]))

    def test_scaling_law(self, ex41):
        base = constants_m7(ex41)
        for alpha in (0.5, 2.0, 3.0):
            k = constants_m7(scaled(ex41, alpha))
            assert k.p1 == pytest.approx(alpha * base.p1, rel=1e-12)
            assert k.q1 == pytest.approx(alpha * base.q1, rel=1e-12)
            assert k.L == base.L

    def test_p_not_above_q(self, ex41):
        p, q = coupling_rows(ex41)
        assert np.all(p <= q)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.data())
def test_q1_below_one_iff_rows_positive(n, data):
    amp = st.floats(0, 1.5)
    c = [str(data.draw(st.floats(0.5, 3))) for _ in range(n)]
    d = [[f"{data.draw(amp)}*sin(t)" for _ in range(n)] for _ in range(n)]
    a = [[f"{data.draw(amp)}*cos(t)" for _ in range(n)] for _ in range(n)]
    b = [[[f"{data.draw(amp)}" for _ in range(n)] for _ in range(n)] for _ in range(n)]
    m = NetModel.build(n, c=c, d=d, a=a, b=b)
    k = constants_m7(m)
    F0 = f_decay(m, 0.0)
    assert np.allclose(F0, k.c_star * (1 - k.q_rows))
    assert (k.q1 < 1) == bool(np.all(F0 > 0)) or math.isclose(k.q1, 1.0)
    assert k.p1 <= k.q1


class TestM5:
    def test_exp_weight_norm(self):
        assert lp_norm(parse_signal("exp(-abs(t))"), 2.0) == pytest.approx(1.0, rel=1e-9)

    def test_ap_weight_not_integrable(self):
        with pytest.raises(UnboundedError):
            lp_norm(parse_signal("1 + exp(-abs(t))"), 2.0)

    def _weighted(self, w):
        act = ActivationSpec("sine", lipschitz_weight=parse_signal(w))
        return NetModel.build(1, c=["2"], I=["1"], a=[["1"]], f_act=[act], g_act=[act], h_act=[act])

    def test_constants(self):
        k = constants_m5(self._weighted("exp(-abs(t))"), p=2.0)
        # denominator (q c*)^{1/q} = (2 * 2)^{1/2} = 2
        assert k.q == 2.0
        assert k.p0 == pytest.approx(0.5, rel=1e-9) and k.q0 == pytest.approx(0.5, rel=1e-9)

    def test_zero_weights(self):
        k = constants_m5(self._weighted("0"), p=3.0)
        assert k.p0 == k.q0 == 0.0


class TestChecker:
    def test_example_overall(self, ex41, rho1, rho2):
        rep = check_hypotheses(ex41, rho1, rho2)
        assert rep.overall and rep.variant == "M7"
        assert rep.q1 == pytest.approx(0.9, abs=1e-12)
        assert all(rep.verdicts[k].passed for k in ("M1", "M2", "M3", "M4", "M7", "M8"))
        assert rep.verdicts["M3"].numeric
        assert rep.verdicts["M5"].status == "n/a"

    def test_doubled_couplings(self, ex41, rho1, rho2):
        rep = check_hypotheses(scaled(ex41, 2.0), rho1, rho2)
        assert rep.q1 == pytest.approx(1.8, abs=1e-12)
        assert rep.verdicts["M8"].status == "fail" and not rep.overall

    def test_zero_decay(self, rho1, rho2):
        rep = check_hypotheses(NetModel.build(1, c=["0"]), rho1, rho2)
        assert rep.verdicts["M4"].status == "fail" and not rep.overall

    def test_report_serializes(self, ex41, rho1, rho2):
        import json
        d = check_hypotheses(ex41, rho1, rho2, HypothesisOptions()).to_dict()
        assert json.loads(json.dumps(d))["verdicts"]["M8"]["status"] == "pass"
