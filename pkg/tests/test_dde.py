import math
from unittest import mock

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from papdyn import dde, kernels
from papdyn.errors import DivergenceError, NumericalError, StepSizeError
from papdyn.netmodel import NetModel, constants_m7, rhs

from conftest import LINEAR, const_history


def delayed_feedback():
    # x'(t) = -x(t - 1)
    return NetModel.build(1, c=["0"], a=[["-1"]], g_act=[LINEAR], history=["1"])


def steps_oracle(t):
    # method of steps with phi = 1
    return np.where(t <= 1, 1 - t, t * t / 2 - 2 * t + 1.5)


class TestIntegrate:
    def test_exponential_decay(self):
        tr = dde.integrate(NetModel.build(1, c=["1"], history=["1"]), 1.0, 1e-3)
        assert abs(tr.values[-1, 0] - math.exp(-1)) < 1e-8

    def test_order_factor(self):
        m = NetModel.build(1, c=["1"], history=["1"])
        e1, e2 = (abs(dde.integrate(m, 1.0, h).values[-1, 0] - math.exp(-1)) for h in (1e-2, 5e-3))
        assert 12 <= e1 / e2 <= 20

    def test_method_of_steps_endpoint(self):
        tr = dde.integrate(delayed_feedback(), 2.0, 1e-3)
        assert abs(tr.values[-1, 0] + 0.5) <= 1e-6

    def test_method_of_steps_sup(self):
        tr = dde.integrate(delayed_feedback(), 2.0, 1e-3)
        assert np.max(np.abs(tr.values[:, 0] - steps_oracle(tr.times))) <= 1e-6

    def test_zero_model(self):
        m = NetModel.build(2, c=["0", "0"], history=["sin(t)", "0.3"])
        tr = dde.integrate(m, 3.0, 1e-2)
        assert np.array_equal(tr.values[:, 0], np.zeros(len(tr.values)))
        assert np.all(tr.values[:, 1] == 0.3)

    def test_step_above_delay(self):
        m = NetModel.build(1, c=["1"], tau=[[0.5]])
        with pytest.raises(StepSizeError):
            dde.integrate(m, 2.0, 0.6)

    def test_divergence_reports_time(self):
        m = NetModel.build(1, c=["-400"], history=["1"])
        with pytest.raises(DivergenceError) as exc:
            dde.integrate(m, 10.0, 1e-2)
        assert 0 < exc.value.time < 10

    def test_residual_matches_rhs(self, ex41):
        tr = dde.integrate(ex41, 5.0, 1e-3)
        rng = np.random.default_rng(3)
        hist = lambda s: dde.sample(tr, s)
        for t in rng.uniform(1.5, 4.5, 10):
            eps = 1e-3
            fd = (dde.sample(tr, t + eps) - dde.sample(tr, t - eps)) / (2 * eps)
            assert np.allclose(fd, rhs(ex41, t, dde.sample(tr, t), hist), atol=1e-5)

    def test_bounded_from_ball(self, ex41):
        k = constants_m7(ex41)
        tr = dde.integrate(ex41, 50.0, 1e-2, history=const_history(1.0, -0.8))
        assert np.max(np.abs(tr.values)) <= k.L / (1 - k.p1) + 1.0


class TestSample:
    def test_node_exact(self, ex41):
        tr = dde.integrate(ex41, 2.0, 1e-2)
        assert np.array_equal(dde.sample(tr, tr.times), tr.values)

    def test_reproduces_cubic(self):
        h = 0.1
        t = np.arange(0, 11) * h
        tr = dde.Trajectory(0.0, h, (t ** 3)[:, None], (3 * t ** 2)[:, None],
                            history=lambda s: np.asarray(s)[:, None] ** 3 if np.ndim(s) else np.array([s ** 3]),
                            theta=1.0)
        mid = t[:-1] + h / 2
        assert np.allclose(dde.sample(tr, mid)[:, 0], mid ** 3, rtol=0, atol=1e-15)

    def test_history_side(self):
        m = NetModel.build(1, c=["1"], history=["0.3"], tau=[[2.0]])
        tr = dde.integrate(m, 1.0, 1e-2)
        assert dde.sample(tr, -1.0)[0] == 0.3

    def test_continuous_at_start(self, ex41):
        tr = dde.integrate(ex41, 1.0, 1e-3)
        assert np.allclose(dde.sample(tr, 1e-12), dde.sample(tr, 0.0), atol=1e-10)

    def test_out_of_range(self, ex41):
        tr = dde.integrate(ex41, 1.0, 1e-2)
        with pytest.raises(NumericalError):
            dde.sample(tr, -1.5)
        with pytest.raises(NumericalError):
            dde.sample(tr, 1.1)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0, 2))
    def test_within_cell_bounds(self, t):
        tr = dde.integrate(delayed_feedback(), 2.0, 1e-3)
        assert abs(dde.sample(tr, t)[0] - float(steps_oracle(np.array(t)))) <= 2e-6


@pytest.mark.skipif(kernels.compiled is None, reason="compiled extension not built")
def test_backends_agree(ex41):
    fast = dde.integrate(ex41, 3.0, 1e-2).values
    with mock.patch.object(kernels, "rk4_dde", kernels.pure.rk4_dde):
        slow = dde.integrate(ex41, 3.0, 1e-2).values
    assert np.array_equal(fast, slow)


def test_csv_format_and_determinism(tmp_path, ex41):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        dde.write_csv(dde.integrate(ex41, 1.0, 0.1), p)
    lines = paths[0].read_text().splitlines()
    assert lines[0] == "t,x_1,x_2" and len(lines) == 12
    assert lines[1].split(",")[1] == "1.0000000000000001e-01"
    assert paths[0].read_bytes() == paths[1].read_bytes()
