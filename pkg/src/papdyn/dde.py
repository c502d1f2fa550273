"""Method-of-steps integration with dense cubic Hermite output."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .errors import DivergenceError, NumericalError, StepSizeError
from .netmodel import NetModel, coefficients_at

SNAP = 1e-9


@dataclass
class Trajectory:
    """Uniform-grid solution with node derivatives and a history fallback.

    ``values[k]`` and ``derivs[k]`` belong to ``t0 + k * step``; times at or
    before ``t0`` are answered by ``history``.
    """

    t0: float
    step: float
    values: np.ndarray
    derivs: np.ndarray
    history: Callable
    theta: float

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.step * np.arange(len(self.values))

    @property
    def t_end(self) -> float:
        return self.t0 + self.step * (len(self.values) - 1)

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def sample(self, t):
        return sample(self, t)


def sample(traj: Trajectory, t):
    """State at scalar or array ``t``; shape ``(n,)`` or ``(len(t), n)``."""
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    h = traj.step
    lo = traj.t0 - traj.theta - SNAP * h
    if np.any(tt < lo) or np.any(tt > traj.t_end + SNAP * h):
        raise NumericalError(f"sample time outside [{traj.t0 - traj.theta}, {traj.t_end}]")
    out = np.empty((tt.size, traj.n))
    past = tt <= traj.t0
    if np.any(past):
        out[past] = np.asarray(traj.history(tt[past])).reshape(-1, traj.n)
    fut = ~past
    if np.any(fut):
        s = (tt[fut] - traj.t0) / h
        j = np.floor(s).astype(np.int64)
        th = s - j
        up = th > 1.0 - SNAP
        j[up] += 1
        th[up] = 0.0
        th[th < SNAP] = 0.0
        last = len(traj.values) - 1
        at_end = j >= last
        j[at_end] = last - 1
        th[at_end] = 1.0
        th = th[:, None]
        th2, th3 = th * th, th * th * th
        y0, y1 = traj.values[j], traj.values[j + 1]
        m0, m1 = traj.derivs[j], traj.derivs[j + 1]
        val = ((2 * th3 - 3 * th2 + 1) * y0 + (th3 - 2 * th2 + th) * h * m0
               + (-2 * th3 + 3 * th2) * y1 + (th3 - th2) * h * m1)
        exact = (th[:, 0] == 0.0)
        val[exact] = y0[exact]
        out[fut] = val
    return out[0] if scalar else out


def _activation_tables(model: NetModel):
    n = model.n
    code = np.zeros((3, n), dtype=np.int_)
    param = np.zeros((3, n))
    start = np.zeros((3, n), dtype=np.int_)
    length = np.zeros((3, n), dtype=np.int_)
    xs, ys = [0.0], [0.0]
    for k, group in enumerate((model.f_act, model.g_act, model.h_act)):
        for j, spec in enumerate(group):
            code[k, j] = spec.code
            param[k, j] = spec.saturation
            if spec.shape == "custom_table":
                start[k, j], length[k, j] = len(xs), len(spec.table)
                xs.extend(p[0] for p in spec.table)
                ys.extend(p[1] for p in spec.table)
    return code, param, np.array(xs), np.array(ys), start, length


def integrate(model: NetModel, t_end: float, step: float, t0: float = 0.0,
              history: Callable | None = None) -> Trajectory:
    """Classical RK4 on the uniform grid ``t0, t0 + step, ..., t_end``.

    ``history`` (default ``model.history``) maps a time or an array of times
    in ``[t0 - theta, t0]`` to states. The step must not exceed the smallest
    delay, so every delayed lookup lands on the history or on an already
    completed cell.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if step > model.min_delay * (1 + 1e-12):
        raise StepSizeError(f"step {step} exceeds the smallest delay {model.min_delay}")
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    history = model.history if history is None else history
    nsteps = int(math.ceil((t_end - t0) / step - 1e-9))
    h = float(step)
    times = t0 + 0.5 * h * np.arange(2 * nsteps + 1)
    coef = coefficients_at(model, times)

    tau, sigma, nud = model.delay_arrays
    delays = np.unique(np.concatenate([tau.ravel(), sigma.ravel(), nud.ravel()]))
    idx = [np.searchsorted(delays, arr) for arr in (tau, sigma, nud)]
    hist = np.full((len(delays), times.size, model.n), np.nan)
    offs = 0.5 * h * np.arange(times.size)
    for q, D in enumerate(delays):
        sel = offs - D <= SNAP * h
        if np.any(sel):
            hist[q, sel] = np.asarray(history(times[sel] - D)).reshape(-1, model.n)
    x0 = np.asarray(history(np.array([t0]))).reshape(model.n)
    code, param, tab_x, tab_y, start, length = _activation_tables(model)

    values = np.zeros((nsteps + 1, model.n))
    derivs = np.zeros((nsteps + 1, model.n))
    bad = kernels.rk4_dde(h, x0, coef.c, coef.I, coef.d, coef.a, coef.b, code, param,
                          tab_x, tab_y, start, length, delays, idx[0], idx[1], idx[2],
                          hist, values, derivs)
    if bad >= 0:
        raise DivergenceError(f"non-finite state at t = {t0 + bad * h}", time=t0 + bad * h)
    return Trajectory(float(t0), h, values, derivs, history, model.theta)


def write_csv(traj: Trajectory, path) -> None:
    """``t,x_1,...,x_n`` with 17 significant digits per field."""
    header = "t," + ",".join(f"x_{i + 1}" for i in range(traj.n))
    rows = np.column_stack([traj.times, traj.values])
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.16e}" for v in row) + "\n")
