"""The integral operator Gamma, its base point phi0, and Picard iteration.

For a candidate ``phi`` on a finite window ``[t_lo, t_hi]``::

    (Gamma phi)_i(t) = int_{t - W_i}^{t} exp(-int_s^t c_i(u) du) F_i(s) ds

where ``F_i`` collects the coupling terms evaluated along ``phi`` plus the
input ``I_i``.  ``W_i`` is chosen so the discarded tail is below
``eps_tail``.  Before ``t_lo`` candidates, ``F`` and ``c`` are continued by
their values at ``t_lo``.
Results are compared only on ``[t_lo + W_max, t_hi]``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ModelValidationError, NumericalError
from .netmodel import NetModel, bar_bounds, c_star, coefficients_at, constants_m7

log = logging.getLogger(__name__)

DEFAULT_WINDOW = (-40.0, 40.0)


@dataclass
class CandidateFunction:
    """Samples of an R^n-valued function on ``t_lo + k * step``."""

    t_lo: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise NumericalError("candidate has non-finite values")

    @property
    def times(self) -> np.ndarray:
        return self.t_lo + self.step * np.arange(len(self.values))

    @property
    def t_hi(self) -> float:
        return self.t_lo + self.step * (len(self.values) - 1)

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def sup_norm(self, t_from: float | None = None) -> float:
        v = self.values if t_from is None else self.values[self.times >= t_from - 1e-9 * self.step]
        return float(np.max(np.abs(v))) if v.size else 0.0

    def sample(self, s):
        """Cubic Lagrange interpolation, constant continuation below ``t_lo``."""
        scalar = np.ndim(s) == 0
        ss = np.atleast_1d(np.asarray(s, dtype=float))
        idx, w = _stencil((ss - self.t_lo) / self.step, len(self.values) - 1)
        out = np.einsum("mk,mkn->mn", w, self.values[idx])
        return out[0] if scalar else out


def _stencil(u, last):
    """4-point Lagrange stencil for grid coordinates ``u`` on nodes ``0..last``."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, float(last))
    j = np.floor(u + 1e-9).astype(np.int64)
    base = np.clip(j - 1, 0, last - 3)
    x = u - base
    w = np.stack([-(x - 1) * (x - 2) * (x - 3) / 6.0,
                  x * (x - 2) * (x - 3) / 2.0,
                  -x * (x - 1) * (x - 3) / 2.0,
                  x * (x - 1) * (x - 2) / 6.0], axis=-1)
    # exact node hits keep their sample value bit for bit
    node = np.abs(u - np.round(u)) < 1e-9
    if np.any(node):
        w[node] = 0.0
        w[node, np.round(u[node]).astype(np.int64) - base[node]] = 1.0
    idx = base[:, None] + np.arange(4)[None, :]
    return idx, w


def _windows(bound, cs, eps_tail, step):
    """Truncation windows (in whole steps) with tail ``bound/c * exp(-c W) <= eps_tail``."""
    out = []
    for fb, c in zip(bound, cs):
        if fb <= 0:
            out.append(0)
            continue
        W = max(0.0, math.log(fb / (c * eps_tail)) / c)
        out.append(int(math.ceil(W / step - 1e-9)))
    return np.array(out, dtype=np.int64)


def f_bound(model: NetModel) -> np.ndarray:
    """Uniform bound of ``|F_i|`` over all candidates."""
    bars = bar_bounds(model)
    _, _, _, Mf, Mg, Mh = model.lipschitz()
    return (bars.I + bars.d @ Mf + bars.a @ Mg + np.einsum("ijl,j,l->i", bars.b, Mh, Mh))


def default_window(model: NetModel, window=None):
    """``[t_lo, t_hi]``, shifted right to start at the model's domain floor if needed."""
    t_lo, t_hi = window or DEFAULT_WINDOW
    floor = model.domain_floor
    if t_lo < floor:
        t_hi, t_lo = floor + (t_hi - t_lo), floor
    return float(t_lo), float(t_hi)


class GammaOperator:
    """Discretized Gamma on a fixed window; precomputes everything independent of phi.

    Kernel integrals use composite Simpson on the grid refined four times;
    ``int c`` is a prefix Simpson sum on the grid refined eight times.
    """

    def __init__(self, model: NetModel, t_lo: float, t_hi: float, step: float,
                 eps_tail: float = 1e-10):
        cs = c_star(model)
        if not np.all(cs > 0):
            raise ModelValidationError(f"(M.4) fails: c* = {cs.tolist()}")
        if t_lo < model.domain_floor:
            raise ModelValidationError(f"window start {t_lo} below domain floor {model.domain_floor}")
        nsteps = int(round((t_hi - t_lo) / step))
        if nsteps < 4 or abs(nsteps * step - (t_hi - t_lo)) > 1e-6 * step:
            raise ValueError("window length must be a multiple of step with >= 4 steps")
        self.model, self.t_lo, self.step, self.nsteps = model, t_lo, step, nsteps
        self.c_star = cs
        n, N, h = model.n, nsteps, step
        eighth = t_lo + (h / 8.0) * np.arange(8 * N + 1)
        c8 = coefficients_at(model, eighth).c
        incr = (h / 4.0) / 6.0 * (c8[:, 0:-1:2] + 4.0 * c8[:, 1::2] + c8[:, 2::2])
        self.c_lo = c8[:, 0].copy()
        C = np.zeros((n, 4 * N + 1))
        C[:, 1:] = np.cumsum(incr, axis=1)
        self.C_ref = C
        self.C = C[:, ::4]
        self.ref_times = eighth[::2]
        self.coef = coefficients_at(model, self.ref_times)
        self.E = np.exp(-(self.C[:, 1:] - self.C[:, :-1]))
        end = C[:, 4::4]
        self.kf = np.stack([np.exp(-(end - C[:, j:4 * N + j:4])) for j in range(5)], axis=-1)
        self.wts = (h / 4.0) / 3.0 * np.array([1.0, 4.0, 2.0, 4.0, 1.0])

        tau, sigma, nud = model.delay_arrays
        self.delays = np.unique(np.concatenate([[0.0], tau.ravel(), sigma.ravel(), nud.ravel()]))
        self._stencils = [_stencil((self.ref_times - D - t_lo) / h, N) for D in self.delays]
        self._didx = [np.searchsorted(self.delays, arr) for arr in (tau, sigma, nud)]
        self.K_gamma = _windows(f_bound(model), cs, eps_tail, h)
        self.K_phi0 = _windows(bar_bounds(model).I, cs, eps_tail, h)

    @property
    def times(self) -> np.ndarray:
        return self.t_lo + self.step * np.arange(self.nsteps + 1)

    @property
    def comparison_start(self) -> float:
        return self.t_lo + self.step * int(self.K_gamma.max())

    def convolve(self, F_ref: np.ndarray, K: np.ndarray) -> np.ndarray:
        """Truncated exponential-kernel integral of ``F`` sampled on the refined grid.

        Below ``t_lo`` both ``F`` and ``c`` are continued by their values at
        ``t_lo``, so the part of ``[t - W, t]`` left of the window contributes
        its frozen-coefficient integral instead of zero.
        """
        n, N, h = self.model.n, self.nsteps, self.step
        P = np.zeros((n, N))
        for j in range(5):
            P += self.wts[j] * self.kf[:, :, j] * F_ref[:, j:4 * N + j:4][:, :N]
        y = np.zeros((n, N + 1))
        y[:, 0] = F_ref[:, 0] / self.c_lo
        kernels.expo_recursion(np.ascontiguousarray(self.E), np.ascontiguousarray(P), y)
        out = y.copy()
        for i in range(n):
            k = int(K[i])
            if k == 0:
                out[i] = 0.0
                continue
            m = min(k, N + 1)
            out[i, :m] -= (np.exp(-self.C[i, :m]) * y[i, 0]
                           * np.exp(-self.c_lo[i] * h * (k - np.arange(m))))
            if k <= N:
                out[i, k:] -= np.exp(-(self.C[i, k:] - self.C[i, :N + 1 - k])) * y[i, :N + 1 - k]
        return out.T

    def F(self, phi: CandidateFunction) -> np.ndarray:
        m, n = self.model, self.model.n
        at = []
        for idx, w in self._stencils:
            at.append(np.einsum("mk,mkn->nm", w, phi.values[idx]))
        ti, si, ni = self._didx
        co = self.coef
        out = co.I.copy()
        x_now = at[0]
        for j in range(n):
            fj = m.f_act[j](x_now[j])
            for i in range(n):
                if np.any(co.d[i, j]):
                    out[i] += co.d[i, j] * fj
                if np.any(co.a[i, j]):
                    out[i] += co.a[i, j] * m.g_act[j](at[ti[i, j]][j])
                for l in range(n):
                    if np.any(co.b[i, j, l]):
                        out[i] += (co.b[i, j, l] * m.h_act[j](at[si[i, j]][j])
                                   * m.h_act[l](at[ni[i, j]][l]))
        return out

    def phi0(self) -> CandidateFunction:
        return CandidateFunction(self.t_lo, self.step, self.convolve(self.coef.I, self.K_phi0))

    def apply(self, phi: CandidateFunction) -> CandidateFunction:
        if phi.values.shape != (self.nsteps + 1, self.model.n) or phi.t_lo != self.t_lo \
                or phi.step != self.step:
            raise ValueError("candidate grid does not match the operator grid")
        return CandidateFunction(self.t_lo, self.step, self.convolve(self.F(phi), self.K_gamma))


def phi0(model: NetModel, t_lo: float, t_hi: float, step: float = 1e-3,
         eps_tail: float = 1e-10) -> CandidateFunction:
    """Base point: the kernel integral of the inputs alone."""
    return GammaOperator(model, t_lo, t_hi, step, eps_tail).phi0()


def gamma_apply(model: NetModel, phi: CandidateFunction, eps_tail: float = 1e-10
                ) -> CandidateFunction:
    op = GammaOperator(model, phi.t_lo, phi.t_hi, phi.step, eps_tail)
    return op.apply(phi)


@dataclass
class BallCheck:
    distance: float
    inside: bool


def ball_check(solution: CandidateFunction, phi0_traj: CandidateFunction, radius: float,
               t_from: float | None = None) -> BallCheck:
    """Sup distance from ``phi0`` on ``[t_from, t_hi]`` against ``radius``."""
    if solution.values.shape != phi0_traj.values.shape or solution.t_lo != phi0_traj.t_lo \
            or solution.step != phi0_traj.step:
        raise ValueError("solution and phi0 live on different grids")
    diff = CandidateFunction(solution.t_lo, solution.step, solution.values - phi0_traj.values)
    dist = diff.sup_norm(t_from)
    return BallCheck(dist, bool(dist <= radius * (1 + 1e-6)))


@dataclass
class PicardResult:
    solution: CandidateFunction
    iterations: int
    sup_diffs: list
    empirical_ratio: float
    residual: float
    ball_margin: float | None
    converged: bool
    phi0: CandidateFunction
    comparison_start: float
    radius: float | None
    q_constant: float
    notes: list = field(default_factory=list)

    def iteration_table(self) -> list:
        rows = []
        for k, dk in enumerate(self.sup_diffs, start=1):
            ratio = dk / self.sup_diffs[k - 2] if k >= 2 and self.sup_diffs[k - 2] > 0 else None
            rows.append({"iteration": k, "sup_diff": dk, "ratio": ratio})
        return rows


def picard_solve(model: NetModel, tol: float = 1e-8, max_iter: int = 200,
                 step: float = 1e-3, window=None, eps_tail: float = 1e-10,
                 strict: bool = True) -> PicardResult:
    """Iterate ``phi0, Gamma phi0, Gamma^2 phi0, ...`` until the sup difference
    on the comparison window drops below ``tol``.

    With ``strict=True`` a model whose q1 is not below 1 is rejected;
    ``strict=False`` logs a warning and iterates anyway.
    """
    consts = constants_m7(model)
    notes = []
    if consts.q1 >= 1:
        msg = f"q1 = {consts.q1:.6g} >= 1: contraction not guaranteed"
        if strict:
            raise ModelValidationError(msg)
        log.warning(msg)
        notes.append(msg)
    t_lo, t_hi = default_window(model, window)
    if window is None and t_lo != DEFAULT_WINDOW[0]:
        notes.append(f"window shifted to [{t_lo}, {t_hi}] to respect the domain floor")
    op = GammaOperator(model, t_lo, t_hi, step, eps_tail)
    start = op.comparison_start
    mask = op.times >= start - 1e-9 * step
    base = op.phi0()
    cur = base
    diffs = []
    converged = False
    for _ in range(max_iter):
        nxt = op.apply(cur)
        dk = float(np.max(np.abs(nxt.values[mask] - cur.values[mask])))
        diffs.append(dk)
        cur = nxt
        if dk < tol:
            converged = True
            break
    if not converged:
        notes.append(f"no convergence within {max_iter} iterations")
    residual = float(np.max(np.abs(op.apply(cur).values[mask] - cur.values[mask])))
    ratios = [b / a for a, b in zip(diffs, diffs[1:]) if a > 0]
    ratio = max(ratios) if ratios else 0.0
    margin = None
    if consts.ball_radius is not None:
        margin = consts.ball_radius - ball_check(cur, base, consts.ball_radius, start).distance
    return PicardResult(cur, len(diffs), diffs, ratio, residual, margin, converged, base,
                        start, consts.ball_radius, consts.q1, notes)


def write_candidate_csv(phi: CandidateFunction, path, t_from: float | None = None) -> None:
    t = phi.times
    keep = np.ones_like(t, dtype=bool) if t_from is None else t >= t_from - 1e-9 * phi.step
    header = "t," + ",".join(f"x_{i + 1}" for i in range(phi.n))
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for tk, row in zip(t[keep], phi.values[keep]):
            fh.write(",".join(f"{v:.16e}" for v in (tk, *row)) + "\n")
