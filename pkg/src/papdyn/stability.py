"""Exponential decay certificates and their empirical verification.

For each row ``i``::

    F_i(w) = c*_i - w - sum_j [ d_ij L^f_j + a_ij L^g_j e^{w tau_ij}
                               + sum_l b_ijl (L^h_j M^h_l e^{w sigma_ij}
                                              + M^h_j L^h_l e^{w nu_ij}) ]

with bars on the coefficients. ``F_i`` is strictly decreasing, so a positive
value at 0 gives a unique positive root.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import bisect

from . import dde
from .errors import NoCertificateError, NoCouplingError
from .netmodel import NetModel, bar_bounds, c_star, coupling_rows

ROOT_XTOL = 1e-12
ENVELOPE_SLACK = 1e-9


def f_decay(model: NetModel, w: float, bars=None) -> np.ndarray:
    """``F_i(w)`` for every row."""
    if w < 0:
        raise ValueError("w must be non-negative")
    bars = bars or bar_bounds(model)
    _, q = coupling_rows(model, bars, w)
    return c_star(model) - w - q


@dataclass
class DecayCertificate:
    eps_star: np.ndarray
    eta: float
    lam: float
    M: float
    margin_check: np.ndarray
    c_star: np.ndarray
    safety: float

    @property
    def valid(self) -> bool:
        return bool(0 < self.lam and np.all(self.margin_check < 1))

    def with_rate(self, lam: float) -> "DecayCertificate":
        """Same certificate with another rate (used to falsify envelopes)."""
        return DecayCertificate(self.eps_star, self.eta, float(lam), self.M,
                                self.margin_check, self.c_star, self.safety)

    def to_dict(self) -> dict:
        return {"eps_star": self.eps_star.tolist(), "eta": self.eta, "lambda": self.lam,
                "M": self.M, "margin_check": self.margin_check.tolist(),
                "c_star": self.c_star.tolist(), "safety": self.safety}


def decay_rate(model: NetModel, safety: float = 0.99) -> DecayCertificate:
    """Roots of ``F_i`` by bisection, the rate ``lambda`` and the constant ``M``."""
    if not 0 < safety < 1:
        raise ValueError("safety must lie in (0, 1)")
    bars = bar_bounds(model)
    cs = c_star(model)
    _, q0 = coupling_rows(model, bars, 0.0)
    zero = [i for i, v in enumerate(q0) if v == 0]
    if zero:
        raise NoCouplingError(f"rows {zero} have no coupling; M is undefined")
    F0 = cs - q0
    if not np.all(F0 > 0):
        raise NoCertificateError(
            f"F_i(0) <= 0 for rows {[i for i, v in enumerate(F0) if not v > 0]} (q1 >= 1)")

    roots = []
    for i in range(model.n):
        def Fi(w, i=i):
            return f_decay(model, w, bars)[i]
        roots.append(bisect(Fi, 0.0, cs[i] + 1.0, xtol=ROOT_XTOL, maxiter=200))
    eps = np.array(roots)
    eta = float(eps.min())
    lam = safety * min(eta, float(cs.min()))
    M = float(np.max(cs / q0))
    _, q_lam = coupling_rows(model, bars, lam)
    margin = q_lam / (cs - lam)
    cert = DecayCertificate(eps, eta, lam, M, margin, cs, safety)
    if not cert.valid:
        raise NoCertificateError(f"margin check failed: {margin.tolist()}")
    return cert


def check_certificate(model: NetModel, cert: DecayCertificate) -> tuple[bool, np.ndarray]:
    """Recompute the margin expression at ``cert.lam``; valid iff every entry is below 1."""
    bars = bar_bounds(model)
    cs = c_star(model)
    if not 0 < cert.lam < cs.min():
        return False, np.full(model.n, np.inf)
    _, q = coupling_rows(model, bars, cert.lam)
    margin = q / (cs - cert.lam)
    return bool(np.all(margin < 1)), margin


@dataclass
class EnvelopeReport:
    times: np.ndarray
    ynorm: np.ndarray
    bound: np.ndarray
    phi_norm: float
    holds: bool
    first_violation: float | None
    fitted_slope: float
    lam: float
    trivial: bool

    def summary(self) -> dict:
        return {"holds": self.holds, "first_violation": self.first_violation,
                "phi_norm": self.phi_norm, "fitted_slope": self.fitted_slope,
                "lambda": self.lam, "trivial": self.trivial,
                "max_ratio": float(np.max(self.ynorm / np.maximum(self.bound, 1e-300)))}


def _history_grid_norm(ha: Callable, hb: Callable, t0: float, theta: float, step: float):
    k = int(np.ceil(theta / step - 1e-9))
    s = np.minimum(t0 - step * np.arange(k + 1), t0)
    s = np.maximum(s, t0 - theta)
    diff = np.asarray(ha(s)).reshape(s.size, -1) - np.asarray(hb(s)).reshape(s.size, -1)
    return float(np.max(np.abs(diff)))


def verify_decay(model: NetModel, history_a: Callable, history_b: Callable,
                 cert: DecayCertificate, horizon: float = 20.0, step: float = 1e-3,
                 t0: float = 0.0) -> EnvelopeReport:
    """Check ``|x_a(t) - x_b(t)|_inf <= M |phi|_inf exp(-lambda (t - t0))`` at every node."""
    ta = dde.integrate(model, t0 + horizon, step, t0=t0, history=history_a)
    tb = dde.integrate(model, t0 + horizon, step, t0=t0, history=history_b)
    y = np.max(np.abs(ta.values - tb.values), axis=1)
    phi = _history_grid_norm(history_a, history_b, t0, model.theta, step)
    times = ta.times
    bound = cert.M * phi * np.exp(-cert.lam * (times - t0))
    bad = np.nonzero(y > bound + ENVELOPE_SLACK)[0]
    pos = y > 1e-300
    slope = float(np.polyfit(times[pos] - t0, np.log(y[pos]), 1)[0]) if pos.sum() >= 2 else float("nan")
    return EnvelopeReport(times, y, bound, phi, bad.size == 0,
                          float(times[bad[0]]) if bad.size else None, slope, cert.lam,
                          trivial=bool(phi == 0.0 and not np.any(pos)))


def verify_against_solution(model: NetModel, solution, perturbation: Callable,
                            cert: DecayCertificate, horizon: float = 20.0,
                            step: float = 1e-3, t0: float | None = None) -> EnvelopeReport:
    """Envelope check of a perturbed start against a reference solution.

    ``solution`` is any object with a vectorized ``sample(t)`` (for example a
    Picard fixed point); the perturbed history is ``solution + perturbation``.
    ``t0`` defaults to the first time where a full history window is available.
    """
    if t0 is None:
        t0 = getattr(solution, "t_lo", 0.0) + model.theta
        start = getattr(solution, "comparison_start", None)
        if start is not None:
            t0 = max(t0, start + model.theta)

    def perturbed(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return solution.sample(s) + np.asarray(perturbation(s)).reshape(s.size, -1)

    return verify_decay(model, perturbed, solution.sample, cert, horizon, step, t0)


def write_envelope_csv(rep: EnvelopeReport, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("t,ynorm,bound\n")
        for row in zip(rep.times, rep.ynorm, rep.bound):
            fh.write(",".join(f"{v:.16e}" for v in row) + "\n")
