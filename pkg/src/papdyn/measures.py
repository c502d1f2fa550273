"""Density-defined measures on R, ergodic remainders, and the measure conditions.

A measure is given by a nonnegative density, either one expression over all
of R or a piecewise definition whose pieces are half-open ``(lo, hi]``
intervals. All integrals go through :func:`papdyn.quadrature.integrate`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ExpressionError, InvalidMeasureError
from .expr import GeneralExpr, compile_expression, parse_signal
from .funcmodel import SignalExpr
from .quadrature import RTOL, integrate, robust_loglog_slope

DEFAULT_Z_SCHEDULE = (5.0, 10.0, 20.0, 40.0, 80.0, 160.0)
DEFAULT_RADII = (10.0, 20.0, 40.0, 80.0, 160.0)
DEFAULT_SHIFTS = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)


def _constant_value(expr):
    if isinstance(expr, GeneralExpr):
        try:
            expr = parse_signal(expr.text)
        except ExpressionError:
            return None
    if isinstance(expr, SignalExpr) and not expr.erg_terms \
            and not any(tm.oscillates for tm in expr.ap_terms):
        return float(expr(0.0))
    return None


@dataclass(frozen=True)
class WeightedMeasure:
    """Measure with density ``pieces[k][2]`` on ``(pieces[k][0], pieces[k][1]]``."""

    name: str
    pieces: tuple

    @classmethod
    def from_density(cls, text: str, name: str | None = None) -> "WeightedMeasure":
        return cls(name or text, ((-math.inf, math.inf, compile_expression(text)),))

    @classmethod
    def two_piece(cls, left: str, right: str, name: str | None = None) -> "WeightedMeasure":
        """``left`` on ``t <= 0`` and ``right`` on ``t > 0``."""
        return cls(name or f"[{left} | {right}]",
                   ((-math.inf, 0.0, compile_expression(left)),
                    (0.0, math.inf, compile_expression(right))))

    @classmethod
    def lebesgue(cls) -> "WeightedMeasure":
        return cls.from_density("1", name="lebesgue")

    @property
    def breakpoints(self) -> tuple:
        pts = {p for lo, hi, _ in self.pieces for p in (lo, hi) if math.isfinite(p)}
        if any(getattr(e, "has_kink_at_zero", False) for _, _, e in self.pieces):
            pts.add(0.0)
        return tuple(sorted(pts))

    def density(self, t):
        tt = np.asarray(t, dtype=float)
        out = np.empty_like(tt)
        for lo, hi, expr in self.pieces:
            sel = (tt > lo) & (tt <= hi) if lo > -math.inf else (tt <= hi)
            if np.any(sel):
                out[sel] = expr(tt[sel])
        return float(out) if np.ndim(t) == 0 else out

    def _checked_density(self, t):
        rho = self.density(t)
        if np.any(rho < 0) or not np.all(np.isfinite(rho)):
            raise InvalidMeasureError(f"density of {self.name} negative or non-finite")
        return rho

    def mass(self, a: float, b: float) -> float:
        return mass(self, a, b)


def mass(m: WeightedMeasure, a: float, b: float, rtol: float = RTOL) -> float:
    """``m([a, b])``: closed form for constant pieces, Simpson otherwise."""
    if a > b:
        raise ValueError("mass requires a <= b")
    total = 0.0
    for lo, hi, expr in m.pieces:
        left, right = max(a, lo), min(b, hi)
        if left >= right:
            continue
        k = _constant_value(expr)
        if k is not None:
            if k < 0:
                raise InvalidMeasureError(f"density of {m.name} is negative")
            total += k * (right - left)
        else:
            total += integrate(m._checked_density, left, right, m.breakpoints, rtol=rtol)
    return total


def _floor_of(f) -> float:
    return getattr(f, "domain_floor", -math.inf)


def _kinks_of(f) -> tuple:
    if isinstance(f, SignalExpr) and any(e.kind == "exp_abs_decay" for e in f.erg_terms):
        return (0.0,)
    if getattr(f, "has_kink_at_zero", False):
        return (0.0,)
    return ()


def ergodic_remainder(f, mu: WeightedMeasure, nu: WeightedMeasure, z: float,
                      rtol: float = RTOL) -> float:
    """``(1 / nu([-z, z])) * integral_{-z}^{z} |f| dmu``.

    ``f`` may be a :class:`SignalExpr` or any vectorized callable. For a
    signal with a domain floor, the integral runs over the part of
    ``[-z, z]`` inside the declared domain.
    """
    if not z > 0:
        raise ValueError("z must be positive")
    denom = nu.mass(-z, z)
    if not denom > 0:
        raise InvalidMeasureError(f"nu([-{z}, {z}]) = {denom}")
    lo = max(-z, _floor_of(f))
    if lo >= z:
        return 0.0

    def integrand(t):
        return np.abs(f(t)) * mu._checked_density(t)

    num = integrate(integrand, lo, z, mu.breakpoints + _kinks_of(f), rtol=rtol)
    return num / denom


@dataclass
class ErgodicVerdict:
    z_values: list
    remainders: list
    trend_slope: float
    passed: bool
    threshold: float
    domain_note: str = ""


def ergodicity_trend(f, mu, nu, z_schedule=DEFAULT_Z_SCHEDULE, threshold: float = 1e-2
                     ) -> ErgodicVerdict:
    """Numeric membership test for the ergodic space.

    Passes when the last remainder is below ``threshold`` and the Theil-Sen
    slope of log remainder against log z is negative (all-zero remainders
    pass trivially).
    """
    zs = [float(z) for z in z_schedule]
    if len(zs) < 4 or any(b <= a for a, b in zip(zs, zs[1:])):
        raise ValueError("z_schedule needs >= 4 strictly increasing points")
    rems = [ergodic_remainder(f, mu, nu, z) for z in zs]
    slope = robust_loglog_slope(zs, rems)
    if all(r == 0 for r in rems):
        passed = True
    else:
        passed = rems[-1] < threshold and math.isfinite(slope) and slope < 0
    floor = _floor_of(f)
    note = f"integrated over t >= {floor} (declared domain)" if floor > -math.inf else ""
    return ErgodicVerdict(zs, rems, slope, passed, threshold, note)


@dataclass
class M1Result:
    beta_bound: float
    passed: bool
    per_shift: dict
    excluded_interval: tuple | None
    diagnostic: str = ""


def _log_ratio_sup(m, tau, excluded, span, spacing):
    t = np.arange(-span, span + spacing / 2, spacing)
    if excluded is not None:
        t = t[(t < excluded[0]) | (t > excluded[1])]

    def g(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(m.density(x + tau)) - np.log(m.density(x))

    vals = g(t)
    if np.any(np.isnan(vals)) or np.any(vals == np.inf):
        return math.inf
    best = float(np.max(vals))
    for k in np.argsort(vals)[-5:]:
        lo, hi = t[k] - spacing, t[k] + spacing
        res = minimize_scalar(lambda x: -float(g(x)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        if excluded is None or not excluded[0] <= res.x <= excluded[1]:
            best = max(best, -float(res.fun))
    return best


def check_m1(m: WeightedMeasure, shifts=DEFAULT_SHIFTS, excluded_interval=None,
             span: float = 60.0, spacing: float = 1e-2) -> M1Result:
    """Shift-domination check via the density ratio ``rho(t + tau) / rho(t)``.

    The sup of the log ratio is taken on a grid over ``[-span, span]``
    (outside ``excluded_interval``) and polished by bounded local search
    around the largest samples. Growth of the sup when the span doubles
    is reported as an unbounded ratio.
    """
    shifts = list(shifts)
    if not shifts:
        raise ValueError("shifts must be nonempty")
    per_shift, diag = {}, []
    for tau in shifts:
        near = _log_ratio_sup(m, tau, excluded_interval, span, spacing)
        far = _log_ratio_sup(m, tau, excluded_interval, 2 * span, spacing)
        if not math.isfinite(near) or far > near + 1e-6:
            per_shift[tau] = math.inf
            diag.append(f"ratio rho(t+{tau})/rho(t) unbounded (grows with sampling span)")
        else:
            per_shift[tau] = math.exp(max(near, far))
    beta = max(per_shift.values())
    return M1Result(beta, math.isfinite(beta), per_shift, excluded_interval, "; ".join(diag))


@dataclass
class M2Result:
    radii: list
    ratios: list
    sup_ratio: float
    slope: float
    passed: bool


def check_m2(mu: WeightedMeasure, nu: WeightedMeasure, radii=DEFAULT_RADII,
             slope_tol: float = 0.05) -> M2Result:
    """``limsup mu([-r,r]) / nu([-r,r]) < inf`` judged by the log-log trend."""
    radii = [float(r) for r in radii]
    if len(radii) < 3 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing with >= 3 points")
    ratios = []
    for r in radii:
        den = nu.mass(-r, r)
        if not den > 0:
            raise InvalidMeasureError(f"nu([-{r}, {r}]) = {den}")
        ratios.append(mu.mass(-r, r) / den)
    slope = robust_loglog_slope(radii, ratios)
    return M2Result(radii, ratios, max(ratios), slope, bool(slope <= slope_tol))


@dataclass
class ClassMResult:
    radii: list
    masses: list
    slope: float
    passed: bool


def in_class_m(m: WeightedMeasure, radii=DEFAULT_RADII, min_slope: float = 0.1) -> ClassMResult:
    """Infinite total mass, judged by growth of ``m([-r, r])`` across ``radii``."""
    radii = [float(r) for r in radii]
    masses = [m.mass(-r, r) for r in radii]
    slope = robust_loglog_slope(radii, masses)
    increasing = all(b > a for a, b in zip(masses, masses[1:]))
    return ClassMResult(radii, masses, slope, bool(increasing and slope >= min_slope))
