"""Composite Simpson quadrature with dyadic refinement, and robust slopes."""
from __future__ import annotations

import math

import numpy as np
from scipy.stats import theilslopes

from .errors import NumericalError

RTOL = 1e-8


def simpson(func, a: float, b: float, rtol: float = RTOL, atol: float = 1e-15,
            n0: int | None = None, max_panels: int = 1 << 23) -> float:
    """Integrate ``func`` (vectorized) over ``[a, b]``.

    The trapezoid sum is refined by halving the step; each level yields a
    Simpson estimate ``S = (4 T_2n - T_n) / 3``. Refinement stops once two
    successive Simpson estimates agree to ``rtol`` and the Richardson
    extrapolation ``S_2n + (S_2n - S_n) / 15`` is returned. Summation order
    is fixed, so results are reproducible bit for bit.
    """
    if b < a:
        raise ValueError("simpson requires a <= b")
    if a == b:
        return 0.0
    length = b - a
    n = n0 or max(8, int(math.ceil(length / 0.25)))
    h = length / n
    x = a + h * np.arange(n + 1)
    x[-1] = b
    fx = np.asarray(func(x), dtype=float)
    trap = h * (0.5 * fx[0] + fx[1:-1].sum() + 0.5 * fx[-1])
    prev_s = None
    while True:
        mids = a + h * (np.arange(n) + 0.5)
        new_trap = 0.5 * trap + 0.5 * h * float(np.sum(func(mids)))
        s = (4.0 * new_trap - trap) / 3.0
        if not math.isfinite(s):
            raise NumericalError(f"non-finite integrand on [{a}, {b}]")
        if prev_s is not None and abs(s - prev_s) <= rtol * abs(s) + atol:
            return s + (s - prev_s) / 15.0
        prev_s, trap, n, h = s, new_trap, 2 * n, 0.5 * h
        if n > max_panels:
            raise NumericalError(f"quadrature did not reach rtol={rtol} on [{a}, {b}]")


def integrate(func, a: float, b: float, breakpoints=(), **kw) -> float:
    """:func:`simpson` split at interior ``breakpoints`` (kinks of the integrand)."""
    cuts = sorted({a, b, *(p for p in breakpoints if a < p < b)})
    return float(sum(simpson(func, lo, hi, **kw) for lo, hi in zip(cuts, cuts[1:])))


def robust_loglog_slope(x, y) -> float:
    """Theil-Sen slope of ``log y`` against ``log x`` over entries with ``y > 0``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    keep = y > 0
    if keep.sum() < 2:
        return math.nan
    return float(theilslopes(np.log(y[keep]), np.log(x[keep]))[0])
