"""The delayed network model, its right-hand side, and the hypothesis checker.

Model::

    x_i'(t) = -c_i(t) x_i(t)
              + sum_j d_ij(t) f_j(x_j(t))
              + sum_j a_ij(t) g_j(x_j(t - tau_ij))
              + sum_{j,l} b_ijl(t) h_j(x_j(t - sigma_ij)) h_l(x_l(t - nu_ij))
              + I_i(t)

with history ``x(s) = phi(s)`` for ``s`` in ``[-theta, 0]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ModelValidationError, UnboundedError
from .expr import GeneralExpr, compile_expression, parse_signal
from .funcmodel import ActivationSpec, SignalExpr, decompose, inf_on, sup_abs_bound
from .measures import (DEFAULT_RADII, DEFAULT_SHIFTS, DEFAULT_Z_SCHEDULE, WeightedMeasure,
                       check_m1, check_m2, ergodicity_trend, in_class_m)
from .quadrature import integrate


@dataclass(frozen=True)
class ExprHistory:
    """History function given by one grammar expression per component."""

    exprs: tuple

    def __post_init__(self):
        object.__setattr__(self, "exprs", tuple(
            e if isinstance(e, GeneralExpr) else compile_expression(str(e)) for e in self.exprs))

    @property
    def texts(self):
        return [e.text for e in self.exprs]

    def __call__(self, t):
        if np.ndim(t) == 0:
            return np.array([e(float(t)) for e in self.exprs])
        tt = np.asarray(t, dtype=float)
        return np.stack([e(tt) for e in self.exprs], axis=-1)


def _as_signal(v, floor):
    if isinstance(v, SignalExpr):
        return v
    if isinstance(v, (int, float)):
        return SignalExpr.constant(float(v))
    return parse_signal(str(v), t_floor=floor)


def _nested(v, shape, floor, name):
    if len(shape) == 0:
        return _as_signal(v, floor)
    if len(v) != shape[0]:
        raise ModelValidationError(f"{name}: expected length {shape[0]}, got {len(v)}")
    return tuple(_nested(x, shape[1:], floor, f"{name}[{k}]") for k, x in enumerate(v))


def _delays(v, n, name):
    arr = np.ones((n, n)) if v is None else np.asarray(v, dtype=float)
    if arr.shape != (n, n):
        raise ModelValidationError(f"{name}: expected shape {(n, n)}, got {arr.shape}")
    if not np.all(arr > 0) or not np.all(np.isfinite(arr)):
        raise ModelValidationError(f"{name}: delays must be positive and finite")
    return tuple(tuple(float(x) for x in row) for row in arr)


@dataclass(frozen=True)
class NetModel:
    n: int
    c: tuple
    I: tuple
    d: tuple
    a: tuple
    b: tuple
    tau: tuple
    sigma: tuple
    nu_delay: tuple
    f_act: tuple
    g_act: tuple
    h_act: tuple
    history: Callable = field(default=None)

    @classmethod
    def build(cls, n, c, I=None, d=None, a=None, b=None, tau=None, sigma=None,
              nu_delay=None, f_act=None, g_act=None, h_act=None, history=None,
              domain_floor: float = 0.0) -> "NetModel":
        """Validated model from strings, numbers, or :class:`SignalExpr` entries.

        Omitted coefficient arrays are zero, omitted delays are 1, omitted
        activations are ``sine`` and the omitted history is zero.
        """
        if not isinstance(n, int) or n < 1:
            raise ModelValidationError("n must be a positive integer")
        zero1, zero2 = [0] * n, [[0] * n for _ in range(n)]
        zero3 = [[[0] * n for _ in range(n)] for _ in range(n)]
        fl = domain_floor

        def acts(v, name):
            v = [ActivationSpec()] * n if v is None else list(v)
            if len(v) != n:
                raise ModelValidationError(f"{name}: expected {n} activations")
            return tuple(x if isinstance(x, ActivationSpec) else ActivationSpec(**x) for x in v)

        if history is None:
            history = ExprHistory(["0"] * n)
        elif isinstance(history, (list, tuple)):
            if len(history) != n:
                raise ModelValidationError(f"history: expected {n} components")
            history = ExprHistory(history)
        return cls(
            n=n,
            c=_nested(c, (n,), fl, "c"),
            I=_nested(zero1 if I is None else I, (n,), fl, "I"),
            d=_nested(zero2 if d is None else d, (n, n), fl, "d"),
            a=_nested(zero2 if a is None else a, (n, n), fl, "a"),
            b=_nested(zero3 if b is None else b, (n, n, n), fl, "b"),
            tau=_delays(tau, n, "tau"),
            sigma=_delays(sigma, n, "sigma"),
            nu_delay=_delays(nu_delay, n, "nu_delay"),
            f_act=acts(f_act, "f_act"), g_act=acts(g_act, "g_act"), h_act=acts(h_act, "h_act"),
            history=history,
        )

    def replace(self, **changes) -> "NetModel":
        from dataclasses import replace
        return replace(self, **changes)

    # --- derived data ---------------------------------------------------

    def all_signals(self):
        """``(name, expr)`` for every coefficient and input, row-major."""
        n = self.n
        out = [(f"c[{i}]", self.c[i]) for i in range(n)]
        out += [(f"I[{i}]", self.I[i]) for i in range(n)]
        out += [(f"d[{i}][{j}]", self.d[i][j]) for i in range(n) for j in range(n)]
        out += [(f"a[{i}][{j}]", self.a[i][j]) for i in range(n) for j in range(n)]
        out += [(f"b[{i}][{j}][{k}]", self.b[i][j][k])
                for i in range(n) for j in range(n) for k in range(n)]
        return out

    @property
    def domain_floor(self) -> float:
        return max(e.domain_floor for _, e in self.all_signals())

    @property
    def delay_arrays(self):
        return np.array(self.tau), np.array(self.sigma), np.array(self.nu_delay)

    @property
    def theta(self) -> float:
        return float(max(np.max(x) for x in self.delay_arrays))

    @property
    def min_delay(self) -> float:
        return float(min(np.min(x) for x in self.delay_arrays))

    def lipschitz(self):
        """``(Lf, Lg, Lh, Mf, Mg, Mh)`` as length-n arrays."""
        L = [np.array([s.lipschitz_const for s in acts]) for acts in (self.f_act, self.g_act, self.h_act)]
        M = [np.array([s.bound_const for s in acts]) for acts in (self.f_act, self.g_act, self.h_act)]
        return (*L, *M)


@dataclass
class Coefficients:
    c: np.ndarray   # (n, m)
    I: np.ndarray   # (n, m)
    d: np.ndarray   # (n, n, m)
    a: np.ndarray   # (n, n, m)
    b: np.ndarray   # (n, n, n, m)


def coefficients_at(model: NetModel, times) -> Coefficients:
    """All coefficient signals sampled at ``times`` (zero entries skipped)."""
    t = np.asarray(times, dtype=float)
    n, m = model.n, t.size

    def fill(shape, exprs):
        out = np.zeros(shape + (m,))
        for idx in np.ndindex(*shape):
            e = exprs
            for k in idx:
                e = e[k]
            if not e.is_zero:
                out[idx] = e(t)
        return out

    return Coefficients(fill((n,), model.c), fill((n,), model.I), fill((n, n), model.d),
                        fill((n, n), model.a), fill((n, n, n), model.b))


def rhs(model: NetModel, t: float, x_now, history_at: Callable) -> np.ndarray:
    """Right-hand side at time ``t``.

    ``history_at(s)`` returns the state vector at a delayed time ``s``; it
    is expected to raise if ``s`` is outside its range.
    """
    n = model.n
    x = np.asarray(x_now, dtype=float)
    tau, sigma, nud = model.delay_arrays
    cache = {}

    def past(s):
        if s not in cache:
            cache[s] = np.asarray(history_at(s), dtype=float)
        return cache[s]

    out = np.empty(n)
    for i in range(n):
        acc = -model.c[i](t) * x[i] + model.I[i](t)
        for j in range(n):
            if not model.d[i][j].is_zero:
                acc += model.d[i][j](t) * model.f_act[j](x[j])
            if not model.a[i][j].is_zero:
                acc += model.a[i][j](t) * model.g_act[j](past(t - tau[i, j])[j])
            for l in range(n):
                if not model.b[i][j][l].is_zero:
                    hj = model.h_act[j](past(t - sigma[i, j])[j])
                    hl = model.h_act[l](past(t - nud[i, j])[l])
                    acc += model.b[i][j][l](t) * hj * hl
        out[i] = acc
    return out


@dataclass
class BarBounds:
    d: np.ndarray
    a: np.ndarray
    b: np.ndarray
    I: np.ndarray
    domain_start: float


def bar_bounds(model: NetModel) -> BarBounds:
    """Amplitude-sum sup bounds of every coefficient on ``[domain_floor, inf)``."""
    t0 = model.domain_floor
    n = model.n

    def bound(name, e):
        try:
            return sup_abs_bound(e, t0)
        except UnboundedError as exc:
            raise UnboundedError(f"{name}: {exc}") from None

    bd = np.array([[bound(f"d[{i}][{j}]", model.d[i][j]) for j in range(n)] for i in range(n)])
    ba = np.array([[bound(f"a[{i}][{j}]", model.a[i][j]) for j in range(n)] for i in range(n)])
    bb = np.array([[[bound(f"b[{i}][{j}][{l}]", model.b[i][j][l]) for l in range(n)]
                    for j in range(n)] for i in range(n)])
    bI = np.array([bound(f"I[{i}]", model.I[i]) for i in range(n)])
    return BarBounds(bd, ba, bb, bI, t0)


def c_star(model: NetModel) -> np.ndarray:
    return np.array([inf_on(ci, model.domain_floor) for ci in model.c])


def _require_positive_decay(cs):
    bad = [i for i, v in enumerate(cs) if not v > 0]
    if bad:
        raise ModelValidationError(f"(M.4) fails: inf c_i <= 0 for i in {bad}")


def coupling_rows(model: NetModel, bars: BarBounds | None = None, w: float = 0.0):
    """Per-row coupling sums with delay weights ``exp(w * delay)``.

    Returns ``(p_rows, q_rows)``: ``p_rows`` carries the single product term
    ``L^h_j M^h_l``, ``q_rows`` both product terms. At ``w = 0`` these are
    the numerators of p1 and q1.
    """
    bars = bars or bar_bounds(model)
    Lf, Lg, Lh, _, _, Mh = model.lipschitz()
    tau, sigma, nud = model.delay_arrays
    et, es, en = np.exp(w * tau), np.exp(w * sigma), np.exp(w * nud)
    base = bars.d @ Lf + (bars.a * Lg[None, :] * et).sum(axis=1)
    first = np.einsum("ijl,j,l,ij->i", bars.b, Lh, Mh, es)
    second = np.einsum("ijl,j,l,ij->i", bars.b, Mh, Lh, en)
    return base + first, base + first + second


@dataclass
class M7Constants:
    L: float
    p1: float
    q1: float
    ball_radius: float | None
    p_rows: np.ndarray
    q_rows: np.ndarray
    c_star: np.ndarray


def constants_m7(model: NetModel) -> M7Constants:
    """``L``, ``p1``, ``q1`` and the ball radius ``p1 L / (1 - p1)``."""
    bars = bar_bounds(model)
    cs = c_star(model)
    _require_positive_decay(cs)
    p_num, q_num = coupling_rows(model, bars)
    L = float(np.max(bars.I / cs))
    p1 = float(np.max(p_num / cs))
    q1 = float(np.max(q_num / cs))
    radius = p1 * L / (1.0 - p1) if p1 < 1 else None
    return M7Constants(L, p1, q1, radius, p_num / cs, q_num / cs, cs)


def lp_norm(weight: SignalExpr, p: float, measure: WeightedMeasure | None = None,
            tail_tol: float = 1e-13) -> float:
    """``(integral |w|^p dt)^(1/p)`` over the weight's domain, optionally against ``measure``.

    Only purely decaying weights are integrable; an oscillating or constant
    part raises :class:`UnboundedError`.
    """
    ap, erg = decompose(weight)
    if not ap.is_zero:
        raise UnboundedError(f"weight {weight.to_text()} is not integrable (non-decaying part)")
    if erg.is_zero:
        return 0.0
    A = sum(abs(tm.amplitude) for tm in erg.erg_terms) / erg.scale
    if any(tm.kind == "rational_decay" for tm in erg.erg_terms):
        R = (tail_tol * (2 * p - 1) / A ** p) ** (1.0 / (1 - 2 * p))
    else:
        R = max(1.0, math.log(A ** p / (p * tail_tol)) / p)
    lo = max(-R, weight.domain_floor)

    def integrand(t):
        v = np.abs(weight(t)) ** p
        return v * measure.density(t) if measure is not None else v

    kinks = (0.0,) + (measure.breakpoints if measure is not None else ())
    return integrate(integrand, lo, R, kinks) ** (1.0 / p)


@dataclass
class M5Constants:
    p: float
    q: float
    p0: float
    q0: float
    ball_radius: float | None
    norms: dict
    mu_norms: dict


def constants_m5(model: NetModel, p: float = 2.0, mu: WeightedMeasure | None = None
                 ) -> M5Constants:
    """``p0`` and ``q0`` from L^p norms of the activations' Lipschitz weights."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    q = p / (p - 1.0)
    norms, mu_norms = {}, {}
    for key, acts in (("f", model.f_act), ("g", model.g_act), ("h", model.h_act)):
        if any(s.lipschitz_weight is None for s in acts):
            raise ModelValidationError(f"{key} activations lack Lipschitz weight functions")
        norms[key] = np.array([lp_norm(s.lipschitz_weight, p) for s in acts])
        if mu is not None:
            mu_norms[key] = np.array([lp_norm(s.lipschitz_weight, p, mu) for s in acts])
    bars = bar_bounds(model)
    cs = c_star(model)
    _require_positive_decay(cs)
    Mh = np.array([s.bound_const for s in model.h_act])
    base = bars.d @ norms["f"] + bars.a @ norms["g"]
    first = np.einsum("ijl,j,l->i", bars.b, norms["h"], Mh)
    second = np.einsum("ijl,l,j->i", bars.b, norms["h"], Mh)
    denom = (q * cs) ** (1.0 / q)
    p0 = float(np.max((base + first) / denom))
    q0 = float(np.max((base + first + second) / denom))
    L = float(np.max(bars.I / cs))
    radius = p0 * L / (1.0 - p0) if p0 < 1 else None
    return M5Constants(p, q, p0, q0, radius, norms, mu_norms)


@dataclass
class Verdict:
    status: str            # "pass" | "fail" | "n/a"
    detail: str = ""
    numeric: bool = False

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass
class HypothesisOptions:
    shifts: tuple = DEFAULT_SHIFTS
    radii: tuple = DEFAULT_RADII
    z_schedule: tuple = DEFAULT_Z_SCHEDULE
    ergodic_threshold: float = 1e-2
    m2_slope_tol: float = 0.05
    p: float = 2.0


@dataclass
class HypothesisReport:
    bar_d: np.ndarray
    bar_a: np.ndarray
    bar_b: np.ndarray
    bar_I: np.ndarray
    c_star: np.ndarray
    L: float | None
    p0: float | None
    q0: float | None
    p1: float | None
    q1: float | None
    ball_radius: float | None
    verdicts: dict
    domain_start: float
    overall: bool = False
    variant: str = "M7"

    def to_dict(self) -> dict:
        def conv(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            return v
        return {
            "bar_d": conv(self.bar_d), "bar_a": conv(self.bar_a), "bar_b": conv(self.bar_b),
            "bar_I": conv(self.bar_I), "c_star": conv(self.c_star),
            "L": self.L, "p0": self.p0, "q0": self.q0, "p1": self.p1, "q1": self.q1,
            "ball_radius": self.ball_radius, "variant": self.variant, "overall": self.overall,
            "domain_start": conv(self.domain_start),
            "verdicts": {k: {"status": v.status, "detail": v.detail, "numeric": v.numeric}
                         for k, v in self.verdicts.items()},
        }


def check_hypotheses(model: NetModel, mu: WeightedMeasure, nu: WeightedMeasure,
                     options: HypothesisOptions | None = None) -> HypothesisReport:
    """Evaluate all eight conditions; failures become verdicts, never exceptions."""
    opt = options or HypothesisOptions()
    V = {}

    m1 = {name: check_m1(m, opt.shifts) for name, m in (("mu", mu), ("nu", nu))}
    cls = {name: in_class_m(m, opt.radii) for name, m in (("mu", mu), ("nu", nu))}
    ok = all(r.passed for r in m1.values()) and all(r.passed for r in cls.values())
    V["M1"] = Verdict("pass" if ok else "fail", "; ".join(
        [f"{k}: beta<={r.beta_bound:.6g} {r.diagnostic}".strip() for k, r in m1.items()]
        + [f"{k} infinite mass: {'yes' if r.passed else 'NO'} (growth slope {r.slope:.3g})"
           for k, r in cls.items()]), numeric=True)

    m2 = check_m2(mu, nu, opt.radii, opt.m2_slope_tol)
    V["M2"] = Verdict("pass" if m2.passed else "fail",
                      f"sup ratio {m2.sup_ratio:.6g}, log-log slope {m2.slope:.3g}", numeric=True)

    failures, checked = [], 0
    for name, e in model.all_signals():
        if name.startswith("c["):
            continue
        _, erg = decompose(e)
        if erg.is_zero:
            continue
        checked += 1
        v = ergodicity_trend(erg, mu, nu, opt.z_schedule, opt.ergodic_threshold)
        if not v.passed:
            failures.append(f"{name} (last remainder {v.remainders[-1]:.3g}, slope {v.trend_slope:.3g})")
    V["M3"] = Verdict("fail" if failures else "pass",
                      (f"ergodic parts failing: {', '.join(failures)}" if failures else
                       f"{checked} ergodic parts pass the remainder trend") +
                      f"; integrated over the declared domain t >= {model.domain_floor}",
                      numeric=True)

    cs = c_star(model)
    non_ap = [i for i, ci in enumerate(model.c) if not decompose(ci)[1].is_zero]
    m4_ok = bool(np.all(cs > 0)) and not non_ap
    V["M4"] = Verdict("pass" if m4_ok else "fail",
                      f"c* = {cs.tolist()}" + (f"; c[{non_ap}] not almost periodic" if non_ap else ""))

    bars = bar_bounds(model)
    report = HypothesisReport(bars.d, bars.a, bars.b, bars.I, cs, None, None, None, None, None,
                              None, V, bars.domain_start)
    acts = model.f_act + model.g_act + model.h_act
    have_weights = all(s.lipschitz_weight is not None for s in acts)
    if have_weights and m4_ok:
        try:
            m5 = constants_m5(model, opt.p, mu)
            V["M5"] = Verdict("pass", f"weight norms (p={opt.p}): " + ", ".join(
                f"{k}={v.tolist()}" for k, v in m5.norms.items()))
            report.p0, report.q0 = m5.p0, m5.q0
            V["M6"] = Verdict("pass" if m5.q0 < 1 else "fail", f"q0 = {m5.q0:.6g}")
        except (UnboundedError, ModelValidationError) as exc:
            V["M5"] = Verdict("fail", str(exc))
            V["M6"] = Verdict("n/a", "requires (M.5)")
    else:
        V["M5"] = Verdict("n/a", "no Lipschitz weight functions declared" if not have_weights
                          else "requires (M.4)")
        V["M6"] = Verdict("n/a", "requires (M.5)")

    lip_bad = [f"{k}[{j}]" for k, group in (("f", model.f_act), ("g", model.g_act), ("h", model.h_act))
               for j, s in enumerate(group) if s.sampled_lipschitz() > s.lipschitz_const * (1 + 1e-9)]
    V["M7"] = Verdict("fail" if lip_bad else "pass",
                      f"sampled Lipschitz quotient exceeds declared constant: {lip_bad}" if lip_bad
                      else "constant Lipschitz/bound data consistent on samples")
    if np.all(cs > 0):
        m7 = constants_m7(model)
        report.L, report.p1, report.q1, report.ball_radius = m7.L, m7.p1, m7.q1, m7.ball_radius
        V["M8"] = Verdict("pass" if m7.q1 < 1 else "fail", f"q1 = {m7.q1:.6g}")
    else:
        report.L = None
        V["M8"] = Verdict("fail", "requires c* > 0")

    common = all(V[k].passed for k in ("M1", "M2", "M3", "M4"))
    m7_ok = common and V["M7"].passed and V["M8"].passed
    m5_ok = common and V["M5"].passed and V["M6"].passed
    report.overall = bool(m7_ok or m5_ok)
    report.variant = "M7" if m7_ok or not m5_ok else "M5"
    if report.variant == "M5" and report.p0 is not None and report.p0 < 1:
        report.ball_radius = report.p0 * report.L / (1 - report.p0)
    return report
