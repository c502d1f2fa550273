"""Scalar time signals and activation functions.

A :class:`SignalExpr` is a trigonometric polynomial (the almost periodic
part) plus a short list of decaying kernels (the ergodic part), all divided
by a common ``scale``::

    (2*sin(t) + exp(-t)) / 10   ->   ap_terms=[2 sin(t)], erg_terms=[1 exp(-t)], scale=10

Every bound in this module is the amplitude-sum bound, which is exact
rational arithmetic on the coefficients and is what the hypothesis checker
consumes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ModelValidationError, UnboundedError

AP_KINDS = ("sin", "cos", "const")
ERG_KINDS = ("exp_decay", "exp_abs_decay", "rational_decay")


@dataclass(frozen=True)
class APTerm:
    amplitude: float
    kind: str = "const"
    frequency: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in AP_KINDS:
            raise ValueError(f"unknown AP term kind {self.kind!r}")

    @property
    def oscillates(self) -> bool:
        return self.kind != "const" and self.frequency != 0.0

    def constant_value(self) -> float:
        """Value of a non-oscillating term."""
        if self.kind == "const":
            return self.amplitude
        fn = math.sin if self.kind == "sin" else math.cos
        return self.amplitude * fn(self.phase)

    def __call__(self, t):
        if self.kind == "const":
            return np.full_like(t, self.amplitude, dtype=float)
        arg = self.frequency * t + self.phase
        return self.amplitude * (np.sin(arg) if self.kind == "sin" else np.cos(arg))


@dataclass(frozen=True)
class ErgTerm:
    amplitude: float
    kind: str = "exp_abs_decay"

    def __post_init__(self):
        if self.kind not in ERG_KINDS:
            raise ValueError(f"unknown ergodic term kind {self.kind!r}")

    def kernel(self, t):
        if self.kind == "exp_decay":
            return np.exp(-t)
        if self.kind == "exp_abs_decay":
            return np.exp(-np.abs(t))
        return 1.0 / (1.0 + t * t)

    def kernel_sup(self, t0: float) -> float:
        """sup of the (positive) kernel on [t0, inf)."""
        if self.kind == "exp_decay":
            if t0 == -math.inf:
                raise UnboundedError("exp(-t) is unbounded as t -> -inf")
            return math.exp(-t0)
        if self.kind == "exp_abs_decay":
            return 1.0 if t0 <= 0 else math.exp(-t0)
        return 1.0 if t0 <= 0 else 1.0 / (1.0 + t0 * t0)

    def __call__(self, t):
        return self.amplitude * self.kernel(t)


@dataclass(frozen=True)
class SignalExpr:
    """AP + ergodic signal ``(sum(ap_terms) + sum(erg_terms)) / scale``.

    ``t_floor`` is the left end of the declared domain and only matters
    when an ``exp_decay`` term is present; otherwise the domain is all of R.
    """

    ap_terms: tuple = ()
    erg_terms: tuple = ()
    scale: float = 1.0
    t_floor: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "ap_terms", tuple(self.ap_terms))
        object.__setattr__(self, "erg_terms", tuple(self.erg_terms))
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    @classmethod
    def constant(cls, value: float) -> "SignalExpr":
        return cls(ap_terms=(APTerm(float(value)),) if value else ())

    @classmethod
    def zero(cls) -> "SignalExpr":
        return cls()

    @property
    def is_zero(self) -> bool:
        return all(tm.amplitude == 0 for tm in self.ap_terms + self.erg_terms)

    @property
    def domain_floor(self) -> float:
        if any(e.kind == "exp_decay" and e.amplitude != 0 for e in self.erg_terms):
            return self.t_floor
        return -math.inf

    def with_floor(self, t_floor: float) -> "SignalExpr":
        return SignalExpr(self.ap_terms, self.erg_terms, self.scale, float(t_floor))

    def __call__(self, t):
        return evaluate(self, t)

    def to_text(self) -> str:
        """Canonical grammar text; parsing it back yields an equal expression."""
        parts = []
        for tm in self.ap_terms:
            if tm.kind == "const":
                parts.append(repr(float(tm.amplitude)))
            else:
                parts.append(f"{float(tm.amplitude)!r}*{tm.kind}({float(tm.frequency)!r}*t+{float(tm.phase)!r})")
        for tm in self.erg_terms:
            kern = {"exp_decay": "exp(-t)", "exp_abs_decay": "exp(-abs(t))",
                    "rational_decay": "1/(1+t*t)"}[tm.kind]
            parts.append(f"{float(tm.amplitude)!r}*{kern}")
        body = " + ".join(parts) if parts else "0"
        if self.scale != 1.0:
            return f"({body})/{float(self.scale)!r}"
        return body


def evaluate(expr: SignalExpr, t):
    """Evaluate ``expr`` at scalar or array ``t``.

    Raises
    ------
    DomainError
        If any ``t`` lies below the expression's domain floor.
    """
    scalar = np.ndim(t) == 0
    tt = np.asarray(t, dtype=float)
    floor = expr.domain_floor
    if floor > -math.inf and np.any(tt < floor):
        bad = float(np.min(tt))
        raise DomainError(f"t={bad!r} below domain floor {floor!r} of {expr.to_text()}")
    out = np.zeros_like(tt, dtype=float)
    for tm in expr.ap_terms:
        out = out + tm(tt)
    for tm in expr.erg_terms:
        out = out + tm(tt)
    out = out / expr.scale
    return float(out) if scalar else out


def _domain_start(expr: SignalExpr, t0):
    floor = expr.domain_floor
    if t0 is None:
        return floor
    if t0 < floor:
        if t0 == -math.inf:
            raise UnboundedError(f"{expr.to_text()} is unbounded on (-inf, inf)")
        raise DomainError(f"domain start {t0!r} below floor {floor!r}")
    return t0


def _grid_values(expr, t0, span, num):
    lo = -span if t0 == -math.inf else t0
    grid = np.linspace(lo, lo + 2 * span if t0 == -math.inf else lo + span, num)
    return evaluate(expr, grid)


def sup_abs_bound(expr: SignalExpr, t0: float | None = None, refine: bool = False,
                  span: float = 200.0, num: int = 200001):
    """Amplitude-sum upper bound of ``sup |expr|`` on ``[t0, inf)``.

    ``t0=None`` uses the expression's own domain floor. With ``refine=True``
    the return value is ``(bound, estimate)`` where ``estimate`` is the
    grid-sampled maximum of ``|expr|``.
    """
    t0 = _domain_start(expr, t0)
    const = sum(tm.constant_value() for tm in expr.ap_terms if not tm.oscillates)
    osc = sum(abs(tm.amplitude) for tm in expr.ap_terms if tm.oscillates)
    erg = sum(abs(tm.amplitude) * tm.kernel_sup(t0) for tm in expr.erg_terms if tm.amplitude)
    bound = (abs(const) + osc + erg) / expr.scale
    if not refine:
        return bound
    est = float(np.max(np.abs(_grid_values(expr, t0, span, num))))
    return bound, est


def inf_on(expr: SignalExpr, t0: float | None = None, refine: bool = False,
           span: float = 200.0, num: int = 200001):
    """Amplitude-sum lower bound of ``inf expr`` on ``[t0, inf)``.

    Positive decay terms contribute 0 (their infimum at t -> inf); negative
    ones contribute ``amplitude * kernel_sup``.
    """
    t0 = _domain_start(expr, t0)
    const = sum(tm.constant_value() for tm in expr.ap_terms if not tm.oscillates)
    osc = sum(abs(tm.amplitude) for tm in expr.ap_terms if tm.oscillates)
    erg = sum(tm.amplitude * tm.kernel_sup(t0) for tm in expr.erg_terms if tm.amplitude < 0)
    bound = (const - osc + erg) / expr.scale
    if not refine:
        return bound
    est = float(np.min(_grid_values(expr, t0, span, num)))
    return bound, est


def decompose(expr: SignalExpr) -> tuple[SignalExpr, SignalExpr]:
    """Split into (almost periodic part, ergodic part)."""
    return (SignalExpr(expr.ap_terms, (), expr.scale, expr.t_floor),
            SignalExpr((), expr.erg_terms, expr.scale, expr.t_floor))


ACTIVATION_SHAPES = ("sine", "tanh", "piecewise_linear_saturation", "custom_table")
# kernel codes shared with the compiled/pure stepping kernels
SHAPE_CODES = {"sine": 0, "tanh": 1, "piecewise_linear_saturation": 2, "custom_table": 3}


@dataclass(frozen=True)
class ActivationSpec:
    """State activation ``x -> act(x)`` with Lipschitz and bound data.

    ``lipschitz_const`` / ``bound_const`` default to the shape's intrinsic
    values and may only be raised above them. ``custom_table`` activations
    interpolate ``table`` linearly and continue constantly beyond its ends.
    """

    shape: str = "sine"
    lipschitz_const: float | None = None
    bound_const: float | None = None
    lipschitz_weight: SignalExpr | None = None
    saturation: float = 1.0
    table: tuple = field(default=())

    def __post_init__(self):
        if self.shape not in ACTIVATION_SHAPES:
            raise ModelValidationError(f"unknown activation shape {self.shape!r}")
        table = tuple((float(x), float(y)) for x, y in self.table)
        object.__setattr__(self, "table", table)
        if self.shape == "custom_table":
            if len(table) < 2:
                raise ModelValidationError("custom_table needs at least two samples")
            xs = [p[0] for p in table]
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ModelValidationError("custom_table abscissae must be strictly increasing")
        if self.shape == "piecewise_linear_saturation" and not self.saturation > 0:
            raise ModelValidationError("saturation level must be positive")
        lip, bnd = self.intrinsic_lipschitz, self.intrinsic_bound
        if self.lipschitz_const is None:
            object.__setattr__(self, "lipschitz_const", lip)
        if self.bound_const is None:
            object.__setattr__(self, "bound_const", bnd)
        if self.lipschitz_const < lip * (1 - 1e-12) or self.bound_const < bnd * (1 - 1e-12):
            raise ModelValidationError(
                f"{self.shape}: declared L={self.lipschitz_const}, M={self.bound_const} "
                f"below intrinsic L={lip}, M={bnd}")
        if abs(float(self(0.0))) > 1e-15:
            raise ModelValidationError(f"{self.shape}: activation must vanish at 0")

    @property
    def intrinsic_lipschitz(self) -> float:
        if self.shape == "custom_table":
            xs, ys = np.array(self.table).T
            return float(np.max(np.abs(np.diff(ys) / np.diff(xs))))
        return 1.0

    @property
    def intrinsic_bound(self) -> float:
        if self.shape == "custom_table":
            return float(max(abs(y) for _, y in self.table))
        if self.shape == "piecewise_linear_saturation":
            return float(self.saturation)
        return 1.0

    @property
    def code(self) -> int:
        return SHAPE_CODES[self.shape]

    def __call__(self, x):
        if self.shape == "sine":
            return np.sin(x)
        if self.shape == "tanh":
            return np.tanh(x)
        if self.shape == "piecewise_linear_saturation":
            return np.clip(x, -self.saturation, self.saturation)
        xs, ys = np.array(self.table).T
        return np.interp(x, xs, ys)

    def sampled_lipschitz(self, rng=None, num=20000, spread=10.0) -> float:
        """Largest difference quotient over random sample pairs."""
        rng = np.random.default_rng(0) if rng is None else rng
        x = rng.uniform(-spread, spread, num)
        y = x + rng.normal(0.0, 1.0, num) * rng.choice([1e-3, 1e-1, 1.0], num)
        keep = x != y
        x, y = x[keep], y[keep]
        return float(np.max(np.abs(self(x) - self(y)) / np.abs(x - y)))
