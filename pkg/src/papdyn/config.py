"""TOML run configurations: parsing, validation and emission.

Layout::

    [model]
    n = 2
    domain_floor = 0.0          # optional
    c = ["2", "2"]
    I = [...]                   # n strings
    d = [[...], [...]]          # n x n strings; a likewise
    b = [[[...]]]               # n x n x n strings
    tau = [[1.0, 1.0], ...]     # sigma, nu_delay likewise
    history = ["0", "0"]

    [model.activations]
    f = ["sine", {shape = "tanh"}]

    [measures.mu]
    density = "exp(sin(t))"     # or left = "...", right = "..."

plus optional ``[windows]``, ``[tolerances]``, ``[picard]``, ``[simulate]``,
``[stability]``, ``[ergodic]`` and ``[outputs]`` tables whose keys and
defaults are listed in :mod:`papdyn.defaults`.
"""
from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .defaults import DEFAULTS
from .errors import ConfigError, ModelValidationError, PapdynError
from .expr import compile_expression, parse_signal
from .measures import WeightedMeasure
from .netmodel import NetModel

MODEL_KEYS = {"n", "domain_floor", "c", "I", "d", "a", "b", "tau", "sigma", "nu_delay",
              "history", "activations"}
ACT_KEYS = {"shape", "lipschitz_const", "bound_const", "lipschitz_weight", "saturation", "table"}
SECTIONS = {"model", "measures"} | set(DEFAULTS)


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _text(v, path):
    if isinstance(v, bool) or not isinstance(v, (str, int, float)):
        _fail(path, f"expected an expression string or number, got {type(v).__name__}")
    return v if isinstance(v, str) else repr(float(v)) if isinstance(v, float) else str(v)


def _array(v, shape, path):
    if not shape:
        return _text(v, path)
    if not isinstance(v, list) or len(v) != shape[0]:
        got = len(v) if isinstance(v, list) else type(v).__name__
        _fail(path, f"expected a list of length {shape[0]}, got {got}")
    return [_array(x, shape[1:], f"{path}[{k}]") for k, x in enumerate(v)]


def _check_signals(v, path, floor):
    if isinstance(v, list):
        for k, x in enumerate(v):
            _check_signals(x, f"{path}[{k}]", floor)
        return
    try:
        parse_signal(v, t_floor=floor)
    except PapdynError as exc:
        _fail(path, str(exc))


def _delays(v, n, path):
    if v is None:
        return [[1.0] * n for _ in range(n)]
    rows = _array(v, (n, n), path)
    out = []
    for i, row in enumerate(rows):
        out.append([])
        for j, x in enumerate(row):
            try:
                val = float(x)
            except ValueError:
                _fail(f"{path}[{i}][{j}]", "delay must be a number")
            if not val > 0:
                _fail(f"{path}[{i}][{j}]", f"delay must be positive, got {val}")
            out[-1].append(val)
    return out


def _activation(v, path):
    if isinstance(v, str):
        v = {"shape": v}
    if not isinstance(v, dict):
        _fail(path, "activation must be a shape name or a table")
    extra = set(v) - ACT_KEYS
    if extra:
        _fail(path, f"unknown keys {sorted(extra)}")
    out = {"shape": str(v.get("shape", "sine"))}
    for k in ("lipschitz_const", "bound_const", "saturation"):
        if k in v:
            out[k] = float(v[k])
    if "lipschitz_weight" in v:
        out["lipschitz_weight"] = _text(v["lipschitz_weight"], f"{path}.lipschitz_weight")
    if "table" in v:
        out["table"] = [[float(x), float(y)] for x, y in v["table"]]
    return out


def _normalize_model(raw: dict) -> dict:
    extra = set(raw) - MODEL_KEYS
    if extra:
        _fail("model", f"unknown keys {sorted(extra)}")
    n = raw.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        _fail("model.n", "must be a positive integer")
    floor = float(raw.get("domain_floor", 0.0))
    if "c" not in raw:
        _fail("model.c", "missing")
    out = {"n": n, "domain_floor": floor}
    zeros = {"I": ["0"] * n, "d": [["0"] * n for _ in range(n)],
             "a": [["0"] * n for _ in range(n)],
             "b": [[["0"] * n for _ in range(n)] for _ in range(n)]}
    shapes = {"c": (n,), "I": (n,), "d": (n, n), "a": (n, n), "b": (n, n, n)}
    for key, shape in shapes.items():
        out[key] = _array(raw[key], shape, f"model.{key}") if key in raw else zeros[key]
        _check_signals(out[key], f"model.{key}", floor)
    for key in ("tau", "sigma", "nu_delay"):
        out[key] = _delays(raw.get(key), n, f"model.{key}")
    hist = _array(raw.get("history", ["0"] * n), (n,), "model.history")
    for k, h in enumerate(hist):
        try:
            compile_expression(h)
        except PapdynError as exc:
            _fail(f"model.history[{k}]", str(exc))
    out["history"] = hist
    acts = raw.get("activations", {})
    if not isinstance(acts, dict) or set(acts) - {"f", "g", "h"}:
        _fail("model.activations", "expected a table with keys f, g, h")
    out["activations"] = {}
    for key in ("f", "g", "h"):
        lst = acts.get(key, ["sine"] * n)
        if not isinstance(lst, list) or len(lst) != n:
            _fail(f"model.activations.{key}", f"expected a list of {n} activations")
        out["activations"][key] = [_activation(x, f"model.activations.{key}[{j}]")
                                   for j, x in enumerate(lst)]
    return out


def _normalize_measure(raw, path):
    if raw is None:
        return {"density": "1"}
    if not isinstance(raw, dict):
        _fail(path, "expected a table")
    if "density" in raw and set(raw) == {"density"}:
        out = {"density": _text(raw["density"], f"{path}.density")}
    elif set(raw) == {"left", "right"}:
        out = {"left": _text(raw["left"], f"{path}.left"),
               "right": _text(raw["right"], f"{path}.right")}
    else:
        _fail(path, "give either 'density' or both 'left' and 'right'")
    for k, v in out.items():
        try:
            compile_expression(v)
        except PapdynError as exc:
            _fail(f"{path}.{k}", str(exc))
    return out


def _normalize_section(name, raw):
    base = copy.deepcopy(DEFAULTS[name])
    if raw is None:
        return base
    if not isinstance(raw, dict):
        _fail(name, "expected a table")
    extra = set(raw) - set(base)
    if extra:
        _fail(name, f"unknown keys {sorted(extra)}")
    for k, v in raw.items():
        dv = base[k]
        if isinstance(dv, list):
            if not isinstance(v, list):
                _fail(f"{name}.{k}", "expected a list")
            base[k] = [float(x) for x in v]
        elif isinstance(dv, str):
            base[k] = str(v)
        elif isinstance(dv, int) and not isinstance(dv, bool):
            if not isinstance(v, int) or isinstance(v, bool):
                _fail(f"{name}.{k}", "expected an integer")
            base[k] = v
        else:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                _fail(f"{name}.{k}", "expected a number")
            base[k] = float(v)
    return base


@dataclass
class RunConfig:
    """Validated, normalized configuration; equality is field by field."""

    model_spec: dict
    mu_spec: dict
    nu_spec: dict
    windows: dict | None
    tolerances: dict
    picard: dict
    simulate: dict
    stability: dict
    ergodic: dict
    outputs: dict
    name: str = field(default="config", compare=False)

    def build_model(self) -> NetModel:
        s = self.model_spec
        floor = s["domain_floor"]

        def act(d):
            d = dict(d)
            if "lipschitz_weight" in d:
                d["lipschitz_weight"] = parse_signal(d["lipschitz_weight"], t_floor=floor)
            return d

        acts = {k: [act(x) for x in v] for k, v in s["activations"].items()}
        try:
            return NetModel.build(s["n"], s["c"], s["I"], s["d"], s["a"], s["b"], s["tau"],
                                  s["sigma"], s["nu_delay"], acts["f"], acts["g"], acts["h"],
                                  s["history"], domain_floor=floor)
        except ModelValidationError as exc:
            raise ModelValidationError(f"model: {exc}") from exc

    @staticmethod
    def _measure(spec, name):
        if "density" in spec:
            return WeightedMeasure.from_density(spec["density"], name=name)
        return WeightedMeasure.two_piece(spec["left"], spec["right"], name=name)

    @property
    def mu(self) -> WeightedMeasure:
        return self._measure(self.mu_spec, "mu")

    @property
    def nu(self) -> WeightedMeasure:
        return self._measure(self.nu_spec, "nu")

    def to_dict(self) -> dict:
        out = {"model": copy.deepcopy(self.model_spec),
               "measures": {"mu": dict(self.mu_spec), "nu": dict(self.nu_spec)}}
        if self.windows is not None:
            out["windows"] = dict(self.windows)
        for k in ("tolerances", "picard", "simulate", "stability", "ergodic", "outputs"):
            out[k] = copy.deepcopy(getattr(self, k))
        return out


def config_from_dict(raw: dict, name: str = "config") -> RunConfig:
    extra = set(raw) - SECTIONS
    if extra:
        _fail("<root>", f"unknown sections {sorted(extra)}")
    if "model" not in raw:
        _fail("model", "missing section")
    model = _normalize_model(raw["model"])
    meas = raw.get("measures", {})
    if not isinstance(meas, dict) or set(meas) - {"mu", "nu"}:
        _fail("measures", "expected tables mu and nu")
    windows = None
    if "windows" in raw:
        windows = _normalize_section("windows", raw["windows"])
        if not windows["t_hi"] > windows["t_lo"]:
            _fail("windows", "t_hi must exceed t_lo")
    tol = _normalize_section("tolerances", raw.get("tolerances"))
    for k, v in tol.items():
        if not v > 0:
            _fail(f"tolerances.{k}", "must be positive")
    cfg = RunConfig(model, _normalize_measure(meas.get("mu"), "measures.mu"),
                    _normalize_measure(meas.get("nu"), "measures.nu"), windows, tol,
                    _normalize_section("picard", raw.get("picard")),
                    _normalize_section("simulate", raw.get("simulate")),
                    _normalize_section("stability", raw.get("stability")),
                    _normalize_section("ergodic", raw.get("ergodic")),
                    _normalize_section("outputs", raw.get("outputs")), name=name)
    cfg.build_model()
    return cfg


def parse_config(text: str, name: str = "config") -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{name}: TOML syntax error: {exc}") from exc
    return config_from_dict(raw, name)


def emit_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def shipped_configs() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("papdyn.configs").iterdir()
                  if p.name.endswith(".toml"))


def load_config(ref: str) -> RunConfig:
    """Load from a path, or by name from the shipped configurations."""
    path = Path(ref)
    if path.is_file():
        return parse_config(path.read_text(), name=path.stem)
    key = ref[:-5] if ref.endswith(".toml") else ref
    if key in shipped_configs():
        return parse_config(resources.files("papdyn.configs").joinpath(key + ".toml").read_text(),
                            name=key)
    raise ConfigError(f"config {ref!r} is neither a file nor a shipped config "
                      f"({', '.join(shipped_configs())})")
