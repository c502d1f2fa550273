"""Side-by-side text and JSON reports."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def render_text(report: dict) -> str:
    lines = []

    def walk(d, indent):
        for k, v in d.items():
            if isinstance(v, dict):
                lines.append("  " * indent + f"{k}:")
                walk(v, indent + 1)
            elif isinstance(v, list) and v and isinstance(v[0], dict):
                lines.append("  " * indent + f"{k}:")
                for row in v:
                    lines.append("  " * (indent + 1) + ", ".join(f"{a}={_fmt(b)}" for a, b in row.items()))
            else:
                lines.append("  " * indent + f"{k}: {_fmt(v)}")

    walk(_jsonable(report), 0)
    return "\n".join(lines) + "\n"


def render_json(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def write_report(report: dict, out_dir, stem: str = "report") -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    txt, js = out / f"{stem}.txt", out / f"{stem}.json"
    txt.write_text(render_text(report))
    js.write_text(render_json(report))
    return txt, js
