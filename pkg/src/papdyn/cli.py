"""Command-line front end.

``papdyn <check|simulate|solve|stability|ergodic> --config <path|name>
[--out DIR] [--step H] [--tol EPS]``

Exit codes: 0 all verdicts pass, 1 a verdict fails, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import dde, fixedpoint, stability
from .config import RunConfig, load_config, shipped_configs
from .errors import ConfigError, ModelValidationError, NumericalError, PapdynError
from .funcmodel import decompose
from .measures import ergodicity_trend
from .netmodel import HypothesisOptions, check_hypotheses
from .report import render_text, write_report

COMMANDS = ("check", "simulate", "solve", "stability", "ergodic")
EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _check(cfg: RunConfig, out: Path):
    rep = check_hypotheses(cfg.build_model(), cfg.mu, cfg.nu,
                           HypothesisOptions(z_schedule=tuple(cfg.ergodic["z_schedule"]),
                                             ergodic_threshold=cfg.ergodic["threshold"]))
    return rep.to_dict(), rep.overall


def _simulate(cfg: RunConfig, out: Path):
    model = cfg.build_model()
    s, h = cfg.simulate, cfg.tolerances["step"]
    traj = dde.integrate(model, s["t_end"], h, t0=s["t0"])
    out.mkdir(parents=True, exist_ok=True)
    dde.write_csv(traj, out / "trajectory.csv")
    return {"t0": s["t0"], "t_end": traj.t_end, "step": h, "nodes": len(traj.values),
            "final_state": traj.values[-1], "max_abs": float(np.max(np.abs(traj.values))),
            "csv": "trajectory.csv"}, True


def _solve(cfg: RunConfig, out: Path):
    model = cfg.build_model()
    tol = cfg.tolerances["tol"]
    window = None if cfg.windows is None else (cfg.windows["t_lo"], cfg.windows["t_hi"])
    try:
        res = fixedpoint.picard_solve(model, tol=tol, max_iter=cfg.picard["max_iter"],
                                      step=cfg.tolerances["step"], window=window,
                                      eps_tail=cfg.tolerances["eps_tail"])
    except ModelValidationError as exc:
        return {"status": "not solved", "reason": str(exc)}, False
    out.mkdir(parents=True, exist_ok=True)
    fixedpoint.write_candidate_csv(res.solution, out / "solution.csv", res.comparison_start)
    inside = res.ball_margin is not None and res.ball_margin >= -res.radius * 1e-6
    ok = res.converged and res.residual <= 10 * tol and inside
    return {"converged": res.converged, "iterations": res.iterations,
            "empirical_ratio": res.empirical_ratio, "q1": res.q_constant,
            "residual": res.residual, "ball_radius": res.radius,
            "ball_margin": res.ball_margin, "inside_ball": inside,
            "window": [res.solution.t_lo, res.solution.t_hi],
            "comparison_start": res.comparison_start, "notes": res.notes,
            "iteration_table": res.iteration_table(), "csv": "solution.csv"}, ok


def random_history_pair(rng: np.random.Generator, n: int):
    """Smooth random histories: ``alpha + beta sin(omega t)`` against a constant."""
    alpha, beta, gamma = rng.uniform(-1, 1, (3, n))
    omega = rng.uniform(0.5, 2.0, n)

    def ha(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))[:, None]
        return alpha + beta * np.sin(omega * s)

    def hb(s):
        return np.tile(gamma, (np.size(s), 1))

    return ha, hb


def _stability(cfg: RunConfig, out: Path):
    model = cfg.build_model()
    st = cfg.stability
    cert = stability.decay_rate(model, st["safety"])
    rng = np.random.default_rng(st["seed"])
    out.mkdir(parents=True, exist_ok=True)
    pairs = []
    for k in range(st["pairs"]):
        ha, hb = random_history_pair(rng, model.n)
        rep = stability.verify_decay(model, ha, hb, cert, st["horizon"],
                                     cfg.tolerances["step"], cfg.simulate["t0"])
        stability.write_envelope_csv(rep, out / f"envelope_{k}.csv")
        pairs.append({"pair": k, **rep.summary()})
    ok = cert.valid and all(p["holds"] for p in pairs)
    return {"certificate": cert.to_dict(), "envelopes": pairs}, ok


def _ergodic(cfg: RunConfig, out: Path):
    model = cfg.build_model()
    mu, nu = cfg.mu, cfg.nu
    rows, ok = [], True
    for name, e in model.all_signals():
        _, erg = decompose(e)
        if erg.is_zero:
            continue
        v = ergodicity_trend(erg, mu, nu, cfg.ergodic["z_schedule"], cfg.ergodic["threshold"])
        ok &= v.passed
        rows.append({"signal": name, "ergodic_part": erg.to_text(), "passed": v.passed,
                     "final_remainder": v.remainders[-1], "trend_slope": v.trend_slope,
                     "note": v.domain_note})
    return {"z_schedule": cfg.ergodic["z_schedule"], "signals": rows}, ok


HANDLERS = {"check": _check, "simulate": _simulate, "solve": _solve,
            "stability": _stability, "ergodic": _ergodic}


def run_command(cfg: RunConfig, command: str, out_dir=None) -> tuple[dict, int]:
    """Run one command; returns the report dict and the exit status."""
    if command not in HANDLERS:
        raise ConfigError(f"unknown command {command!r}")
    out = Path(out_dir if out_dir is not None else cfg.outputs["dir"])
    body, ok = HANDLERS[command](cfg, out)
    report = {"command": command, "config": cfg.name, "status": "pass" if ok else "fail",
              "result": body}
    write_report(report, out, command)
    return report, EXIT_OK if ok else EXIT_VERDICT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="papdyn", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True,
                   help=f"TOML path or shipped name ({', '.join(shipped_configs())})")
    p.add_argument("--out", help="output directory (default from config)")
    p.add_argument("--step", type=float, help="override tolerances.step")
    p.add_argument("--tol", type=float, help="override tolerances.tol")
    p.add_argument("-q", "--quiet", action="store_true", help="do not print the report")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config)
        for key in ("step", "tol"):
            val = getattr(args, key)
            if val is not None:
                if not val > 0:
                    raise ConfigError(f"--{key} must be positive")
                cfg.tolerances[key] = val
        report, code = run_command(cfg, args.command, args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PapdynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if not args.quiet:
        print(render_text(report), end="")
    return code


if __name__ == "__main__":
    sys.exit(main())
