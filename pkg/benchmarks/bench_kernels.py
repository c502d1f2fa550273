"""Compare the compiled and pure-Python kernels on Example 4.1.

    python benchmarks/bench_kernels.py [--horizon 20] [--repeat 3]

Times ``rk4_dde`` through ``dde.integrate`` and ``expo_recursion`` through one
application of the Picard operator, and checks that both backends agree.
"""
import argparse
import time
from unittest import mock

import numpy as np

from papdyn import dde, fixedpoint, kernels
from papdyn.config import load_config


def _best(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def _with_backend(mod, fn):
    with mock.patch.object(kernels, "rk4_dde", mod.rk4_dde), \
            mock.patch.object(kernels, "expo_recursion", mod.expo_recursion):
        return fn()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=float, default=20.0)
    ap.add_argument("--step", type=float, default=1e-3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")

    model = load_config("example_4_1").build_model()
    t_lo, t_hi = fixedpoint.default_window(model)
    op = fixedpoint.GammaOperator(model, t_lo, t_hi, args.step)
    phi = op.phi0()

    jobs = {
        "rk4_dde": lambda: dde.integrate(model, args.horizon, args.step).values,
        "expo_recursion": lambda: op.apply(phi).values,
    }
    print(f"{'kernel':<16}{'compiled [s]':>14}{'pure [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, job in jobs.items():
        tc, vc = _with_backend(kernels.compiled, lambda: _best(job, args.repeat))
        tp, vp = _with_backend(kernels.pure, lambda: _best(job, 1))
        print(f"{name:<16}{tc:>14.4f}{tp:>12.4f}{tp / tc:>10.1f}{np.max(np.abs(vc - vp)):>14.2e}")


if __name__ == "__main__":
    main()
