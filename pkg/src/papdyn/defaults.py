"""Every numeric default used by the command-line tool, in one table.

=====================  ==========================  ============
section.key            meaning                     default
=====================  ==========================  ============
tolerances.step        integration / grid step     1e-3
tolerances.tol         Picard stopping tolerance   1e-8
tolerances.eps_tail    truncated kernel tail       1e-10
picard.max_iter        Picard iteration cap        200
windows.t_lo, t_hi     working window              -40, 40
ergodic.z_schedule     remainder radii             5 ... 160
ergodic.threshold      final remainder bound       1e-2
stability.safety       lambda = safety * min(..)   0.99
stability.horizon      envelope check length       20
stability.pairs        random history pairs        5
stability.seed         RNG seed for the pairs      0
simulate.t0, t_end     integration interval        0, 20
=====================  ==========================  ============

The working window is moved right to start at the model's domain floor
when a coefficient is only declared from that floor on.
"""
from .measures import DEFAULT_Z_SCHEDULE

DEFAULTS = {
    "tolerances": {"step": 1e-3, "tol": 1e-8, "eps_tail": 1e-10},
    "picard": {"max_iter": 200},
    "windows": {"t_lo": -40.0, "t_hi": 40.0},
    "ergodic": {"z_schedule": [float(z) for z in DEFAULT_Z_SCHEDULE], "threshold": 1e-2},
    "stability": {"safety": 0.99, "horizon": 20.0, "pairs": 5, "seed": 0},
    "simulate": {"t0": 0.0, "t_end": 20.0},
    "outputs": {"dir": "papdyn-out"},
}
