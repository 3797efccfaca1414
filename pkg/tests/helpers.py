"""Shared generators for solver tests: random two-link allocation problems
spanning the gain/noise/power ranges the scheduler actually produces."""
from __future__ import annotations

import numpy as np

from fdcell.power import PowerProblem
from fdcell.units import db_to_linear, dbm_to_watt

# Receiver noise floors (10 MHz) and transmit ceilings seen in the cell.
_NOISES_W = (dbm_to_watt(-99.0), dbm_to_watt(-91.0), dbm_to_watt(-95.0))
_P_MAXES_W = (dbm_to_watt(46.0), dbm_to_watt(24.0), dbm_to_watt(23.0))


def random_problem(rng: np.random.Generator, weight_scale: float = 1.0) -> PowerProblem:
    """One random solvable instance.

    Serving gains span strong backhauls to cell-edge access links; cross
    gains span residual self-interference to loud device-to-device paths.
    """
    g1 = db_to_linear(rng.uniform(-125.0, -60.0))
    g2 = db_to_linear(rng.uniform(-125.0, -60.0))
    c1 = db_to_linear(rng.uniform(-160.0, -65.0))
    c2 = db_to_linear(rng.uniform(-160.0, -65.0))
    n1 = _NOISES_W[rng.integers(0, 3)]
    n2 = _NOISES_W[rng.integers(0, 3)]
    p1_max = _P_MAXES_W[rng.integers(0, 3)]
    p2_max = _P_MAXES_W[rng.integers(0, 3)]
    w1 = weight_scale * db_to_linear(rng.uniform(-20.0, 20.0))
    w2 = weight_scale * db_to_linear(rng.uniform(-20.0, 20.0))
    return PowerProblem(
        w1=w1, w2=w2, g1=g1, g2=g2, c1=c1, c2=c2, n1=n1, n2=n2,
        p1_max=p1_max, p2_max=p2_max,
    )
