"""Small unit-conversion helpers shared across the package."""
from __future__ import annotations

import math


def db_to_linear(db: float) -> float:
    """Convert a dB value to a linear power ratio."""
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    """Convert a linear power ratio to dB. Requires x > 0."""
    if x <= 0.0:
        raise ValueError("linear value must be positive to express in dB")
    return 10.0 * math.log10(x)


def dbm_to_watt(dbm: float) -> float:
    """Convert a power in dBm to watts."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    """Convert a power in watts to dBm. Requires watt > 0."""
    if watt <= 0.0:
        raise ValueError("power must be positive to express in dBm")
    return 30.0 + 10.0 * math.log10(watt)


def thermal_noise_watt(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Receiver noise power over `bandwidth_hz` for the given noise figure.

    Thermal floor is -174 dBm/Hz; the noise figure adds on top.
    """
    if bandwidth_hz <= 0.0:
        raise ValueError("bandwidth must be positive")
    noise_dbm = -174.0 + 10.0 * math.log10(bandwidth_hz) + noise_figure_db
    return dbm_to_watt(noise_dbm)
