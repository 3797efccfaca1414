"""Shared fixtures: deterministic drops at the three backhaul-loss bins."""
from __future__ import annotations

import numpy as np
import pytest

from fdcell.config import ChannelConfig, RunConfig, TrafficConfig
from fdcell.scheduler import PowerCache
from fdcell.topology import drop_topology, realize_channel

N_UES = 10
BANDWIDTH_HZ = 1.0e7
SLOT_S = 0.005


def make_channel(backhaul_loss_db: float | None = 100.0, seed: int = 7, n_ues: int = N_UES,
                 **channel_kwargs):
    """One realized drop with a pinned backhaul loss (None for random)."""
    cfg = ChannelConfig(backhaul_loss_db=backhaul_loss_db, **channel_kwargs)
    rng = np.random.default_rng(seed)
    topo = drop_topology(rng, n_ues, cfg)
    return realize_channel(topo, rng, cfg)


def make_cache(channel, power_rule: str = "pa", include_fd: bool = True, **kwargs) -> PowerCache:
    return PowerCache(
        channel, channel.n_ues, BANDWIDTH_HZ, SLOT_S,
        power_rule=power_rule, include_fd=include_fd, **kwargs,
    )


@pytest.fixture(scope="session")
def channel_100():
    return make_channel(100.0)


@pytest.fixture(scope="session")
def channel_74():
    return make_channel(74.0)


@pytest.fixture(scope="session")
def channel_119():
    return make_channel(119.0)


@pytest.fixture(scope="session")
def cache_100(channel_100):
    return make_cache(channel_100)


def tiny_run_config(**overrides) -> RunConfig:
    """A config small enough for in-test simulation."""
    defaults = dict(
        channel=ChannelConfig(backhaul_loss_db=100.0),
        traffic=TrafficConfig(model="ftp", mean_reading_time_s=1.0),
        n_ues=N_UES,
        duration_s=2.0,
        slot_s=SLOT_S,
        n_drops=1,
        seed=3,
        variant="fd-pa",
        log_decisions=False,
    )
    defaults.update(overrides)
    return RunConfig(**defaults)
