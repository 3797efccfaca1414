"""Node placement, path loss and static channel realization.

One drop consists of a macro BS at the origin, a small-cell BS inside the
macro disc, and N UEs inside the small-cell disc.  The channel realization
assigns every node pair a linear power gain built from a distance-dependent
path loss, a LOS/NLOS state, log-normal shadowing and (backhaul only) a
directional antenna bonus.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import ChannelConfig
from .units import db_to_linear, dbm_to_watt, thermal_noise_watt

MACRO = "M"
SMALL = "S"
# UEs are addressed by their 1-based integer index.


class LinkClass(Enum):
    MBS_SBS = "mbs-sbs"
    MBS_UE = "mbs-ue"
    SBS_UE = "sbs-ue"
    UE_UE = "ue-ue"


# Path-loss models per link class: intercept + slope * log10(R[km]), split
# by LOS state.  The UE-UE class is distance-branched instead (see below).
_PL_LOS = {
    LinkClass.MBS_SBS: (100.7, 23.5),
    LinkClass.MBS_UE: (103.4, 24.2),
    LinkClass.SBS_UE: (103.8, 20.9),
}
_PL_NLOS = {
    LinkClass.MBS_SBS: (125.2, 36.3),
    LinkClass.MBS_UE: (131.1, 42.8),
    LinkClass.SBS_UE: (145.4, 37.5),
}


def path_loss_db(
    link_class: LinkClass,
    distance_km: float,
    los: bool = False,
    min_distance_m: float = 1.0,
) -> float:
    """Path loss in dB for one link class at the given distance.

    Distances below `min_distance_m` are clamped up to it, so the formula
    never sees a degenerate range.  The UE-UE class ignores `los` and
    branches on distance: up to 50 m the near-field model applies with the
    range in km, beyond that the far model applies with the range in meters.
    """
    d_km = max(distance_km, min_distance_m / 1000.0)
    if link_class is LinkClass.UE_UE:
        if d_km <= 0.050:
            return 98.45 + 20.0 * math.log10(d_km)
        return 55.78 + 40.0 * math.log10(d_km * 1000.0)
    a, b = (_PL_LOS if los else _PL_NLOS)[link_class]
    return a + b * math.log10(d_km)


def los_probability(link_class: LinkClass, distance_m: float, config: ChannelConfig) -> float:
    """LOS probability under the configured profile."""
    if config.los_profile == "always-nlos":
        return 0.0
    if config.los_profile == "always-los":
        return 1.0
    if config.los_profile == "exp-decay":
        decay = {
            LinkClass.MBS_SBS: config.los_decay_mbs_sbs_m,
            LinkClass.MBS_UE: config.los_decay_mbs_ue_m,
            LinkClass.SBS_UE: config.los_decay_sbs_ue_m,
            LinkClass.UE_UE: config.los_decay_ue_ue_m,
        }[link_class]
        return math.exp(-distance_m / decay)
    raise ValueError(f"unknown los_profile {config.los_profile!r}")


def _shadow_std_db(link_class: LinkClass, los: bool, config: ChannelConfig) -> float:
    if link_class is LinkClass.MBS_SBS:
        return config.shadow_std_mbs_sbs_db
    if link_class is LinkClass.MBS_UE:
        return config.shadow_std_mbs_ue_db
    if link_class is LinkClass.SBS_UE:
        return config.shadow_std_sbs_ue_los_db if los else config.shadow_std_sbs_ue_nlos_db
    return config.shadow_std_ue_ue_db


@dataclass(frozen=True)
class Topology:
    """Node positions plus per-kind RF limits for one drop."""

    macro_pos: tuple[float, float]
    small_pos: tuple[float, float]
    ue_pos: tuple[tuple[float, float], ...]
    p_macro_max_w: float
    p_small_max_w: float
    p_ue_max_w: float
    backhaul_loss_db: float | None = None  # pinned MBS-SBS loss, if any

    @property
    def n_ues(self) -> int:
        return len(self.ue_pos)

    def position(self, node) -> tuple[float, float]:
        if node == MACRO:
            return self.macro_pos
        if node == SMALL:
            return self.small_pos
        return self.ue_pos[int(node) - 1]

    def distance_m(self, a, b) -> float:
        xa, ya = self.position(a)
        xb, yb = self.position(b)
        return math.hypot(xa - xb, ya - yb)


def _uniform_disc(rng: np.random.Generator, radius: float) -> tuple[float, float]:
    r = radius * math.sqrt(rng.uniform())
    theta = rng.uniform(0.0, 2.0 * math.pi)
    return (r * math.cos(theta), r * math.sin(theta))


def backhaul_distance_for_loss(loss_db: float) -> float:
    """MBS-SBS distance (m) whose median non-LOS loss equals `loss_db`."""
    a, b = _PL_NLOS[LinkClass.MBS_SBS]
    return 1000.0 * 10.0 ** ((loss_db - a) / b)


def drop_topology(rng_seed, n_ues: int, config: ChannelConfig) -> Topology:
    """Place the macro BS, the small-cell BS and N UEs for one drop.

    The macro BS sits at the origin.  The small BS is placed at the
    configured fixed distance if one is given; otherwise a pinned backhaul
    loss puts it at the distance whose median non-LOS loss equals the pin,
    so the rest of the geometry tracks the backhaul quality — a strong
    backhaul means a close macro BS whose transmissions press hard on the
    small cell's users, a weak one means a distant macro heard faintly.
    With neither setting the small BS lands uniformly in the macro disc.
    UEs are placed uniformly in the small-cell disc.
    """
    config.validate()
    if n_ues < 1:
        raise ValueError("n_ues must be >= 1")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)

    max_center_radius = config.macro_radius_m
    if config.require_containment:
        max_center_radius = config.macro_radius_m - config.small_radius_m
        if max_center_radius <= 0.0:
            raise ValueError("small-cell disc cannot fit inside the macro disc")

    if config.backhaul_distance_m is not None:
        if config.require_containment and config.backhaul_distance_m > max_center_radius:
            raise ValueError("fixed backhaul distance places the small cell outside the macro disc")
        small = (config.backhaul_distance_m, 0.0)
    elif config.backhaul_loss_db is not None:
        d = backhaul_distance_for_loss(config.backhaul_loss_db)
        d = min(max(d, config.min_distance_m), max_center_radius)
        small = (d, 0.0)
    else:
        small = _uniform_disc(rng, max_center_radius)

    ues = []
    for _ in range(n_ues):
        dx, dy = _uniform_disc(rng, config.small_radius_m)
        ues.append((small[0] + dx, small[1] + dy))

    return Topology(
        macro_pos=(0.0, 0.0),
        small_pos=small,
        ue_pos=tuple(ues),
        p_macro_max_w=dbm_to_watt(config.max_power_macro_dbm),
        p_small_max_w=dbm_to_watt(config.max_power_small_dbm),
        p_ue_max_w=dbm_to_watt(config.max_power_ue_dbm),
        backhaul_loss_db=config.backhaul_loss_db,
    )


@dataclass(frozen=True)
class LinkRecord:
    """Per-pair realization detail, kept for CSV dumps and debugging."""

    src: str
    dst: str
    distance_m: float
    los: bool
    path_loss_db: float
    gain_db: float


@dataclass
class ChannelState:
    """Static linear gains plus receiver noise and residual-SI factors."""

    n_ues: int
    gain: dict  # (node, node) -> linear power gain, symmetric by construction
    sic_small: float  # residual self-interference power ratio at the small BS
    sic_macro: float
    noise_macro_w: float
    noise_small_w: float
    noise_ue_w: float
    p_macro_max_w: float
    p_small_max_w: float
    p_ue_max_w: float
    bandwidth_hz: float
    links: list = field(default_factory=list)  # list[LinkRecord]

    def g(self, a, b) -> float:
        return self.gain[(a, b)]

    # Named accessors for the links the rate equations use.
    def g_ms(self) -> float:
        return self.gain[(MACRO, SMALL)]

    def g_sm(self) -> float:
        return self.gain[(SMALL, MACRO)]

    def g_sd(self, d: int) -> float:
        return self.gain[(SMALL, d)]

    def g_md(self, d: int) -> float:
        return self.gain[(MACRO, d)]

    def g_us(self, u: int) -> float:
        return self.gain[(u, SMALL)]

    def g_um(self, u: int) -> float:
        return self.gain[(u, MACRO)]

    def g_ud(self, u: int, d: int) -> float:
        return self.gain[(u, d)]

    def max_power(self, node) -> float:
        if node == MACRO:
            return self.p_macro_max_w
        if node == SMALL:
            return self.p_small_max_w
        return self.p_ue_max_w

    def with_fast_fading(self, rng: np.random.Generator) -> "ChannelState":
        """New state with i.i.d. unit-mean exponential power fading per
        directed link.  Reciprocity does not survive this draw."""
        faded = {key: g * rng.exponential(1.0) for key, g in self.gain.items()}
        return ChannelState(
            n_ues=self.n_ues,
            gain=faded,
            sic_small=self.sic_small,
            sic_macro=self.sic_macro,
            noise_macro_w=self.noise_macro_w,
            noise_small_w=self.noise_small_w,
            noise_ue_w=self.noise_ue_w,
            p_macro_max_w=self.p_macro_max_w,
            p_small_max_w=self.p_small_max_w,
            p_ue_max_w=self.p_ue_max_w,
            bandwidth_hz=self.bandwidth_hz,
            links=self.links,
        )


def _link_class(a, b) -> LinkClass:
    kinds = {a if isinstance(a, str) else "U", b if isinstance(b, str) else "U"}
    if kinds == {MACRO, SMALL}:
        return LinkClass.MBS_SBS
    if kinds == {MACRO, "U"}:
        return LinkClass.MBS_UE
    if kinds == {SMALL, "U"}:
        return LinkClass.SBS_UE
    if kinds == {"U"}:
        return LinkClass.UE_UE
    raise ValueError(f"cannot classify link {a!r}-{b!r}")


def _node_label(node) -> str:
    return node if isinstance(node, str) else f"U{int(node)}"


def realize_channel(topology: Topology, rng, config: ChannelConfig) -> ChannelState:
    """Draw LOS states and shadowing for every node pair of one drop.

    Gains are reciprocal: each unordered pair gets one LOS draw and one
    shadowing draw.  A pinned backhaul loss bypasses both (the bin is meant
    to be exact); the directional antenna bonus still applies to it.
    """
    config.validate()
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    n = topology.n_ues
    nodes = [MACRO, SMALL] + list(range(1, n + 1))

    bonus_backhaul_db = 2.0 * config.boresight_gain_db()  # one gain per antenna end

    gains: dict = {}
    records: list[LinkRecord] = []
    for i, a in enumerate(nodes):
        for b in nodes[i + 1 :]:
            cls = _link_class(a, b)
            dist = topology.distance_m(a, b)
            if cls is LinkClass.MBS_SBS and topology.backhaul_loss_db is not None:
                los = False
                pl = topology.backhaul_loss_db
                shadow = 0.0
            else:
                los = rng.uniform() < los_probability(cls, dist, config)
                pl = path_loss_db(cls, dist / 1000.0, los, config.min_distance_m)
                shadow = rng.normal(0.0, _shadow_std_db(cls, los, config))
            ant = bonus_backhaul_db if cls is LinkClass.MBS_SBS else 0.0
            gain_db = -pl - shadow + ant
            g = db_to_linear(gain_db)
            gains[(a, b)] = g
            gains[(b, a)] = g
            records.append(
                LinkRecord(
                    src=_node_label(a),
                    dst=_node_label(b),
                    distance_m=dist,
                    los=los,
                    path_loss_db=pl,
                    gain_db=gain_db,
                )
            )

    return ChannelState(
        n_ues=n,
        gain=gains,
        sic_small=db_to_linear(-config.sic_db),
        sic_macro=db_to_linear(-config.sic_db),
        noise_macro_w=thermal_noise_watt(config.bandwidth_hz, config.noise_figure_macro_db),
        noise_small_w=thermal_noise_watt(config.bandwidth_hz, config.noise_figure_small_db),
        noise_ue_w=thermal_noise_watt(config.bandwidth_hz, config.noise_figure_ue_db),
        p_macro_max_w=topology.p_macro_max_w,
        p_small_max_w=topology.p_small_max_w,
        p_ue_max_w=topology.p_ue_max_w,
        bandwidth_hz=config.bandwidth_hz,
        links=records,
    )


def write_channel_csv(state: ChannelState, path: str) -> None:
    """Dump the realized links as CSV: src,dst,distance_m,los,path_loss_db,gain_db."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst", "distance_m", "los", "path_loss_db", "gain_db"])
        for rec in state.links:
            writer.writerow(
                [
                    rec.src,
                    rec.dst,
                    f"{rec.distance_m:.3f}",
                    int(rec.los),
                    f"{rec.path_loss_db:.4f}",
                    f"{rec.gain_db:.4f}",
                ]
            )
