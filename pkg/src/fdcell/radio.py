"""Transmission modes and per-link SINR / rate evaluation.

The cell runs one schedule per slot.  Half-duplex schedules activate a
single link; full-duplex schedules activate two, and the second transmitter
leaks into the first receiver (and vice versa).  Self-interference at a BS
that transmits and receives simultaneously is its transmit power scaled by
the residual-SI factor.  UEs never transmit and receive in the same slot,
which is why there is no access-UL/access-DL mode with u == d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class ModeKind(Enum):
    FDD = "fdd"        # backhaul DL + access DL
    FDU = "fdu"        # access UL + backhaul UL
    FDB = "fdb"        # backhaul DL + backhaul UL
    FDA = "fda"        # access DL + access UL (different UEs)
    HD_BDL = "hd-bdl"  # backhaul DL only
    HD_BUL = "hd-bul"  # backhaul UL only
    HD_ADL = "hd-adl"  # access DL only
    HD_AUL = "hd-aul"  # access UL only


FD_KINDS = (ModeKind.FDD, ModeKind.FDU, ModeKind.FDB, ModeKind.FDA)
HD_KINDS = (ModeKind.HD_BDL, ModeKind.HD_BUL, ModeKind.HD_ADL, ModeKind.HD_AUL)

_NEEDS_DL_UE = {ModeKind.FDD, ModeKind.FDA, ModeKind.HD_ADL}
_NEEDS_UL_UE = {ModeKind.FDU, ModeKind.FDA, ModeKind.HD_AUL}


class LinkKind(Enum):
    BACKHAUL_DL = "backhaul-dl"  # macro -> small
    BACKHAUL_UL = "backhaul-ul"  # small -> macro
    ACCESS_DL = "access-dl"      # small -> UE
    ACCESS_UL = "access-ul"      # UE -> small


@dataclass(frozen=True)
class Link:
    kind: LinkKind
    ue: int | None = None  # 1-based UE index for access links


@dataclass(frozen=True)
class Mode:
    """One schedule: a mode kind plus the UE indices it involves."""

    kind: ModeKind
    dl_ue: int | None = None
    ul_ue: int | None = None

    def __post_init__(self):
        if (self.dl_ue is not None) != (self.kind in _NEEDS_DL_UE):
            raise ValueError(f"{self.kind.value} requires dl_ue iff it serves an access DL link")
        if (self.ul_ue is not None) != (self.kind in _NEEDS_UL_UE):
            raise ValueError(f"{self.kind.value} requires ul_ue iff it serves an access UL link")
        if self.kind is ModeKind.FDA and self.dl_ue == self.ul_ue:
            raise ValueError("access UL and access DL cannot target the same UE in one slot")

    @property
    def is_fd(self) -> bool:
        return self.kind in FD_KINDS

    def links(self) -> tuple[Link, ...]:
        k = self.kind
        if k is ModeKind.FDD:
            return (Link(LinkKind.BACKHAUL_DL), Link(LinkKind.ACCESS_DL, self.dl_ue))
        if k is ModeKind.FDU:
            return (Link(LinkKind.ACCESS_UL, self.ul_ue), Link(LinkKind.BACKHAUL_UL))
        if k is ModeKind.FDB:
            return (Link(LinkKind.BACKHAUL_DL), Link(LinkKind.BACKHAUL_UL))
        if k is ModeKind.FDA:
            return (Link(LinkKind.ACCESS_DL, self.dl_ue), Link(LinkKind.ACCESS_UL, self.ul_ue))
        if k is ModeKind.HD_BDL:
            return (Link(LinkKind.BACKHAUL_DL),)
        if k is ModeKind.HD_BUL:
            return (Link(LinkKind.BACKHAUL_UL),)
        if k is ModeKind.HD_ADL:
            return (Link(LinkKind.ACCESS_DL, self.dl_ue),)
        return (Link(LinkKind.ACCESS_UL, self.ul_ue),)

    def label(self) -> str:
        parts = [self.kind.value]
        if self.dl_ue is not None:
            parts.append(f"d{self.dl_ue}")
        if self.ul_ue is not None:
            parts.append(f"u{self.ul_ue}")
        return ":".join(parts)


@dataclass(frozen=True)
class PowerVector:
    """Transmit powers in watts; inactive transmitters stay at zero."""

    p_macro: float = 0.0
    p_small: float = 0.0
    p_ue: float = 0.0  # power of the mode's uplink UE, if any

    def __post_init__(self):
        if min(self.p_macro, self.p_small, self.p_ue) < 0.0:
            raise ValueError("powers must be non-negative")


def _check_bounds(powers: PowerVector, channel) -> None:
    tol = 1.0 + 1e-9
    if powers.p_macro > channel.p_macro_max_w * tol:
        raise ValueError("macro power above its maximum")
    if powers.p_small > channel.p_small_max_w * tol:
        raise ValueError("small-cell power above its maximum")
    if powers.p_ue > channel.p_ue_max_w * tol:
        raise ValueError("UE power above its maximum")


def sinr(mode: Mode, powers: PowerVector, channel) -> tuple[float, ...]:
    """Per-link SINR for `mode`, aligned with `mode.links()`.

    FD modes see cross interference plus residual self-interference at a BS
    that receives while transmitting; HD modes are interference free.  A
    link whose transmitter is powered off gets SINR 0.
    """
    _check_bounds(powers, channel)
    pm, ps, pu = powers.p_macro, powers.p_small, powers.p_ue
    k = mode.kind
    if k is ModeKind.FDD:
        d = mode.dl_ue
        s_backhaul = pm * channel.g_ms() / (ps * channel.sic_small + channel.noise_small_w)
        s_access = ps * channel.g_sd(d) / (pm * channel.g_md(d) + channel.noise_ue_w)
        return (s_backhaul, s_access)
    if k is ModeKind.FDU:
        u = mode.ul_ue
        s_access = pu * channel.g_us(u) / (ps * channel.sic_small + channel.noise_small_w)
        s_backhaul = ps * channel.g_sm() / (pu * channel.g_um(u) + channel.noise_macro_w)
        return (s_access, s_backhaul)
    if k is ModeKind.FDB:
        s_dl = pm * channel.g_ms() / (ps * channel.sic_small + channel.noise_small_w)
        s_ul = ps * channel.g_sm() / (pm * channel.sic_macro + channel.noise_macro_w)
        return (s_dl, s_ul)
    if k is ModeKind.FDA:
        u, d = mode.ul_ue, mode.dl_ue
        s_dl = ps * channel.g_sd(d) / (pu * channel.g_ud(u, d) + channel.noise_ue_w)
        s_ul = pu * channel.g_us(u) / (ps * channel.sic_small + channel.noise_small_w)
        return (s_dl, s_ul)
    if k is ModeKind.HD_BDL:
        return (pm * channel.g_ms() / channel.noise_small_w,)
    if k is ModeKind.HD_BUL:
        return (ps * channel.g_sm() / channel.noise_macro_w,)
    if k is ModeKind.HD_ADL:
        return (ps * channel.g_sd(mode.dl_ue) / channel.noise_ue_w,)
    return (pu * channel.g_us(mode.ul_ue) / channel.noise_small_w,)


def spectral_efficiency(sinr_linear: float, cap: float = 7.0) -> float:
    """Shannon spectral efficiency in b/s/Hz, capped to model a finite
    modulation-and-coding set."""
    if sinr_linear < 0.0:
        raise ValueError("SINR must be non-negative")
    return min(math.log2(1.0 + sinr_linear), cap)


@dataclass(frozen=True)
class LinkRates:
    """Per-link SINR, capped spectral efficiency and bits served in a slot."""

    sinr: tuple[float, ...]
    se: tuple[float, ...]
    bits: tuple[float, ...]


def link_rate(
    mode: Mode,
    powers: PowerVector,
    channel,
    bandwidth_hz: float,
    slot_s: float,
    cap: float = 7.0,
) -> LinkRates:
    """Bits deliverable on each of the mode's links in one slot."""
    sinrs = sinr(mode, powers, channel)
    ses = tuple(spectral_efficiency(s, cap) for s in sinrs)
    bits = tuple(se * bandwidth_hz * slot_s for se in ses)
    return LinkRates(sinr=sinrs, se=ses, bits=bits)


def mode_sinr_rows(channel, n_ues: int, cap: float = 7.0) -> list[dict]:
    """Debug table: every mode at max powers with its per-link SINR and SE."""
    from .scheduler import enumerate_schedules  # local import avoids a cycle

    rows = []
    for mode in enumerate_schedules(n_ues):
        powers = max_power_vector(mode, channel)
        rates = link_rate(mode, powers, channel, channel.bandwidth_hz, 1.0, cap)
        for link, s, se in zip(mode.links(), rates.sinr, rates.se):
            rows.append(
                {
                    "mode": mode.label(),
                    "link": link.kind.value,
                    "ue": link.ue if link.ue is not None else "",
                    "sinr_db": 10.0 * math.log10(s) if s > 0 else float("-inf"),
                    "se_bps_hz": se,
                }
            )
    return rows


def max_power_vector(mode: Mode, channel) -> PowerVector:
    """Every active transmitter of `mode` at its maximum power."""
    transmitters = set()
    for link in mode.links():
        if link.kind is LinkKind.BACKHAUL_DL:
            transmitters.add("macro")
        elif link.kind in (LinkKind.BACKHAUL_UL, LinkKind.ACCESS_DL):
            transmitters.add("small")
        else:
            transmitters.add("ue")
    return PowerVector(
        p_macro=channel.p_macro_max_w if "macro" in transmitters else 0.0,
        p_small=channel.p_small_max_w if "small" in transmitters else 0.0,
        p_ue=channel.p_ue_max_w if "ue" in transmitters else 0.0,
    )
