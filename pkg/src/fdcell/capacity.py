"""Closed-form spectral-efficiency comparison of HD and FD relaying.

This module works on a normalized single-UE picture: all powers are 1 and
every channel parameter is expressed as the SNR (or interference-to-noise
ratio) it produces at its receiver.  Spectral efficiencies here are
deliberately uncapped; the cap belongs to the simulator, not the analysis.

The two FD operating patterns compared against half duplex:
  pattern 1 alternates {backhaul DL + access DL} and {access UL + backhaul UL},
  pattern 2 alternates {both backhaul links} and {both access links}.
Each pattern's end-to-end spectral efficiency per direction is limited by
the weaker of the two hops that carry that direction.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

from .units import db_to_linear


@dataclass(frozen=True)
class LinkBudget:
    """Normalized channel parameters (all linear, unit transmit powers).

    g_* are per-hop SNRs; gamma_direct is the macro-to-UE (and UE-to-macro)
    interference-to-noise ratio, gamma_si the residual self-interference
    ratio at a full-duplex BS, gamma_u2d the UE-to-UE interference ratio.
    """

    g_ms: float
    g_sm: float
    g_sd: float
    g_us: float
    gamma_direct: float = 0.0
    gamma_si: float = 0.0
    gamma_u2d: float = 0.0

    @staticmethod
    def symmetric(base_snr_db: float = 12.0, **kwargs) -> "LinkBudget":
        g = db_to_linear(base_snr_db)
        return LinkBudget(g_ms=g, g_sm=g, g_sd=g, g_us=g, **kwargs)


def _se(sinr: float) -> float:
    return math.log2(1.0 + sinr)


def hd_snrs(budget: LinkBudget) -> tuple[float, float, float, float]:
    """Interference-free per-hop SNRs: (backhaul DL, access DL, access UL,
    backhaul UL)."""
    return (budget.g_ms, budget.g_sd, budget.g_us, budget.g_sm)


def c_hd(budget: LinkBudget) -> float:
    """Half-duplex two-hop spectral efficiency, DL plus UL.

    Each direction gets half the slots and is limited by its weaker hop.
    """
    s_ms, s_sd, s_us, s_sm = hd_snrs(budget)
    return 0.5 * _se(min(s_ms, s_sd)) + 0.5 * _se(min(s_us, s_sm))


def _pattern1_sinrs(budget: LinkBudget) -> tuple[float, float, float, float]:
    """(backhaul DL, access DL, access UL, backhaul UL) under pattern 1."""
    den_si = 1.0 + budget.gamma_si
    den_direct = 1.0 + budget.gamma_direct
    return (
        budget.g_ms / den_si,
        budget.g_sd / den_direct,
        budget.g_us / den_si,
        budget.g_sm / den_direct,
    )


def c_fd_mode1(budget: LinkBudget) -> float:
    """FD pattern 1 spectral efficiency: the downlink pair and the uplink
    pair each run full time, limited by their weaker hop."""
    s_ms, s_sd, s_us, s_sm = _pattern1_sinrs(budget)
    return _se(min(s_ms, s_sd)) + _se(min(s_us, s_sm))


def _pattern2_sinrs(budget: LinkBudget) -> tuple[float, float, float, float]:
    """(backhaul DL, access DL, access UL, backhaul UL) under pattern 2."""
    den_si = 1.0 + budget.gamma_si
    return (
        budget.g_ms / den_si,               # backhaul DL, SI-limited at the small BS
        budget.g_sd / (1.0 + budget.gamma_u2d),  # access DL, UE-to-UE limited
        budget.g_us / den_si,               # access UL, SI-limited at the small BS
        budget.g_sm / den_si,               # backhaul UL, SI-limited at the macro BS
    )


def c_fd_mode2(budget: LinkBudget) -> float:
    """FD pattern 2 spectral efficiency (both-backhaul / both-access slots)."""
    s_ms, s_sd, s_us, s_sm = _pattern2_sinrs(budget)
    return _se(min(s_ms, s_sd)) + _se(min(s_us, s_sm))


@dataclass
class SweepConfig:
    """Sweep one interference parameter with the other held at zero.

    axis selects the swept parameter: "gamma_direct" or "gamma_si".  The
    UE-to-UE ratio tracks the swept parameter at fixed dB offsets, one
    curve per offset.  base_snr_db sets all four per-hop SNRs.
    """

    axis: str = "gamma_direct"
    base_snr_db: float = 12.0
    start_db: float = -10.0
    stop_db: float = 20.0
    step_db: float = 0.5
    u2d_offsets_db: tuple[float, ...] = (-6.0, 0.0, 6.0)

    def validate(self) -> None:
        if self.axis not in ("gamma_direct", "gamma_si"):
            raise ValueError(f"unknown sweep axis {self.axis!r}")
        if self.step_db <= 0.0:
            raise ValueError("step_db must be positive")
        if self.stop_db < self.start_db:
            raise ValueError("stop_db must be >= start_db")

    def grid_db(self) -> list[float]:
        n = int(round((self.stop_db - self.start_db) / self.step_db))
        return [self.start_db + i * self.step_db for i in range(n + 1)]


def fig3_preset() -> SweepConfig:
    """Direct-interference sweep at zero self-interference."""
    return SweepConfig(axis="gamma_direct")


def fig4_preset() -> SweepConfig:
    """Self-interference sweep at zero direct interference."""
    return SweepConfig(axis="gamma_si")


@dataclass
class SweepRow:
    param_db: float
    c_hd: float
    c_fd1: float
    c_fd2: tuple[float, ...]  # one value per u2d offset case


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list[SweepRow]
    # Sweep value (dB) where each FD curve first drops below the HD line,
    # linearly interpolated; None when it never does within the grid.
    crossover_fd1_db: float | None = None
    crossover_fd2_db: dict[float, float | None] = field(default_factory=dict)


def _budget_at(cfg: SweepConfig, param_db: float, u2d_offset_db: float) -> LinkBudget:
    base = LinkBudget.symmetric(cfg.base_snr_db)
    swept = db_to_linear(param_db)
    u2d = db_to_linear(param_db + u2d_offset_db)
    if cfg.axis == "gamma_direct":
        return replace(base, gamma_direct=swept, gamma_si=0.0, gamma_u2d=u2d)
    return replace(base, gamma_direct=0.0, gamma_si=swept, gamma_u2d=u2d)


def _crossover(grid: list[float], curve: list[float], ref: list[float]) -> float | None:
    """First grid point where curve falls below ref, linearly interpolated."""
    for i in range(len(grid)):
        if curve[i] < ref[i]:
            if i == 0:
                return grid[0]
            x0, x1 = grid[i - 1], grid[i]
            d0 = curve[i - 1] - ref[i - 1]
            d1 = curve[i] - ref[i]
            return x0 + (x1 - x0) * d0 / (d0 - d1)
    return None


def sweep(cfg: SweepConfig) -> SweepResult:
    """Evaluate the three capacity expressions across the configured grid."""
    cfg.validate()
    grid = cfg.grid_db()
    if not grid:
        raise ValueError("sweep grid is empty")
    rows = []
    for p in grid:
        b0 = _budget_at(cfg, p, 0.0)
        fd2 = tuple(c_fd_mode2(_budget_at(cfg, p, off)) for off in cfg.u2d_offsets_db)
        rows.append(SweepRow(param_db=p, c_hd=c_hd(b0), c_fd1=c_fd_mode1(b0), c_fd2=fd2))

    hd_curve = [r.c_hd for r in rows]
    result = SweepResult(config=cfg, rows=rows)
    result.crossover_fd1_db = _crossover(grid, [r.c_fd1 for r in rows], hd_curve)
    for j, off in enumerate(cfg.u2d_offsets_db):
        result.crossover_fd2_db[off] = _crossover(grid, [r.c_fd2[j] for r in rows], hd_curve)
    return result


def write_sweep_csv(result: SweepResult, path: str) -> None:
    """Persist a sweep as CSV with one c_fd2 column per u2d offset case."""
    n_cases = len(result.config.u2d_offsets_db)
    header = ["param_db", "c_hd", "c_fd1"] + [f"c_fd2_case{i + 1}" for i in range(n_cases)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in result.rows:
            writer.writerow(
                [f"{row.param_db:.4f}", f"{row.c_hd:.9f}", f"{row.c_fd1:.9f}"]
                + [f"{v:.9f}" for v in row.c_fd2]
            )


def write_crossover_csv(result: SweepResult, path: str) -> None:
    """Persist crossover points (curve, u2d_offset_db, crossover_db)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["curve", "u2d_offset_db", "crossover_db"])
        x1 = result.crossover_fd1_db
        writer.writerow(["c_fd1", "", "" if x1 is None else f"{x1:.4f}"])
        for off, x in result.crossover_fd2_db.items():
            writer.writerow(["c_fd2", f"{off:.1f}", "" if x is None else f"{x:.4f}"])
