"""Monte Carlo simulation harness: drops, slot loop, metrics, CSV outputs.

One run sweeps the configured backhaul-loss bins; each bin simulates
`n_drops` independent drops.  Variants share drop seeds, so runs with the
same seed see identical topologies and channels and differ only in what
the scheduler is allowed to do:

  fd-pa     all schedules, solved power allocation for FD candidates
  fd-fixed  all schedules, FD candidates at maximum powers
  hd        half-duplex schedules only (always maximum power)
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .config import RunConfig, run_config_to_dict
from .power import SolveOptions
from .radio import FD_KINDS, ModeKind
from .scheduler import PowerCache, QueueState, apply_schedule, select_schedule, select_schedule_exact
from .topology import drop_topology, realize_channel
from .traffic import TrafficState

MODE_FAMILIES = ("fdd", "fdu", "fdb", "fda", "hd", "idle")


def _family(decision) -> str:
    if decision.is_idle:
        return "idle"
    kind = decision.mode.kind
    return kind.value if kind in FD_KINDS else "hd"


@dataclass
class DropMetrics:
    """Raw outcome of one simulated drop."""

    seed: int
    backhaul_loss_db: float | None
    duration_s: float
    served_dl_bits: float = 0.0
    served_ul_bits: float = 0.0
    arrived_dl_bits: float = 0.0
    arrived_ul_bits: float = 0.0
    final_backlog_bits: float = 0.0
    mode_slots: dict = field(default_factory=lambda: {k: 0 for k in MODE_FAMILIES})
    per_ue_dl_bits: list = field(default_factory=list)
    per_ue_ul_bits: list = field(default_factory=list)
    latencies_dl_s: list = field(default_factory=list)
    latencies_ul_s: list = field(default_factory=list)
    backlog_series: list = field(default_factory=list)  # (t, dl_bits, ul_bits)

    @property
    def served_dl_bps(self) -> float:
        return self.served_dl_bits / self.duration_s

    @property
    def served_ul_bps(self) -> float:
        return self.served_ul_bits / self.duration_s


@dataclass
class BinMetrics:
    """Aggregate over the drops of one backhaul-loss bin."""

    backhaul_loss_db: float | None
    drops: list  # list[DropMetrics]

    def _mean_ci(self, values: list[float]) -> tuple[float, float]:
        arr = np.asarray(values, dtype=float)
        mean = float(arr.mean())
        if len(arr) < 2:
            return mean, 0.0
        half = float(
            stats.t.ppf(0.975, len(arr) - 1) * arr.std(ddof=1) / math.sqrt(len(arr))
        )
        return mean, half

    def served_dl_bps(self) -> tuple[float, float]:
        return self._mean_ci([d.served_dl_bps for d in self.drops])

    def served_ul_bps(self) -> tuple[float, float]:
        return self._mean_ci([d.served_ul_bps for d in self.drops])

    def mode_usage(self) -> dict:
        """Fraction of non-idle slots spent in each mode family."""
        totals = {k: 0 for k in MODE_FAMILIES}
        for d in self.drops:
            for k, v in d.mode_slots.items():
                totals[k] += v
        active = sum(v for k, v in totals.items() if k != "idle")
        if active == 0:
            return {k: 0.0 for k in MODE_FAMILIES if k != "idle"}
        return {k: totals[k] / active for k in MODE_FAMILIES if k != "idle"}

    def idle_fraction(self) -> float:
        totals = sum(sum(d.mode_slots.values()) for d in self.drops)
        idle = sum(d.mode_slots["idle"] for d in self.drops)
        return idle / totals if totals else 0.0


@dataclass
class Metrics:
    """Everything one `run` produced, per backhaul-loss bin."""

    variant: str
    config: RunConfig
    bins: list  # list[BinMetrics]

    def to_jsonable(self) -> dict:
        return {
            "variant": self.variant,
            "config": run_config_to_dict(self.config),
            "bins": [
                {
                    "backhaul_loss_db": b.backhaul_loss_db,
                    "served_dl_bps": b.served_dl_bps()[0],
                    "served_dl_ci_bps": b.served_dl_bps()[1],
                    "served_ul_bps": b.served_ul_bps()[0],
                    "served_ul_ci_bps": b.served_ul_bps()[1],
                    "mode_usage": b.mode_usage(),
                    "idle_fraction": b.idle_fraction(),
                    "drops": [
                        {
                            "seed": d.seed,
                            "served_dl_bps": d.served_dl_bps,
                            "served_ul_bps": d.served_ul_bps,
                            "arrived_dl_bits": d.arrived_dl_bits,
                            "arrived_ul_bits": d.arrived_ul_bits,
                            "final_backlog_bits": d.final_backlog_bits,
                            "mode_slots": d.mode_slots,
                            "per_ue_dl_bits": d.per_ue_dl_bits,
                            "per_ue_ul_bits": d.per_ue_ul_bits,
                            "mean_latency_dl_s": (
                                float(np.mean(d.latencies_dl_s)) if d.latencies_dl_s else None
                            ),
                            "mean_latency_ul_s": (
                                float(np.mean(d.latencies_ul_s)) if d.latencies_ul_s else None
                            ),
                            "n_completed_dl": len(d.latencies_dl_s),
                            "n_completed_ul": len(d.latencies_ul_s),
                        }
                        for d in b.drops
                    ],
                }
                for b in self.bins
            ],
        }


def _variant_knobs(variant: str) -> tuple[str, bool]:
    """(power_rule, include_fd) for a scheduler variant."""
    if variant == "fd-pa":
        return "pa", True
    if variant == "fd-fixed":
        return "fixed", True
    if variant == "hd":
        return "fixed", False
    raise ValueError(f"unknown variant {variant!r}")


def run_drop(
    cfg: RunConfig,
    drop_index: int,
    backhaul_loss_db: float | None,
    decision_log: list | None = None,
) -> DropMetrics:
    """Simulate one drop; decisions are appended to `decision_log` if given."""
    power_rule, include_fd = _variant_knobs(cfg.variant)
    channel_cfg = dataclasses.replace(cfg.channel, backhaul_loss_db=backhaul_loss_db)

    topo_rng = np.random.default_rng([cfg.seed, drop_index, 0])
    traffic_rng = np.random.default_rng([cfg.seed, drop_index, 1])
    fading_rng = np.random.default_rng([cfg.seed, drop_index, 2])

    topology = drop_topology(topo_rng, cfg.n_ues, channel_cfg)
    channel = realize_channel(topology, topo_rng, channel_cfg)
    solver_opts = SolveOptions(
        epsilon=cfg.solver_epsilon,
        max_iters=cfg.solver_max_iters,
        objective=cfg.solver_objective,
    )

    def build_cache(ch):
        return PowerCache(
            ch,
            cfg.n_ues,
            channel_cfg.bandwidth_hz,
            cfg.slot_s,
            power_rule=power_rule,
            include_fd=include_fd,
            se_cap=cfg.se_cap,
            solver_opts=solver_opts,
            pricing=cfg.candidate_pricing,
            weight_scale=cfg.solver_weight_scale,
        )

    cache = build_cache(channel)
    queues = QueueState.zeros(cfg.n_ues)
    traffic = TrafficState(
        cfg.traffic,
        cfg.n_ues,
        traffic_rng,
        cfg.slot_s,
        se_cap=cfg.se_cap,
        bandwidth_hz=channel_cfg.bandwidth_hz,
    )

    metrics = DropMetrics(
        seed=cfg.seed, backhaul_loss_db=backhaul_loss_db, duration_s=cfg.duration_s
    )
    per_ue_dl = np.zeros(cfg.n_ues)
    per_ue_ul = np.zeros(cfg.n_ues)

    n_slots = cfg.n_slots()
    for slot in range(n_slots):
        t = slot * cfg.slot_s
        traffic.step(t, queues)
        ch = channel
        if channel_cfg.fast_fading:
            ch = channel.with_fast_fading(fading_rng)
            cache = build_cache(ch)
        if cfg.exact:
            decision = select_schedule_exact(queues, ch, cache)
        else:
            decision = select_schedule(queues, ch, cache)
        record = apply_schedule(queues, decision)
        traffic.on_delivered(record, t)

        metrics.mode_slots[_family(decision)] += 1
        per_ue_dl += record.dl_delivered
        per_ue_ul += record.ul_delivered
        if slot % cfg.queue_sample_every == 0:
            metrics.backlog_series.append((t, queues.dl_backlog(), queues.ul_backlog()))
        if decision_log is not None:
            decision_log.append((slot, decision))

    metrics.served_dl_bits = float(per_ue_dl.sum())
    metrics.served_ul_bits = float(per_ue_ul.sum())
    metrics.arrived_dl_bits = traffic.arrived_dl_bits
    metrics.arrived_ul_bits = traffic.arrived_ul_bits
    metrics.final_backlog_bits = queues.total_backlog()
    metrics.per_ue_dl_bits = per_ue_dl.tolist()
    metrics.per_ue_ul_bits = per_ue_ul.tolist()
    metrics.latencies_dl_s = list(traffic.latencies_dl_s)
    metrics.latencies_ul_s = list(traffic.latencies_ul_s)
    return metrics


def run(cfg: RunConfig, out_dir: str | None = None) -> Metrics:
    """Run the full campaign and optionally write the CSV/JSON outputs."""
    cfg.validate()
    bins_losses: list[float | None] = (
        list(cfg.backhaul_loss_db) if cfg.backhaul_loss_db else [None]
    )
    bins = []
    first_bin_log: list | None = [] if (out_dir and cfg.log_decisions) else None
    for bi, loss in enumerate(bins_losses):
        drops = []
        for di in range(cfg.n_drops):
            log = first_bin_log if (bi == 0 and di == 0) else None
            drops.append(run_drop(cfg, di, loss, decision_log=log))
        bins.append(BinMetrics(backhaul_loss_db=loss, drops=drops))
    metrics = Metrics(variant=cfg.variant, config=cfg, bins=bins)
    if out_dir is not None:
        write_run_outputs(metrics, out_dir, first_bin_log)
    return metrics


def _bin_label(loss: float | None) -> str:
    return "random" if loss is None else f"{loss:g}"


def write_run_outputs(metrics: Metrics, out_dir: str, decision_log=None) -> None:
    """Write throughput.csv, mode_usage.csv, queues.csv, decisions.csv and
    metrics.json for one run."""
    os.makedirs(out_dir, exist_ok=True)

    with open(os.path.join(out_dir, "throughput.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "backhaul_loss_db",
                "variant",
                "n_drops",
                "served_dl_bps",
                "served_dl_ci_bps",
                "served_ul_bps",
                "served_ul_ci_bps",
            ]
        )
        for b in metrics.bins:
            dl, dl_ci = b.served_dl_bps()
            ul, ul_ci = b.served_ul_bps()
            w.writerow(
                [
                    _bin_label(b.backhaul_loss_db),
                    metrics.variant,
                    len(b.drops),
                    f"{dl:.1f}",
                    f"{dl_ci:.1f}",
                    f"{ul:.1f}",
                    f"{ul_ci:.1f}",
                ]
            )

    with open(os.path.join(out_dir, "mode_usage.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["backhaul_loss_db", "variant", "mode", "fraction"])
        for b in metrics.bins:
            for mode, frac in b.mode_usage().items():
                w.writerow([_bin_label(b.backhaul_loss_db), metrics.variant, mode, f"{frac:.6f}"])

    # Backlog time series of the first drop of each bin.
    with open(os.path.join(out_dir, "queues.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["backhaul_loss_db", "t_s", "dl_backlog_bits", "ul_backlog_bits"])
        for b in metrics.bins:
            for t, dl, ul in b.drops[0].backlog_series:
                w.writerow([_bin_label(b.backhaul_loss_db), f"{t:.6f}", f"{dl:.1f}", f"{ul:.1f}"])

    if decision_log is not None:
        with open(os.path.join(out_dir, "decisions.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(
                [
                    "slot",
                    "mode",
                    "flow_dl",
                    "flow_ul",
                    "p_macro",
                    "p_small",
                    "p_ue",
                    "rate_link1",
                    "rate_link2",
                    "weighted_value",
                ]
            )
            for slot, d in decision_log:
                rates = list(d.rate_bits) + [0.0, 0.0]
                w.writerow(
                    [
                        slot,
                        "idle" if d.is_idle else d.mode.label(),
                        d.flow_dl() if d.flow_dl() is not None else "",
                        d.flow_ul() if d.flow_ul() is not None else "",
                        f"{d.powers.p_macro:.6g}",
                        f"{d.powers.p_small:.6g}",
                        f"{d.powers.p_ue:.6g}",
                        f"{rates[0]:.3f}",
                        f"{rates[1]:.3f}",
                        f"{d.weighted_value:.6g}",
                    ]
                )

    with open(os.path.join(out_dir, "metrics.json"), "w", encoding="utf-8") as fh:
        json.dump(metrics.to_jsonable(), fh, indent=2)
