"""Configuration dataclasses and YAML loading.

All configuration is plain data: a `RunConfig` aggregates the channel,
traffic and run-control sections.  YAML files mirror the dataclass field
names, grouped under top-level `channel:`, `traffic:` and `run:` keys.
Unknown keys raise immediately so typos do not silently fall back to
defaults.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any

import yaml

VARIANTS = ("fd-pa", "fd-fixed", "hd")

# Boresight gain per antenna end for the two supported backhaul beamwidths.
# Labeled assumptions: narrower beam carries more gain.
BEAMWIDTH_GAIN_DB = {90.0: 3.0, 60.0: 5.0}


@dataclass
class ChannelConfig:
    """Geometry, RF and channel-realization parameters."""

    macro_radius_m: float = 800.0
    small_radius_m: float = 40.0
    min_distance_m: float = 1.0

    max_power_macro_dbm: float = 46.0
    max_power_small_dbm: float = 24.0
    max_power_ue_dbm: float = 23.0

    noise_figure_macro_db: float = 5.0
    noise_figure_small_db: float = 13.0
    noise_figure_ue_db: float = 9.0

    sic_db: float = 120.0            # self-interference cancellation at both BSs
    bandwidth_hz: float = 1.0e7

    shadow_std_mbs_sbs_db: float = 6.0
    shadow_std_mbs_ue_db: float = 8.0
    shadow_std_sbs_ue_los_db: float = 3.0
    shadow_std_sbs_ue_nlos_db: float = 4.0
    shadow_std_ue_ue_db: float = 0.0  # no published value; off unless configured

    los_profile: str = "always-nlos"  # always-nlos | always-los | exp-decay
    # Reference decay distances for the exp-decay profile, per link class.
    los_decay_mbs_sbs_m: float = 100.0
    los_decay_mbs_ue_m: float = 60.0
    los_decay_sbs_ue_m: float = 50.0
    los_decay_ue_ue_m: float = 25.0

    antenna_mode: str = "omni"        # omni | directional (backhaul link only)
    antenna_beamwidth_deg: float = 90.0
    antenna_boresight_gain_db: float | None = None  # per end; None -> by beamwidth

    # Small-cell placement. Exactly one of these may be set; both None means
    # uniform placement in the macro disc.
    backhaul_distance_m: float | None = None
    backhaul_loss_db: float | None = None  # pins the MBS-SBS path loss (no shadowing)
    require_containment: bool = False

    fast_fading: bool = False  # per-slot unit-mean exponential power fading

    def boresight_gain_db(self) -> float:
        """Per-end backhaul antenna gain in the current antenna mode."""
        if self.antenna_mode == "omni":
            return 0.0
        if self.antenna_boresight_gain_db is not None:
            return self.antenna_boresight_gain_db
        try:
            return BEAMWIDTH_GAIN_DB[float(self.antenna_beamwidth_deg)]
        except KeyError:
            raise ValueError(
                f"no default boresight gain for beamwidth {self.antenna_beamwidth_deg} deg;"
                " set antenna_boresight_gain_db explicitly"
            ) from None

    def validate(self) -> None:
        if self.antenna_mode not in ("omni", "directional"):
            raise ValueError(f"unknown antenna_mode {self.antenna_mode!r}")
        if self.backhaul_distance_m is not None and self.backhaul_distance_m <= 0.0:
            raise ValueError("fixed backhaul distance must be positive")
        if self.min_distance_m <= 0.0:
            raise ValueError("min_distance_m must be positive")
        if self.macro_radius_m <= 0.0 or self.small_radius_m <= 0.0:
            raise ValueError("radii must be positive")
        if self.bandwidth_hz <= 0.0:
            raise ValueError("bandwidth must be positive")
        if self.antenna_mode == "directional":
            self.boresight_gain_db()  # raises on unknown beamwidth


@dataclass
class TrafficConfig:
    """Traffic generation parameters.

    Models:
      ftp         closed loop; after a file completes, the next request for
                  that UE/direction arrives after an exponential reading time
      full-buffer open loop; source queues topped up every slot (saturation)
      poisson     open loop; file arrivals form a Poisson process at a fixed
                  offered load per direction, split evenly across UEs
    """

    model: str = "ftp"
    mean_reading_time_s: float = 1.0
    dl_file_bytes: float = 1_250_000.0
    ul_file_bytes: float = 1_250_000.0
    offered_dl_bps: float | None = None  # poisson model only
    offered_ul_bps: float | None = None
    # full-buffer floor, in units of one slot at the spectral-efficiency cap
    full_buffer_slots: float = 50.0

    @property
    def dl_file_bits(self) -> float:
        return 8.0 * self.dl_file_bytes

    @property
    def ul_file_bits(self) -> float:
        return 8.0 * self.ul_file_bytes

    def validate(self) -> None:
        if self.model not in ("ftp", "full-buffer", "poisson"):
            raise ValueError(f"unknown traffic model {self.model!r}")
        if self.model == "ftp" and self.mean_reading_time_s <= 0.0:
            raise ValueError("mean_reading_time_s must be positive")
        if self.model == "poisson" and (
            self.offered_dl_bps is None or self.offered_ul_bps is None
        ):
            raise ValueError("poisson traffic requires offered_dl_bps and offered_ul_bps")
        if self.dl_file_bytes <= 0.0 or self.ul_file_bytes <= 0.0:
            raise ValueError("file sizes must be positive")


@dataclass
class RunConfig:
    """One simulation campaign: drops x backhaul-loss bins for one variant."""

    channel: ChannelConfig = field(default_factory=ChannelConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)

    n_ues: int = 10
    duration_s: float = 50.0
    slot_s: float = 0.005
    n_drops: int = 20
    seed: int = 1
    variant: str = "fd-pa"
    # Backhaul-loss bins to sweep; None means random small-cell placement.
    backhaul_loss_db: list[float] | None = None
    exact: bool = False            # exhaustive schedule search (small n_ues only)
    se_cap: float = 7.0            # spectral-efficiency cap, b/s/Hz
    solver_epsilon: float = 1e-4
    solver_max_iters: int = 50
    # Merit the scheduler's power solves optimize.  The ratio sum suppresses
    # cross-interference onto weak links (it hates starving either link);
    # "product" maximizes weighted sum rate directly.
    solver_objective: str = "sum-ratio"
    # How FD candidates are valued during selection: "solver" prices at the
    # solver's operating point; "guarded" prices at the best capped
    # allocation including max-power corners and cap backoffs.  Executed
    # powers are guarded either way.
    candidate_pricing: str = "guarded"
    # Multiplier applied to queue-derived weights before they reach the
    # ratio-sum solver.  The selection value is ratio-invariant, but the
    # merit's stiffness is not: bit-sized weights make it a hard weighted
    # max-min, scaled-down weights leave it closer to sum-rate behavior.
    solver_weight_scale: float = 1.0
    queue_sample_every: int = 1
    log_decisions: bool = True

    def n_slots(self) -> int:
        n = round(self.duration_s / self.slot_s)
        if abs(n * self.slot_s - self.duration_s) > 1e-9 * max(1.0, self.duration_s):
            raise ValueError("duration_s must be an integral number of slots")
        return n

    def validate(self) -> None:
        self.channel.validate()
        self.traffic.validate()
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.n_ues < 1:
            raise ValueError("n_ues must be >= 1")
        if self.slot_s <= 0.0 or self.duration_s <= 0.0:
            raise ValueError("slot_s and duration_s must be positive")
        if self.n_drops < 1:
            raise ValueError("n_drops must be >= 1")
        if self.solver_objective not in ("product", "sum-ratio"):
            raise ValueError(
                f"solver_objective must be 'product' or 'sum-ratio', got {self.solver_objective!r}"
            )
        if self.candidate_pricing not in ("solver", "guarded"):
            raise ValueError(
                f"candidate_pricing must be 'solver' or 'guarded', got {self.candidate_pricing!r}"
            )
        if self.solver_weight_scale <= 0.0:
            raise ValueError("solver_weight_scale must be positive")
        self.n_slots()


def _from_mapping(cls, data: dict[str, Any], section: str):
    """Build a dataclass from a mapping, rejecting unknown keys."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValueError(f"section {section!r} must be a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown keys in section {section!r}: {sorted(unknown)}")
    return cls(**data)


def run_config_from_dict(doc: dict[str, Any]) -> RunConfig:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ValueError("config document must be a mapping")
    unknown = set(doc) - {"channel", "traffic", "run"}
    if unknown:
        raise ValueError(f"unknown top-level config sections: {sorted(unknown)}")
    channel = _from_mapping(ChannelConfig, doc.get("channel"), "channel")
    traffic = _from_mapping(TrafficConfig, doc.get("traffic"), "traffic")
    run = dict(doc.get("run") or {})
    if not isinstance(run, dict):
        raise ValueError("section 'run' must be a mapping")
    cfg = _from_mapping(RunConfig, {"channel": channel, "traffic": traffic, **run}, "run")
    cfg.validate()
    return cfg


def load_run_config(path: str) -> RunConfig:
    """Load a RunConfig from a YAML file."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    return run_config_from_dict(doc)


def run_config_to_dict(cfg: RunConfig) -> dict[str, Any]:
    """Inverse of run_config_from_dict, used for echoing configs to disk."""
    run = dataclasses.asdict(cfg)
    channel = run.pop("channel")
    traffic = run.pop("traffic")
    return {"channel": channel, "traffic": traffic, "run": run}
