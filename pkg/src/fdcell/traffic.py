"""Traffic generation: closed-loop file transfers and open-loop variants.

The closed-loop model keeps at most one outstanding file per UE and
direction: when a file's last bit is delivered, the next request for that
UE/direction arrives after an exponentially distributed reading time.
The first request of each UE/direction arrives at t = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import TrafficConfig
from .scheduler import QueueState, ServedRecord


@dataclass
class TrafficState:
    config: TrafficConfig
    n_ues: int
    rng: np.random.Generator
    slot_s: float
    se_cap: float = 7.0
    bandwidth_hz: float = 1.0e7

    arrived_dl_bits: float = 0.0
    arrived_ul_bits: float = 0.0
    completed_dl: int = 0
    completed_ul: int = 0
    latencies_dl_s: list = field(default_factory=list)
    latencies_ul_s: list = field(default_factory=list)

    def __post_init__(self):
        n = self.n_ues
        # Closed-loop bookkeeping: remaining bits of the in-flight file
        # (-1 when none) and the absolute time of the next request.
        self._dl_remaining = np.full(n, -1.0)
        self._ul_remaining = np.full(n, -1.0)
        self._dl_next_t = np.zeros(n)
        self._ul_next_t = np.zeros(n)
        self._dl_start_t = np.zeros(n)
        self._ul_start_t = np.zeros(n)
        cfg = self.config
        if cfg.model == "poisson":
            self._dl_files_per_slot = (
                cfg.offered_dl_bps * self.slot_s / cfg.dl_file_bits / n
            )
            self._ul_files_per_slot = (
                cfg.offered_ul_bps * self.slot_s / cfg.ul_file_bits / n
            )
        self._floor_bits = (
            cfg.full_buffer_slots * self.se_cap * self.bandwidth_hz * self.slot_s
        )

    def step(self, t: float, queues: QueueState) -> float:
        """Generate this slot's arrivals into the source queues; returns the
        number of bits enqueued."""
        cfg = self.config
        added = 0.0
        if cfg.model == "full-buffer":
            for n_arr, arr in ((0, queues.dl_macro), (1, queues.ul_ue)):
                deficit = np.maximum(self._floor_bits - arr, 0.0)
                arr += deficit
                total = float(deficit.sum())
                if n_arr == 0:
                    self.arrived_dl_bits += total
                else:
                    self.arrived_ul_bits += total
                added += total
            return added
        if cfg.model == "poisson":
            dl_files = self.rng.poisson(self._dl_files_per_slot, self.n_ues)
            ul_files = self.rng.poisson(self._ul_files_per_slot, self.n_ues)
            dl_bits = dl_files * cfg.dl_file_bits
            ul_bits = ul_files * cfg.ul_file_bits
            queues.dl_macro += dl_bits
            queues.ul_ue += ul_bits
            self.arrived_dl_bits += float(dl_bits.sum())
            self.arrived_ul_bits += float(ul_bits.sum())
            return float(dl_bits.sum() + ul_bits.sum())

        # Closed-loop FTP.
        for i in range(self.n_ues):
            if self._dl_remaining[i] < 0.0 and t >= self._dl_next_t[i]:
                queues.dl_macro[i] += cfg.dl_file_bits
                self._dl_remaining[i] = cfg.dl_file_bits
                self._dl_start_t[i] = self._dl_next_t[i]
                self.arrived_dl_bits += cfg.dl_file_bits
                added += cfg.dl_file_bits
            if self._ul_remaining[i] < 0.0 and t >= self._ul_next_t[i]:
                queues.ul_ue[i] += cfg.ul_file_bits
                self._ul_remaining[i] = cfg.ul_file_bits
                self._ul_start_t[i] = self._ul_next_t[i]
                self.arrived_ul_bits += cfg.ul_file_bits
                added += cfg.ul_file_bits
        return added

    def on_delivered(self, record: ServedRecord, t: float) -> None:
        """Feed delivered bits back into the closed loop."""
        if self.config.model != "ftp":
            return
        slot_end = t + self.slot_s
        for i in range(self.n_ues):
            if record.dl_delivered[i] > 0.0 and self._dl_remaining[i] >= 0.0:
                self._dl_remaining[i] -= record.dl_delivered[i]
                if self._dl_remaining[i] <= 1e-6:
                    self._dl_remaining[i] = -1.0
                    self.completed_dl += 1
                    self.latencies_dl_s.append(slot_end - self._dl_start_t[i])
                    self._dl_next_t[i] = slot_end + self.rng.exponential(
                        self.config.mean_reading_time_s
                    )
            if record.ul_delivered[i] > 0.0 and self._ul_remaining[i] >= 0.0:
                self._ul_remaining[i] -= record.ul_delivered[i]
                if self._ul_remaining[i] <= 1e-6:
                    self._ul_remaining[i] = -1.0
                    self.completed_ul += 1
                    self.latencies_ul_s.append(slot_end - self._ul_start_t[i])
                    self._ul_next_t[i] = slot_end + self.rng.exponential(
                        self.config.mean_reading_time_s
                    )
