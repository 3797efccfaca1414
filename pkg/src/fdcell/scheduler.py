"""Queue state and per-slot schedule selection.

Per-slot decision rule: every link carries the largest backlog
differential among the flows it could serve (clamped at zero), and the
cell picks the schedule maximizing the sum of weight times achievable
rate over its active links.  Enumerating every candidate with a fresh
power solve per slot is too expensive, so selection runs in stages:

  1. Score all candidates of each FD family with powers cached from an
     equal-weight solve (or maximum powers for the fixed-power variant)
     and keep one winner per family.  An FD candidate only competes when
     both of its links have positive weight; with one idle link it
     degenerates to the HD schedule that stage 3 prices anyway.
  2. Re-price the per-family winners at their actual weights: solve the
     power allocation (memoized on the weight ratio) and value the
     candidate per the cache's pricing rule.
  3. Compare the FD winners against every HD schedule at maximum power
     and return the best; ties resolve in a fixed mode order
     (FDD < FDU < FDB < FDA < HD), then by lowest UE index.  A selected
     FD schedule is then re-priced for execution so the transmitted
     allocation is never worth less than fixed maximum power.

The cell idles exactly when every link weight is zero.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .power import PowerProblem, SolveOptions, capped_selection, solve_sp
from .radio import (
    FD_KINDS,
    Link,
    LinkKind,
    LinkRates,
    Mode,
    ModeKind,
    PowerVector,
    link_rate,
    max_power_vector,
    spectral_efficiency,
)


@dataclass
class QueueState:
    """Per-flow backlogs in bits.  DL flows queue at the macro BS and then
    at the small BS; UL flows queue at the UE and then at the small BS.
    Flow destinations are sinks, not queues."""

    dl_macro: np.ndarray
    dl_small: np.ndarray
    ul_ue: np.ndarray
    ul_small: np.ndarray

    @staticmethod
    def zeros(n_ues: int) -> "QueueState":
        return QueueState(
            dl_macro=np.zeros(n_ues),
            dl_small=np.zeros(n_ues),
            ul_ue=np.zeros(n_ues),
            ul_small=np.zeros(n_ues),
        )

    @property
    def n_ues(self) -> int:
        return len(self.dl_macro)

    def total_backlog(self) -> float:
        return float(
            self.dl_macro.sum() + self.dl_small.sum() + self.ul_ue.sum() + self.ul_small.sum()
        )

    def dl_backlog(self) -> float:
        return float(self.dl_macro.sum() + self.dl_small.sum())

    def ul_backlog(self) -> float:
        return float(self.ul_ue.sum() + self.ul_small.sum())

    def copy(self) -> "QueueState":
        return QueueState(
            self.dl_macro.copy(), self.dl_small.copy(), self.ul_ue.copy(), self.ul_small.copy()
        )

    def validate(self) -> None:
        for arr in (self.dl_macro, self.dl_small, self.ul_ue, self.ul_small):
            if np.any(arr < -1e-9):
                raise ValueError("backlogs must be non-negative")


def link_weight(queues: QueueState, link: Link) -> tuple[float, int | None]:
    """Back-pressure weight of one link and the flow that realizes it.

    The weight is the largest source-minus-next-hop backlog differential
    over the flows the link can carry, clamped at zero.  The flow is the
    (pre-clamp) argmax, lowest UE index first.
    """
    k = link.kind
    if k is LinkKind.BACKHAUL_DL:
        diff = queues.dl_macro - queues.dl_small
        f = int(np.argmax(diff)) + 1
        return max(0.0, float(diff[f - 1])), f
    if k is LinkKind.BACKHAUL_UL:
        f = int(np.argmax(queues.ul_small)) + 1
        return max(0.0, float(queues.ul_small[f - 1])), f
    if k is LinkKind.ACCESS_DL:
        d = link.ue
        return max(0.0, float(queues.dl_small[d - 1])), d
    u = link.ue
    return max(0.0, float(queues.ul_ue[u - 1] - queues.ul_small[u - 1])), u


def enumerate_schedules(n_ues: int, include_fd: bool = True) -> list[Mode]:
    """Every distinct schedule for a cell with `n_ues` UEs, in the fixed
    order used for tie-breaking: FDD, FDU, FDB, FDA, then the HD modes."""
    modes: list[Mode] = []
    if include_fd:
        modes += [Mode(ModeKind.FDD, dl_ue=d) for d in range(1, n_ues + 1)]
        modes += [Mode(ModeKind.FDU, ul_ue=u) for u in range(1, n_ues + 1)]
        modes.append(Mode(ModeKind.FDB))
        modes += [
            Mode(ModeKind.FDA, dl_ue=d, ul_ue=u)
            for u in range(1, n_ues + 1)
            for d in range(1, n_ues + 1)
            if u != d
        ]
    modes.append(Mode(ModeKind.HD_BDL))
    modes.append(Mode(ModeKind.HD_BUL))
    modes += [Mode(ModeKind.HD_ADL, dl_ue=d) for d in range(1, n_ues + 1)]
    modes += [Mode(ModeKind.HD_AUL, ul_ue=u) for u in range(1, n_ues + 1)]
    return modes


class PowerCache:
    """Per-drop cache of candidate powers and their slot rates.

    For the power-allocating variant each FD candidate gets at most one
    equal-weight solve per channel realization; the fixed-power variant
    prices FD candidates at maximum powers.  HD candidates always run at
    maximum power.  Rates are stored as bits per slot so stage-1 scoring is
    pure arithmetic on queue-derived weights.

    Two pricing rules govern what an FD candidate is worth during selection:

    - "solver": the candidate is priced at the solver's operating point,
      whose merit balances the two weighted links.  A heavily backlogged
      link paired with a lighter one is deliberately not pushed to its
      capped maximum here, which is what lets single-direction candidates
      outbid the cross-direction ones when the backhaul is strong.
    - "guarded": the candidate is priced at the best capped allocation among
      the solved point, the max-power corners, and the cap backoffs — an
      upper-bounding price that never falls below the fixed-power value.

    Either way the *executed* allocation is guarded (see select_schedule),
    so transmitted powers never deliver less weighted rate than fixed
    maximum power would for the same schedule.
    """

    def __init__(
        self,
        channel,
        n_ues: int,
        bandwidth_hz: float,
        slot_s: float,
        power_rule: str = "pa",
        include_fd: bool = True,
        se_cap: float = 7.0,
        solver_opts: SolveOptions | None = None,
        pricing: str = "guarded",
        weight_scale: float = 1.0,
    ):
        if power_rule not in ("pa", "fixed"):
            raise ValueError(f"unknown power rule {power_rule!r}")
        if pricing not in ("solver", "guarded"):
            raise ValueError(f"unknown pricing rule {pricing!r}")
        if weight_scale <= 0.0:
            raise ValueError("weight_scale must be positive")
        self.channel = channel
        self.n_ues = n_ues
        self.bandwidth_hz = bandwidth_hz
        self.slot_s = slot_s
        self.power_rule = power_rule
        self.include_fd = include_fd
        self.se_cap = se_cap
        self.solver_opts = solver_opts or SolveOptions()
        self.pricing = pricing
        # Backlogs are bits; the ratio-sum merit's stiffness grows with the
        # absolute weight size (unlike the selection value, which only cares
        # about the ratio), so solves see weights on this scale.
        self.weight_scale = weight_scale
        # Solved operating points memoized on the weight ratio (the merit's
        # balance point moves only with w1:w2, and slot-to-slot weight drift
        # is tiny relative to the bucket width).
        self._ratio_memo: dict[tuple, tuple[float, float]] = {}
        self.n_solves = 0
        self.equal_weight_powers: dict[Mode, PowerVector] = {}
        self._cached_rates: dict[Mode, tuple[float, ...]] = {}
        self._stage1_ready = False
        if include_fd:
            self._build_fd()
        self._build_hd()
        self._stage1_ready = True

    # -- construction ---------------------------------------------------

    def _solved_point(self, problem: PowerProblem, init=None) -> tuple[float, float]:
        """The solver's operating point, skipping the solve when negligible
        cross-coupling makes full power the answer."""
        if (
            problem.c1 * problem.p2_max <= 0.01 * problem.n1
            and problem.c2 * problem.p1_max <= 0.01 * problem.n2
        ):
            return problem.p1_max, problem.p2_max
        opts = self.solver_opts
        if init is not None and init[0] > 0.0 and init[1] > 0.0:
            opts = dataclasses.replace(opts, init=init)
        sol = solve_sp(problem, opts)
        self.n_solves += 1
        return sol.p1, sol.p2

    def _candidate_powers(self, mode: Mode) -> PowerVector:
        if self.power_rule == "fixed":
            return max_power_vector(mode, self.channel)
        w = self.weight_scale
        problem = PowerProblem.for_mode(mode, self.channel, w, w)
        if self.pricing == "solver":
            p1, p2 = self._solved_point(problem)
            point = (p1, p2)
        else:
            p1, p2, se1, se2 = capped_selection(problem, None, self.se_cap)
            point = None
            if not (se1 >= self.se_cap and se2 >= self.se_cap):
                point = self._solved_point(problem)
                p1, p2, _, _ = capped_selection(problem, point, self.se_cap)
        if point is not None:
            # Seed the ratio memo so early equal-ish-weight slots reuse it.
            key = (mode.kind, mode.dl_ue, mode.ul_ue, 0)
            self._ratio_memo[key] = point
        return problem.power_vector(p1, p2)

    def _rates(self, mode: Mode, powers: PowerVector) -> tuple[float, ...]:
        return link_rate(
            mode, powers, self.channel, self.bandwidth_hz, self.slot_s, self.se_cap
        ).bits

    def _build_fd(self) -> None:
        n = self.n_ues
        for mode in enumerate_schedules(n):
            if not mode.is_fd:
                continue
            pv = self._candidate_powers(mode)
            self.equal_weight_powers[mode] = pv
            self._cached_rates[mode] = self._rates(mode, pv)
        # Stage-1 rate arrays, indexed by UE (1-based UE i at position i-1).
        self._fdd_r = np.array(
            [self._cached_rates[Mode(ModeKind.FDD, dl_ue=d)] for d in range(1, n + 1)]
        )
        self._fdu_r = np.array(
            [self._cached_rates[Mode(ModeKind.FDU, ul_ue=u)] for u in range(1, n + 1)]
        )
        self._fdb_r = np.array(self._cached_rates[Mode(ModeKind.FDB)])
        self._fda_r = np.zeros((n, n, 2))  # [u-1, d-1, link]; u == d unused
        for u in range(1, n + 1):
            for d in range(1, n + 1):
                if u != d:
                    self._fda_r[u - 1, d - 1] = self._cached_rates[
                        Mode(ModeKind.FDA, dl_ue=d, ul_ue=u)
                    ]

    def _build_hd(self) -> None:
        n = self.n_ues
        ch = self.channel
        self._hd_bdl_r = self._rates(Mode(ModeKind.HD_BDL), max_power_vector(Mode(ModeKind.HD_BDL), ch))[0]
        self._hd_bul_r = self._rates(Mode(ModeKind.HD_BUL), max_power_vector(Mode(ModeKind.HD_BUL), ch))[0]
        self._hd_adl_r = np.array(
            [
                self._rates(Mode(ModeKind.HD_ADL, dl_ue=d), PowerVector(p_small=ch.p_small_max_w))[0]
                for d in range(1, n + 1)
            ]
        )
        self._hd_aul_r = np.array(
            [
                self._rates(Mode(ModeKind.HD_AUL, ul_ue=u), PowerVector(p_ue=ch.p_ue_max_w))[0]
                for u in range(1, n + 1)
            ]
        )

    def powers_for(self, mode: Mode) -> PowerVector:
        if not mode.is_fd:
            return max_power_vector(mode, self.channel)
        if self.power_rule == "fixed":
            return max_power_vector(mode, self.channel)
        return self.equal_weight_powers[mode]


def precompute_equal_weight_powers(
    channel, n_ues: int, solver_opts: SolveOptions | None = None
) -> dict[Mode, PowerVector]:
    """Equal-weight power solutions for every FD schedule of the cell."""
    cache = PowerCache(channel, n_ues, channel.bandwidth_hz, 1.0, "pa", True, 7.0, solver_opts)
    return dict(cache.equal_weight_powers)


@dataclass(frozen=True)
class ScheduleDecision:
    """Outcome of one slot's selection; `mode is None` means the cell idles."""

    mode: Mode | None
    flows: tuple[int, ...] = ()          # flow per link, aligned with mode.links()
    powers: PowerVector = PowerVector()
    rate_bits: tuple[float, ...] = ()    # deliverable bits per link this slot
    weights: tuple[float, ...] = ()      # link weights used for the decision
    weighted_value: float = 0.0

    @property
    def is_idle(self) -> bool:
        return self.mode is None

    def flow_dl(self) -> int | None:
        """Downlink flow, preferring the link nearest delivery (access DL)."""
        if self.mode is None:
            return None
        for link, flow in zip(self.mode.links(), self.flows):
            if link.kind is LinkKind.ACCESS_DL:
                return flow
        for link, flow in zip(self.mode.links(), self.flows):
            if link.kind is LinkKind.BACKHAUL_DL:
                return flow
        return None

    def flow_ul(self) -> int | None:
        if self.mode is None:
            return None
        for link, flow in zip(self.mode.links(), self.flows):
            if link.kind is LinkKind.ACCESS_UL:
                return flow
        for link, flow in zip(self.mode.links(), self.flows):
            if link.kind is LinkKind.BACKHAUL_UL:
                return flow
        return None


_IDLE = ScheduleDecision(mode=None)


_RATIO_BUCKET = 0.02  # log-ratio quantum for memoized operating points


def _stage2_point(
    cache: PowerCache, problem: PowerProblem, mode: Mode, w1: float, w2: float
) -> tuple[float, float]:
    """Solved operating point for a weighted candidate, memoized on the
    weight ratio: the merit's balance moves only with w1:w2, and slot-to-slot
    weight drift is far smaller than a bucket."""
    key = (mode.kind, mode.dl_ue, mode.ul_ue, round(math.log(w1 / w2) / _RATIO_BUCKET))
    point = cache._ratio_memo.get(key)
    if point is None:
        cached = cache.equal_weight_powers.get(mode)
        init = problem.power_pair(cached) if cached is not None else None
        point = cache._solved_point(problem, init)
        cache._ratio_memo[key] = point
    return point


def _fd_stage2(
    cache: PowerCache, mode: Mode, w1: float, w2: float
) -> tuple[PowerVector, tuple[float, float], float]:
    """Price one FD candidate with its actual weights."""
    ws = cache.weight_scale
    problem = PowerProblem.for_mode(mode, cache.channel, w1 * ws, w2 * ws)
    cap = cache.se_cap
    scale = cache.bandwidth_hz * cache.slot_s
    if cache.power_rule == "fixed":
        pv = max_power_vector(mode, cache.channel)
        bits = cache._rates(mode, pv)
        return pv, (bits[0], bits[1]), w1 * bits[0] + w2 * bits[1]
    if cache.pricing == "solver":
        p1, p2 = _stage2_point(cache, problem, mode, w1, w2)
        s1, s2 = problem.sinrs(p1, p2)
        se1 = spectral_efficiency(s1, cap)
        se2 = spectral_efficiency(s2, cap)
    else:
        # Closed-form candidates first: when one already caps both links,
        # no power pair can beat it and the solve is skipped.
        p1, p2, se1, se2 = capped_selection(problem, None, cap)
        if not (se1 >= cap and se2 >= cap):
            point = _stage2_point(cache, problem, mode, w1, w2)
            p1, p2, se1, se2 = capped_selection(problem, point, cap)
    pv = problem.power_vector(p1, p2)
    bits = (se1 * scale, se2 * scale)
    return pv, (bits[0], bits[1]), w1 * bits[0] + w2 * bits[1]


_HD_OF_LINK = {
    LinkKind.BACKHAUL_DL: ModeKind.HD_BDL,
    LinkKind.BACKHAUL_UL: ModeKind.HD_BUL,
    LinkKind.ACCESS_DL: ModeKind.HD_ADL,
    LinkKind.ACCESS_UL: ModeKind.HD_AUL,
}


def _hd_cached_rate(cache: PowerCache, mode: Mode) -> float:
    k = mode.kind
    if k is ModeKind.HD_BDL:
        return float(cache._hd_bdl_r)
    if k is ModeKind.HD_BUL:
        return float(cache._hd_bul_r)
    if k is ModeKind.HD_ADL:
        return float(cache._hd_adl_r[mode.dl_ue - 1])
    return float(cache._hd_aul_r[mode.ul_ue - 1])


def _as_decision(
    cache: PowerCache,
    mode: Mode,
    flows: tuple[int, int],
    weights: tuple[float, float],
    pv: PowerVector,
    bits: tuple[float, float],
) -> ScheduleDecision:
    """Wrap a priced FD candidate, demoting it when it is HD in disguise.

    A power solution that switches one link off entirely *is* the other
    link's HD schedule; labeling and serving it as FD would double-count
    duplexing that never happens.  The demoted candidate runs at maximum
    power, which can only improve the single live link.
    """
    dead = [i for i in (0, 1) if bits[i] <= 0.0]
    if len(dead) == 1:
        live = 1 - dead[0]
        link = mode.links()[live]
        kind = _HD_OF_LINK[link.kind]
        if kind is ModeKind.HD_ADL:
            hd_mode = Mode(kind, dl_ue=link.ue)
        elif kind is ModeKind.HD_AUL:
            hd_mode = Mode(kind, ul_ue=link.ue)
        else:
            hd_mode = Mode(kind)
        rate = _hd_cached_rate(cache, hd_mode)
        w = weights[live]
        return ScheduleDecision(
            mode=hd_mode,
            flows=(flows[live],),
            powers=max_power_vector(hd_mode, cache.channel),
            rate_bits=(rate,),
            weights=(w,),
            weighted_value=w * rate,
        )
    value = weights[0] * bits[0] + weights[1] * bits[1]
    return ScheduleDecision(
        mode=mode,
        flows=flows,
        powers=pv,
        rate_bits=bits,
        weights=weights,
        weighted_value=value,
    )


def select_schedule(queues: QueueState, channel, cache: PowerCache) -> ScheduleDecision:
    """Pick the max-weight schedule for one slot (staged procedure above)."""
    if cache.channel is not channel:
        raise ValueError("cache was built for a different channel realization")
    n = queues.n_ues
    if n != cache.n_ues:
        raise ValueError("queue state and cache disagree on the number of UEs")

    # Link weights, shared across candidates.
    diff_bdl = queues.dl_macro - queues.dl_small
    f_bdl = int(np.argmax(diff_bdl)) + 1
    w_bdl = max(0.0, float(diff_bdl[f_bdl - 1]))
    f_bul = int(np.argmax(queues.ul_small)) + 1
    w_bul = max(0.0, float(queues.ul_small[f_bul - 1]))
    w_adl = np.maximum(queues.dl_small, 0.0)            # per DL UE
    w_aul = np.maximum(queues.ul_ue - queues.ul_small, 0.0)  # per UL UE

    if w_bdl == 0.0 and w_bul == 0.0 and not w_adl.any() and not w_aul.any():
        return _IDLE

    # Stage 1: per-family winners at cached powers (FD candidates need both
    # links backlogged to compete).
    finalists: list[tuple[Mode, float, float, tuple[int, int]]] = []
    if cache.include_fd:
        if w_bdl > 0.0:
            mask = w_adl > 0.0
            if mask.any():
                scores = np.where(mask, w_bdl * cache._fdd_r[:, 0] + w_adl * cache._fdd_r[:, 1], -np.inf)
                d = int(np.argmax(scores)) + 1
                finalists.append((Mode(ModeKind.FDD, dl_ue=d), w_bdl, float(w_adl[d - 1]), (f_bdl, d)))
        if w_bul > 0.0:
            mask = w_aul > 0.0
            if mask.any():
                scores = np.where(mask, w_aul * cache._fdu_r[:, 0] + w_bul * cache._fdu_r[:, 1], -np.inf)
                u = int(np.argmax(scores)) + 1
                finalists.append((Mode(ModeKind.FDU, ul_ue=u), float(w_aul[u - 1]), w_bul, (u, f_bul)))
        if w_bdl > 0.0 and w_bul > 0.0:
            finalists.append((Mode(ModeKind.FDB), w_bdl, w_bul, (f_bdl, f_bul)))
        if w_adl.any() and w_aul.any():
            # score[u-1, d-1]; diagonal and idle-weight pairs excluded
            score = (
                w_adl[None, :] * cache._fda_r[:, :, 0] + w_aul[:, None] * cache._fda_r[:, :, 1]
            )
            valid = (w_adl[None, :] > 0.0) & (w_aul[:, None] > 0.0)
            np.fill_diagonal(valid, False)
            if valid.any():
                score = np.where(valid, score, -np.inf)
                idx = int(np.argmax(score))  # row-major: lowest u, then lowest d
                u, d = divmod(idx, n)
                u, d = u + 1, d + 1
                finalists.append(
                    (Mode(ModeKind.FDA, dl_ue=d, ul_ue=u), float(w_adl[d - 1]), float(w_aul[u - 1]), (d, u))
                )

    # Stage 2: re-price FD finalists with actual weights.
    best: tuple[float, ScheduleDecision] | None = None
    for mode, w1, w2, flows in finalists:
        pv, bits, _ = _fd_stage2(cache, mode, w1, w2)
        decision = _as_decision(cache, mode, flows, (w1, w2), pv, bits)
        if best is None or decision.weighted_value > best[0]:
            best = (decision.weighted_value, decision)

    # Stage 3: every HD schedule at maximum power.
    hd_candidates: list[tuple[float, Mode, int, float, float]] = []
    if w_bdl > 0.0:
        hd_candidates.append((w_bdl * cache._hd_bdl_r, Mode(ModeKind.HD_BDL), f_bdl, w_bdl, cache._hd_bdl_r))
    if w_bul > 0.0:
        hd_candidates.append((w_bul * cache._hd_bul_r, Mode(ModeKind.HD_BUL), f_bul, w_bul, cache._hd_bul_r))
    if w_adl.any():
        scores = np.where(w_adl > 0.0, w_adl * cache._hd_adl_r, -np.inf)
        d = int(np.argmax(scores)) + 1
        hd_candidates.append(
            (float(scores[d - 1]), Mode(ModeKind.HD_ADL, dl_ue=d), d, float(w_adl[d - 1]), float(cache._hd_adl_r[d - 1]))
        )
    if w_aul.any():
        scores = np.where(w_aul > 0.0, w_aul * cache._hd_aul_r, -np.inf)
        u = int(np.argmax(scores)) + 1
        hd_candidates.append(
            (float(scores[u - 1]), Mode(ModeKind.HD_AUL, ul_ue=u), u, float(w_aul[u - 1]), float(cache._hd_aul_r[u - 1]))
        )
    if hd_candidates:
        value, mode, flow, w, rate = max(hd_candidates, key=lambda t: t[0])
        if best is None or value > best[0]:
            best = (
                value,
                ScheduleDecision(
                    mode=mode,
                    flows=(flow,),
                    powers=max_power_vector(mode, cache.channel),
                    rate_bits=(rate,),
                    weights=(w,),
                    weighted_value=value,
                ),
            )

    if best is None:
        return _IDLE
    return _reprice_execution(cache, best[1])


def _reprice_execution(cache: PowerCache, decision: ScheduleDecision) -> ScheduleDecision:
    """Upgrade a selected FD schedule's powers to the best capped allocation.

    Selection may value candidates at the solver's balance point, but once a
    schedule has won there is no reason to transmit at an allocation worth
    less than some closed-form one: the executed powers are re-picked among
    the selected point, the max-power corners, and the cap backoffs, so the
    served weighted rate never falls below the fixed-max-power value for the
    same schedule.  Value can only go up, preserving the stage-3 dominance
    over the HD candidates.
    """
    if decision.mode is None or not decision.mode.is_fd or cache.power_rule != "pa":
        return decision
    w1, w2 = decision.weights
    problem = PowerProblem.for_mode(decision.mode, cache.channel, w1, w2)
    point = problem.power_pair(decision.powers)
    p1, p2, se1, se2 = capped_selection(problem, point, cache.se_cap)
    scale = cache.bandwidth_hz * cache.slot_s
    return _as_decision(
        cache,
        decision.mode,
        decision.flows,
        (w1, w2),
        problem.power_vector(p1, p2),
        (se1 * scale, se2 * scale),
    )


def select_schedule_exact(
    queues: QueueState, channel, cache: PowerCache, max_ues: int = 4
) -> ScheduleDecision:
    """Exhaustive reference selection: price every schedule with its actual
    weights (full power solve per FD candidate).  Exponentially many solves,
    so restricted to small cells; used to measure the staged procedure's
    sub-optimality."""
    n = queues.n_ues
    if n > max_ues:
        raise ValueError(f"exact selection is limited to {max_ues} UEs")
    if cache.channel is not channel:
        raise ValueError("cache was built for a different channel realization")

    best: tuple[float, ScheduleDecision] | None = None
    for mode in enumerate_schedules(n, include_fd=cache.include_fd):
        links = mode.links()
        weights = []
        flows = []
        for link in links:
            w, f = link_weight(queues, link)
            weights.append(w)
            flows.append(f)
        if any(w <= 0.0 for w in weights):
            continue
        if mode.is_fd:
            pv, bits, _ = _fd_stage2(cache, mode, weights[0], weights[1])
            decision = _as_decision(
                cache, mode, (flows[0], flows[1]), (weights[0], weights[1]), pv, bits
            )
        else:
            pv = max_power_vector(mode, channel)
            bits = cache._rates(mode, pv)
            decision = ScheduleDecision(
                mode=mode,
                flows=tuple(flows),
                powers=pv,
                rate_bits=tuple(bits),
                weights=tuple(weights),
                weighted_value=weights[0] * bits[0],
            )
        if best is None or decision.weighted_value > best[0]:
            best = (decision.weighted_value, decision)
    if best is None:
        return _IDLE
    return _reprice_execution(cache, best[1])


@dataclass
class ServedRecord:
    """Bits moved by one applied decision."""

    served: tuple[float, ...]      # per link, aligned with the decision's links
    dl_delivered: np.ndarray       # per UE, bits that reached the UE this slot
    ul_delivered: np.ndarray       # per UE, bits that reached the macro BS

    def total_served(self) -> float:
        return float(sum(self.served))


def apply_schedule(queues: QueueState, decision: ScheduleDecision) -> ServedRecord:
    """Move bits along the decision's links, capped by source backlogs.

    Both links read the pre-slot queue state: bits arriving at the small
    BS this slot become forwardable next slot, never within the slot.
    """
    n = queues.n_ues
    empty = ServedRecord((), np.zeros(n), np.zeros(n))
    if decision.is_idle:
        return empty

    dl_delivered = np.zeros(n)
    ul_delivered = np.zeros(n)
    served = []
    moves = []  # (array, index, delta) applied after all reads
    for link, flow, rate in zip(decision.mode.links(), decision.flows, decision.rate_bits):
        i = flow - 1
        k = link.kind
        if k is LinkKind.BACKHAUL_DL:
            s = min(rate, float(queues.dl_macro[i]))
            moves.append((queues.dl_macro, i, -s))
            moves.append((queues.dl_small, i, +s))
        elif k is LinkKind.ACCESS_DL:
            s = min(rate, float(queues.dl_small[i]))
            moves.append((queues.dl_small, i, -s))
            dl_delivered[i] += s
        elif k is LinkKind.ACCESS_UL:
            s = min(rate, float(queues.ul_ue[i]))
            moves.append((queues.ul_ue, i, -s))
            moves.append((queues.ul_small, i, +s))
        else:  # BACKHAUL_UL
            s = min(rate, float(queues.ul_small[i]))
            moves.append((queues.ul_small, i, -s))
            ul_delivered[i] += s
        served.append(s)

    for arr, i, delta in moves:
        arr[i] += delta
    return ServedRecord(tuple(served), dl_delivered, ul_delivered)
