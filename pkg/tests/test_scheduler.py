import math

import numpy as np
import pytest

from fdcell.power import PowerProblem
from fdcell.radio import (
    Link,
    LinkKind,
    Mode,
    ModeKind,
    PowerVector,
    max_power_vector,
    spectral_efficiency,
)
from fdcell.scheduler import (
    PowerCache,
    QueueState,
    ScheduleDecision,
    _as_decision,
    _reprice_execution,
    apply_schedule,
    enumerate_schedules,
    link_weight,
    select_schedule,
    select_schedule_exact,
)

from conftest import BANDWIDTH_HZ, SLOT_S, make_cache, make_channel


def queues_with(n_ues=10, **arrays) -> QueueState:
    q = QueueState.zeros(n_ues)
    for name, entries in arrays.items():
        arr = getattr(q, name)
        for idx, bits in entries.items():
            arr[idx - 1] = bits
    return q


# -- queue state and link weights ----------------------------------------


def test_queue_state_basics():
    q = queues_with(dl_macro={1: 100.0, 2: 50.0}, ul_ue={3: 30.0}, ul_small={3: 10.0})
    assert q.n_ues == 10
    assert q.total_backlog() == 190.0
    assert q.dl_backlog() == 150.0
    assert q.ul_backlog() == 40.0
    c = q.copy()
    c.dl_macro[0] = 0.0
    assert q.dl_macro[0] == 100.0
    q.validate()
    q.dl_small[0] = -1.0
    with pytest.raises(ValueError):
        q.validate()


def test_link_weight_backhaul_dl_uses_differential():
    q = queues_with(dl_macro={1: 100.0, 2: 400.0}, dl_small={2: 350.0})
    w, flow = link_weight(q, Link(LinkKind.BACKHAUL_DL))
    # UE 1's differential (100) beats UE 2's (50).
    assert (w, flow) == (100.0, 1)


def test_link_weight_clamps_negative_differential():
    q = queues_with(dl_small={1: 500.0})  # nothing at the macro: differential -500
    w, flow = link_weight(q, Link(LinkKind.BACKHAUL_DL))
    assert w == 0.0
    q2 = queues_with(ul_ue={2: 10.0}, ul_small={2: 50.0})
    w2, _ = link_weight(q2, Link(LinkKind.ACCESS_UL, 2))
    assert w2 == 0.0


def test_link_weight_access_links_are_per_ue():
    q = queues_with(dl_small={3: 70.0}, ul_ue={4: 90.0}, ul_small={4: 15.0})
    assert link_weight(q, Link(LinkKind.ACCESS_DL, 3)) == (70.0, 3)
    assert link_weight(q, Link(LinkKind.ACCESS_DL, 4)) == (0.0, 4)
    assert link_weight(q, Link(LinkKind.ACCESS_UL, 4)) == (75.0, 4)
    assert link_weight(q, Link(LinkKind.BACKHAUL_UL))[0] == 15.0


# -- schedule enumeration -------------------------------------------------


def test_enumerate_schedules_count():
    # N FDD + N FDU + 1 FDB + N(N-1) FDA + 2 backhaul HD + 2N access HD.
    modes = enumerate_schedules(10)
    fd = [m for m in modes if m.is_fd]
    assert len(fd) == 10 + 10 + 1 + 90
    assert len(modes) == 111 + 22
    assert len(set(modes)) == len(modes)
    hd_only = enumerate_schedules(10, include_fd=False)
    assert len(hd_only) == 22
    assert all(not m.is_fd for m in hd_only)


def test_enumerate_schedules_tie_order():
    kinds = [m.kind for m in enumerate_schedules(3)]
    boundaries = [kinds.index(k) for k in (
        ModeKind.FDD, ModeKind.FDU, ModeKind.FDB, ModeKind.FDA, ModeKind.HD_BDL,
    )]
    assert boundaries == sorted(boundaries)


# -- power cache ----------------------------------------------------------


def test_cache_validates_inputs(channel_100):
    with pytest.raises(ValueError):
        make_cache(channel_100, power_rule="adaptive")
    with pytest.raises(ValueError):
        make_cache(channel_100, pricing="hopeful")
    with pytest.raises(ValueError):
        make_cache(channel_100, weight_scale=-1.0)


def test_fixed_rule_prices_at_max_power(channel_100):
    cache = make_cache(channel_100, power_rule="fixed")
    for mode, pv in cache.equal_weight_powers.items():
        assert pv == max_power_vector(mode, channel_100)


def test_pa_rule_never_exceeds_budgets(channel_100):
    cache = make_cache(channel_100)
    for pv in cache.equal_weight_powers.values():
        assert pv.p_macro <= channel_100.p_macro_max_w * (1 + 1e-9)
        assert pv.p_small <= channel_100.p_small_max_w * (1 + 1e-9)
        assert pv.p_ue <= channel_100.p_ue_max_w * (1 + 1e-9)


def test_cache_covers_every_fd_mode(channel_100):
    cache = make_cache(channel_100)
    fd_modes = [m for m in enumerate_schedules(10) if m.is_fd]
    assert set(cache.equal_weight_powers) == set(fd_modes)


def test_hd_only_cache_skips_fd(channel_100):
    cache = make_cache(channel_100, include_fd=False)
    assert cache.equal_weight_powers == {}


# -- selection ------------------------------------------------------------


def test_idle_iff_all_weights_zero(cache_100, channel_100):
    q = QueueState.zeros(10)
    d = select_schedule(q, channel_100, cache_100)
    assert d.is_idle
    assert d.weighted_value == 0.0
    # Relayed bits waiting at the small BS with empty differentials elsewhere
    # still activate the cell.
    q = queues_with(dl_small={5: 1000.0})
    d = select_schedule(q, channel_100, cache_100)
    assert not d.is_idle


def test_negative_differentials_alone_idle_the_cell(cache_100, channel_100):
    # Source queues empty, next-hop queues full: every weight clamps to zero.
    q = queues_with(ul_small={1: 1.0})
    q.ul_ue[0] = 0.0
    d = select_schedule(q, channel_100, cache_100)
    # Backhaul UL still has backlog -> not idle; now cancel it too.
    assert not d.is_idle
    q.ul_small[0] = 0.0
    assert select_schedule(q, channel_100, cache_100).is_idle


def test_single_backlog_picks_matching_hd(cache_100, channel_100):
    q = queues_with(dl_macro={4: 1e6})
    d = select_schedule(q, channel_100, cache_100)
    assert d.mode.kind is ModeKind.HD_BDL
    assert d.flows == (4,)
    assert d.powers == max_power_vector(d.mode, channel_100)
    q = queues_with(ul_ue={7: 1e6})
    d = select_schedule(q, channel_100, cache_100)
    assert d.mode.kind is ModeKind.HD_AUL
    assert d.flows == (7,)


def test_fd_candidate_requires_both_links_backlogged(cache_100, channel_100):
    # Only DL work exists: FDB/FDU/FDA impossible; FDD needs dl_small too.
    q = queues_with(dl_macro={1: 1e6})
    d = select_schedule(q, channel_100, cache_100)
    assert d.mode.kind is ModeKind.HD_BDL
    # Add relayed DL bits for another UE: now FDD is eligible and wins.
    q = queues_with(dl_macro={1: 1e6}, dl_small={2: 8e5})
    d = select_schedule(q, channel_100, cache_100)
    assert d.mode.kind is ModeKind.FDD
    assert d.mode.dl_ue == 2
    assert d.flows == (1, 2)


def test_fda_excludes_same_ue(channel_100):
    cache = make_cache(channel_100)
    # Make one UE's DL and UL both enormous; FDA must pair two distinct UEs.
    q = queues_with(dl_small={3: 1e7}, ul_ue={3: 1e7, 4: 1.0})
    d = select_schedule(q, channel_100, cache)
    if d.mode.kind is ModeKind.FDA:
        assert d.mode.dl_ue != d.mode.ul_ue


def test_weighted_value_consistency(cache_100, channel_100):
    rng = np.random.default_rng(3)
    for _ in range(40):
        q = QueueState(
            dl_macro=rng.uniform(0, 1e6, 10),
            dl_small=rng.uniform(0, 5e5, 10),
            ul_ue=rng.uniform(0, 1e6, 10),
            ul_small=rng.uniform(0, 5e5, 10),
        )
        d = select_schedule(q, channel_100, cache_100)
        assert not d.is_idle
        expected = sum(w * r for w, r in zip(d.weights, d.rate_bits))
        assert d.weighted_value == pytest.approx(expected, rel=1e-12)
        # Reported weights must be the actual queue-derived link weights.
        for link, w in zip(d.mode.links(), d.weights):
            assert w == pytest.approx(link_weight(q, link)[0])


def test_selection_deterministic(cache_100, channel_100):
    rng = np.random.default_rng(11)
    q = QueueState(
        dl_macro=rng.uniform(0, 1e6, 10),
        dl_small=rng.uniform(0, 5e5, 10),
        ul_ue=rng.uniform(0, 1e6, 10),
        ul_small=rng.uniform(0, 5e5, 10),
    )
    d1 = select_schedule(q, channel_100, cache_100)
    d2 = select_schedule(q, channel_100, cache_100)
    assert d1 == d2


def test_selection_beats_every_hd_candidate(cache_100, channel_100):
    """The winner's value must dominate all 22 single-link schedules."""
    rng = np.random.default_rng(19)
    for _ in range(20):
        q = QueueState(
            dl_macro=rng.uniform(0, 1e6, 10),
            dl_small=rng.uniform(0, 5e5, 10),
            ul_ue=rng.uniform(0, 1e6, 10),
            ul_small=rng.uniform(0, 5e5, 10),
        )
        d = select_schedule(q, channel_100, cache_100)
        for mode in enumerate_schedules(10, include_fd=False):
            w, _ = link_weight(q, mode.links()[0])
            rate = cache_100._rates(mode, max_power_vector(mode, channel_100))[0]
            assert d.weighted_value >= w * rate - 1e-6


def test_cache_channel_mismatch_rejected(channel_100):
    other = make_channel(74.0)
    cache = make_cache(other)
    with pytest.raises(ValueError):
        select_schedule(QueueState.zeros(10), channel_100, cache)
    small_q = QueueState.zeros(4)
    with pytest.raises(ValueError):
        select_schedule(small_q, other, cache)


# -- execution repricing ---------------------------------------------------


def test_executed_fd_value_at_least_fixed_power(channel_100):
    """For the same selected schedule, transmitted powers never deliver less
    weighted rate than running that schedule at maximum power would."""
    cache = make_cache(channel_100)
    scale = BANDWIDTH_HZ * SLOT_S
    rng = np.random.default_rng(23)
    seen_fd = 0
    for _ in range(200):
        q = QueueState(
            dl_macro=rng.uniform(0, 1e6, 10),
            dl_small=rng.uniform(0, 5e5, 10),
            ul_ue=rng.uniform(0, 1e6, 10),
            ul_small=rng.uniform(0, 5e5, 10),
        )
        d = select_schedule(q, channel_100, cache)
        if d.is_idle or not d.mode.is_fd:
            continue
        seen_fd += 1
        problem = PowerProblem.for_mode(d.mode, channel_100, d.weights[0], d.weights[1])
        s1, s2 = problem.sinrs(problem.p1_max, problem.p2_max)
        fixed_value = scale * (
            d.weights[0] * spectral_efficiency(s1) + d.weights[1] * spectral_efficiency(s2)
        )
        assert d.weighted_value >= fixed_value * (1.0 - 1e-12)
    assert seen_fd > 50


def test_reprice_execution_upgrades_solver_point(channel_100):
    cache = make_cache(channel_100, pricing="solver")
    mode = Mode(ModeKind.FDB)
    w1, w2 = 3e6, 1e6
    problem = PowerProblem.for_mode(mode, channel_100, w1, w2)
    # A deliberately poor allocation: both links at a hundredth of budget.
    pv = problem.power_vector(problem.p1_max / 100.0, problem.p2_max / 100.0)
    s1, s2 = problem.sinrs(problem.p1_max / 100.0, problem.p2_max / 100.0)
    scale = BANDWIDTH_HZ * SLOT_S
    bits = (spectral_efficiency(s1) * scale, spectral_efficiency(s2) * scale)
    weak = ScheduleDecision(
        mode=mode, flows=(1, 2), powers=pv, rate_bits=bits, weights=(w1, w2),
        weighted_value=w1 * bits[0] + w2 * bits[1],
    )
    strong = _reprice_execution(cache, weak)
    assert strong.weighted_value >= weak.weighted_value
    s1f, s2f = problem.sinrs(problem.p1_max, problem.p2_max)
    fixed = scale * (w1 * spectral_efficiency(s1f) + w2 * spectral_efficiency(s2f))
    assert strong.weighted_value >= fixed * (1.0 - 1e-12)


def test_reprice_leaves_hd_and_fixed_untouched(channel_100):
    cache_fixed = make_cache(channel_100, power_rule="fixed")
    d = ScheduleDecision(
        mode=Mode(ModeKind.HD_BDL), flows=(1,), powers=PowerVector(p_macro=1.0),
        rate_bits=(100.0,), weights=(1.0,), weighted_value=100.0,
    )
    assert _reprice_execution(cache_fixed, d) is d
    fd = ScheduleDecision(
        mode=Mode(ModeKind.FDB), flows=(1, 2), powers=PowerVector(1.0, 0.1, 0.0),
        rate_bits=(10.0, 10.0), weights=(1.0, 1.0), weighted_value=20.0,
    )
    assert _reprice_execution(cache_fixed, fd) is fd


# -- demotion --------------------------------------------------------------


def test_fd_with_one_dead_link_demotes_to_hd(channel_100):
    """An allocation that switches one link off *is* the other link's HD
    schedule and must be labeled (and powered) as such."""
    cache = make_cache(channel_100)
    mode = Mode(ModeKind.FDA, dl_ue=2, ul_ue=5)
    pv = PowerVector(p_small=0.1, p_ue=0.0)
    d = _as_decision(cache, mode, (2, 5), (9e5, 1e3), pv, (1.2e5, 0.0))
    assert d.mode.kind is ModeKind.HD_ADL
    assert d.mode.dl_ue == 2
    assert d.flows == (2,)
    assert d.weights == (9e5,)
    assert d.powers == max_power_vector(d.mode, channel_100)
    assert len(d.rate_bits) == 1
    # Demoted rate comes from the HD cache (max power, no coupling), which
    # can only beat the crippled FD allocation's live link.
    assert d.rate_bits[0] >= 1.2e5
    # Dead UL link instead: demotes to the UL HD schedule.
    d2 = _as_decision(cache, mode, (2, 5), (1e3, 9e5), pv, (0.0, 1.2e5))
    assert d2.mode.kind is ModeKind.HD_AUL
    assert d2.mode.ul_ue == 5
    # Both links alive: stays FD, value is the weighted bit sum.
    d3 = _as_decision(cache, mode, (2, 5), (2.0, 3.0), pv, (10.0, 20.0))
    assert d3.mode is mode
    assert d3.weighted_value == pytest.approx(2.0 * 10.0 + 3.0 * 20.0)


# -- applying schedules ----------------------------------------------------


def test_apply_idle_moves_nothing():
    q = queues_with(dl_macro={1: 100.0})
    before = q.total_backlog()
    rec = apply_schedule(q, ScheduleDecision(mode=None))
    assert rec.total_served() == 0.0
    assert q.total_backlog() == before


def test_apply_backhaul_dl_moves_bits_to_small():
    q = queues_with(dl_macro={2: 1000.0})
    d = ScheduleDecision(
        mode=Mode(ModeKind.HD_BDL), flows=(2,), powers=PowerVector(p_macro=1.0),
        rate_bits=(600.0,), weights=(1000.0,), weighted_value=6e5,
    )
    rec = apply_schedule(q, d)
    assert rec.served == (600.0,)
    assert q.dl_macro[1] == 400.0
    assert q.dl_small[1] == 600.0
    assert rec.dl_delivered.sum() == 0.0  # not yet at the UE


def test_apply_access_dl_delivers():
    q = queues_with(dl_small={2: 500.0})
    d = ScheduleDecision(
        mode=Mode(ModeKind.HD_ADL, dl_ue=2), flows=(2,), powers=PowerVector(p_small=0.1),
        rate_bits=(800.0,), weights=(500.0,), weighted_value=4e5,
    )
    rec = apply_schedule(q, d)
    # Service is source-limited: only 500 bits existed.
    assert rec.served == (500.0,)
    assert rec.dl_delivered[1] == 500.0
    assert q.dl_small[1] == 0.0


def test_apply_fd_conserves_bits():
    q = queues_with(dl_macro={1: 1e5}, dl_small={1: 2e4, 3: 5e4}, ul_ue={2: 7e4}, ul_small={2: 1e4})
    before = q.total_backlog()
    d = ScheduleDecision(
        mode=Mode(ModeKind.FDD, dl_ue=3), flows=(1, 3),
        powers=PowerVector(p_macro=1.0, p_small=0.1),
        rate_bits=(3e4, 4e4), weights=(8e4, 5e4), weighted_value=1.0,
    )
    rec = apply_schedule(q, d)
    assert rec.served == (3e4, 4e4)
    delivered = float(rec.dl_delivered.sum() + rec.ul_delivered.sum())
    assert q.total_backlog() == pytest.approx(before - delivered)
    assert q.dl_macro[0] == 7e4
    assert q.dl_small[0] == 5e4  # backhaul feed for UE 1
    assert q.dl_small[2] == 1e4  # access drain for UE 3


def test_apply_no_intra_slot_relaying():
    """Bits arriving at the small BS this slot cannot leave it this slot."""
    q = queues_with(dl_macro={1: 1e5})
    d = ScheduleDecision(
        mode=Mode(ModeKind.FDD, dl_ue=1), flows=(1, 1),
        powers=PowerVector(p_macro=1.0, p_small=0.1),
        rate_bits=(5e4, 5e4), weights=(1e5, 1.0), weighted_value=1.0,
    )
    rec = apply_schedule(q, d)
    # The access link had nothing to send despite the backhaul feeding it.
    assert rec.served == (5e4, 0.0)
    assert q.dl_small[0] == 5e4
    assert rec.dl_delivered.sum() == 0.0


def test_apply_fdb_moves_both_directions():
    q = queues_with(dl_macro={1: 1e5}, ul_small={2: 3e4})
    d = ScheduleDecision(
        mode=Mode(ModeKind.FDB), flows=(1, 2),
        powers=PowerVector(p_macro=1.0, p_small=0.1),
        rate_bits=(2e4, 5e4), weights=(1.0, 1.0), weighted_value=1.0,
    )
    rec = apply_schedule(q, d)
    assert q.dl_small[0] == 2e4
    assert rec.ul_delivered[1] == 3e4  # source-limited backhaul UL


# -- exact reference selection ----------------------------------------------


def test_exact_selection_limited_to_small_cells(channel_100):
    cache = make_cache(channel_100)
    with pytest.raises(ValueError):
        select_schedule_exact(QueueState.zeros(10), channel_100, cache)


def test_staged_matches_exact_on_small_cells():
    """The staged procedure must not give up value against the exhaustive
    search beyond stage-1 shortlisting noise."""
    ch = make_channel(100.0, seed=21, n_ues=3)
    cache = make_cache(ch)
    rng = np.random.default_rng(31)
    worst = 1.0
    for _ in range(60):
        q = QueueState(
            dl_macro=rng.uniform(0, 1e6, 3),
            dl_small=rng.uniform(0, 5e5, 3),
            ul_ue=rng.uniform(0, 1e6, 3),
            ul_small=rng.uniform(0, 5e5, 3),
        )
        staged = select_schedule(q, ch, cache)
        exact = select_schedule_exact(q, ch, cache)
        assert exact.weighted_value >= staged.weighted_value - 1e-6
        if exact.weighted_value > 0:
            worst = min(worst, staged.weighted_value / exact.weighted_value)
    assert worst >= 0.95


def test_exact_idle_on_empty_queues():
    ch = make_channel(100.0, seed=21, n_ues=3)
    cache = make_cache(ch)
    assert select_schedule_exact(QueueState.zeros(3), ch, cache).is_idle
