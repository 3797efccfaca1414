import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fdcell.config import ChannelConfig
from fdcell.topology import (
    MACRO,
    SMALL,
    LinkClass,
    backhaul_distance_for_loss,
    drop_topology,
    los_probability,
    path_loss_db,
    realize_channel,
)
from fdcell.units import linear_to_db

from conftest import make_channel


# Hand-evaluated anchors of the non-LOS models at reference distances.
@pytest.mark.parametrize(
    "cls,d_km,expected",
    [
        (LinkClass.MBS_SBS, 1.0, 125.2),
        (LinkClass.MBS_SBS, 0.1, 125.2 - 36.3),
        (LinkClass.MBS_UE, 0.1, 88.3),
        (LinkClass.SBS_UE, 0.04, 92.9772496747986),
        (LinkClass.UE_UE, 0.05, 72.42940008672037),
        (LinkClass.UE_UE, 0.1, 135.78),
    ],
)
def test_path_loss_nlos_anchors(cls, d_km, expected):
    assert path_loss_db(cls, d_km) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize(
    "cls,d_km,expected",
    [
        (LinkClass.MBS_SBS, 1.0, 100.7),
        (LinkClass.SBS_UE, 0.04, 74.58305381875442),
    ],
)
def test_path_loss_los_anchors(cls, d_km, expected):
    assert path_loss_db(cls, d_km, los=True) == pytest.approx(expected, abs=1e-9)


def test_ue_ue_branch_jump_at_50m():
    near = path_loss_db(LinkClass.UE_UE, 0.050)
    far = path_loss_db(LinkClass.UE_UE, 0.050 + 1e-9)
    # The device-to-device model switches regimes at 50 m with a large
    # discrete penalty: inside a 40 m cell most UE pairs sit on the loud side.
    assert far - near == pytest.approx(51.31, abs=0.01)


def test_min_distance_clamp():
    clamped = path_loss_db(LinkClass.SBS_UE, 0.0001, min_distance_m=1.0)
    assert clamped == path_loss_db(LinkClass.SBS_UE, 0.001)


@given(st.floats(min_value=60.0, max_value=140.0))
def test_backhaul_distance_inverts_loss(loss_db):
    d_m = backhaul_distance_for_loss(loss_db)
    assert path_loss_db(LinkClass.MBS_SBS, d_m / 1000.0) == pytest.approx(loss_db, abs=1e-9)


def test_backhaul_distance_reference_points():
    assert backhaul_distance_for_loss(125.2) == pytest.approx(1000.0, rel=1e-12)
    assert backhaul_distance_for_loss(74.0) == pytest.approx(38.863, abs=0.01)
    assert backhaul_distance_for_loss(100.0) == pytest.approx(202.202, abs=0.01)
    assert backhaul_distance_for_loss(119.0) == pytest.approx(674.840, abs=0.01)


def test_los_probability_profiles():
    cfg_nlos = ChannelConfig(los_profile="always-nlos")
    cfg_los = ChannelConfig(los_profile="always-los")
    cfg_exp = ChannelConfig(los_profile="exp-decay")
    for cls in LinkClass:
        assert los_probability(cls, 100.0, cfg_nlos) == 0.0
        assert los_probability(cls, 100.0, cfg_los) == 1.0
    assert los_probability(LinkClass.SBS_UE, 0.0, cfg_exp) == 1.0
    p50 = los_probability(LinkClass.SBS_UE, 50.0, cfg_exp)
    p100 = los_probability(LinkClass.SBS_UE, 100.0, cfg_exp)
    assert 0.0 < p100 < p50 < 1.0


def test_drop_topology_geometry():
    cfg = ChannelConfig(backhaul_loss_db=100.0)
    topo = drop_topology(np.random.default_rng(5), 10, cfg)
    assert topo.macro_pos == (0.0, 0.0)
    assert topo.n_ues == 10
    # Pinned loss places the small BS at the loss-equivalent distance.
    assert topo.distance_m(MACRO, SMALL) == pytest.approx(backhaul_distance_for_loss(100.0))
    for i in range(1, 11):
        assert topo.distance_m(SMALL, i) <= cfg.small_radius_m + 1e-9


def test_drop_topology_fixed_distance_and_containment():
    cfg = ChannelConfig(backhaul_distance_m=150.0)
    topo = drop_topology(np.random.default_rng(5), 4, cfg)
    assert topo.distance_m(MACRO, SMALL) == pytest.approx(150.0)
    with pytest.raises(ValueError):
        drop_topology(
            np.random.default_rng(5),
            4,
            ChannelConfig(backhaul_distance_m=790.0, require_containment=True),
        )


def test_drop_topology_random_placement_in_disc():
    cfg = ChannelConfig(require_containment=True)
    for seed in range(20):
        topo = drop_topology(np.random.default_rng(seed), 3, cfg)
        d = topo.distance_m(MACRO, SMALL)
        assert d <= cfg.macro_radius_m - cfg.small_radius_m + 1e-9


def test_drop_topology_deterministic():
    cfg = ChannelConfig()
    t1 = drop_topology(np.random.default_rng(42), 6, cfg)
    t2 = drop_topology(np.random.default_rng(42), 6, cfg)
    assert t1 == t2


def test_realize_channel_reciprocity_and_noise(channel_100):
    ch = channel_100
    nodes = [MACRO, SMALL] + list(range(1, ch.n_ues + 1))
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            assert ch.g(a, b) == ch.g(b, a)
            assert ch.g(a, b) > 0.0
    assert linear_to_db(ch.sic_small) == pytest.approx(-120.0)
    assert linear_to_db(ch.sic_macro) == pytest.approx(-120.0)
    # Receiver noise floors at 10 MHz.
    assert 10 * math.log10(ch.noise_macro_w * 1e3) == pytest.approx(-99.0)
    assert 10 * math.log10(ch.noise_small_w * 1e3) == pytest.approx(-91.0)
    assert 10 * math.log10(ch.noise_ue_w * 1e3) == pytest.approx(-95.0)


def test_pinned_backhaul_loss_is_exact():
    for loss in (74.0, 100.0, 119.0):
        ch = make_channel(loss)
        assert linear_to_db(ch.g_ms()) == pytest.approx(-loss, abs=1e-9)
        assert ch.g_sm() == ch.g_ms()


def test_directional_bonus_applies_to_backhaul_only():
    omni = make_channel(119.0, seed=9)
    beam = make_channel(119.0, seed=9, antenna_mode="directional", antenna_beamwidth_deg=90.0)
    # One 3 dB boresight gain per antenna end.
    assert linear_to_db(beam.g_ms()) - linear_to_db(omni.g_ms()) == pytest.approx(6.0, abs=1e-9)
    assert beam.g_sd(1) == pytest.approx(omni.g_sd(1))
    assert beam.g_um(1) == pytest.approx(omni.g_um(1))
    assert beam.g_ud(1, 2) == pytest.approx(omni.g_ud(1, 2))


def test_realized_channel_deterministic():
    a = make_channel(100.0, seed=13)
    b = make_channel(100.0, seed=13)
    assert a.gain == b.gain


def test_fast_fading_redraws_gains(channel_100):
    rng = np.random.default_rng(0)
    faded = channel_100.with_fast_fading(rng)
    assert faded.noise_ue_w == channel_100.noise_ue_w
    assert all(g > 0.0 for g in faded.gain.values())
    assert faded.gain != channel_100.gain
    # Directed links fade independently: reciprocity does not survive.
    assert any(
        faded.gain[(a, b)] != faded.gain[(b, a)] for (a, b) in list(faded.gain)[:20]
    )
