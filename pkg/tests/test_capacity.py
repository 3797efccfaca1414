import csv
import math

import pytest
from scipy.optimize import brentq

from fdcell.capacity import (
    LinkBudget,
    SweepConfig,
    _crossover,
    c_fd_mode1,
    c_fd_mode2,
    c_hd,
    fig3_preset,
    fig4_preset,
    sweep,
    write_crossover_csv,
    write_sweep_csv,
)
from fdcell.units import db_to_linear

# Frozen reference values at the 12 dB symmetric operating point.
G12 = db_to_linear(12.0)
C_HD_12 = 4.074585234905427
# Where pattern 1 falls below half duplex under a direct-interference sweep:
# 2*log2(1 + g/(1+x)) = log2(1+g)  =>  x = sqrt(1+g), i.e. 5*log10(1+g) in dB.
CROSS_FD1_EXACT = 6.132861877980512
# The 0.5 dB sweep grid's linear interpolation of the same crossing.
CROSS_FD1_SWEEP = 6.132893688837725
CROSS_FD2_PLUS6_EXACT = 3.1328618779805146
CROSS_FD2_PLUS6_SWEEP = 3.1328890820190063


def test_hd_reference_point():
    b = LinkBudget.symmetric(12.0)
    assert c_hd(b) == pytest.approx(C_HD_12, abs=1e-12)
    # Two interference-free hops at the same SNR: each direction runs at the
    # single-hop rate on half the slots.
    assert c_hd(b) == pytest.approx(math.log2(1.0 + G12), abs=1e-12)


def test_fd_doubles_hd_without_interference():
    b = LinkBudget.symmetric(12.0)
    assert c_fd_mode1(b) == pytest.approx(2.0 * c_hd(b), rel=1e-9)
    assert c_fd_mode2(b) == pytest.approx(2.0 * c_hd(b), rel=1e-9)


def test_weaker_hop_limits_each_direction():
    b = LinkBudget(g_ms=G12, g_sm=G12, g_sd=db_to_linear(3.0), g_us=db_to_linear(6.0))
    dl = 0.5 * math.log2(1.0 + db_to_linear(3.0))
    ul = 0.5 * math.log2(1.0 + db_to_linear(6.0))
    assert c_hd(b) == pytest.approx(dl + ul, abs=1e-12)


def test_pattern1_interference_plumbing():
    b = LinkBudget.symmetric(12.0, gamma_direct=1.0, gamma_si=3.0)
    # Backhaul hops suffer self-interference, access hops direct interference;
    # with equal hop SNRs the SI-degraded hop (worse) limits both directions.
    expected = 2.0 * math.log2(1.0 + G12 / 4.0)
    assert c_fd_mode1(b) == pytest.approx(expected, abs=1e-12)


def test_pattern2_interference_plumbing():
    b = LinkBudget.symmetric(12.0, gamma_si=1.0, gamma_u2d=7.0)
    dl = math.log2(1.0 + G12 / 8.0)   # access DL sees the UE-to-UE ratio
    ul = math.log2(1.0 + G12 / 2.0)   # both UL hops see the SI ratio
    assert c_fd_mode2(b) == pytest.approx(dl + ul, abs=1e-12)


def test_direct_interference_sweep_shape():
    result = sweep(fig3_preset())
    fd1 = [r.c_fd1 for r in result.rows]
    hd = [r.c_hd for r in result.rows]
    # Monotone nonincreasing FD curve against a flat HD reference.
    assert all(b <= a + 1e-12 for a, b in zip(fd1, fd1[1:]))
    assert max(hd) - min(hd) < 1e-12
    assert fd1[0] > hd[0]
    assert fd1[-1] < hd[-1]


def test_direct_interference_crossover_two_routes():
    result = sweep(fig3_preset())
    # Independent closed form for the crossing point.
    assert 5.0 * math.log10(1.0 + G12) == pytest.approx(CROSS_FD1_EXACT, abs=1e-12)
    assert result.crossover_fd1_db == pytest.approx(CROSS_FD1_EXACT, abs=5e-4)
    # Regression pin on the grid-interpolated value itself.
    assert result.crossover_fd1_db == pytest.approx(CROSS_FD1_SWEEP, abs=1e-9)


def test_direct_interference_never_sinks_pattern2():
    # Pattern 2 has no hop degraded by direct interference (the UE-to-UE
    # ratio only touches its access DL), so it stays at or above HD here.
    result = sweep(fig3_preset())
    for j, off in enumerate(result.config.u2d_offsets_db):
        assert result.crossover_fd2_db[off] is None
        for row in result.rows:
            assert row.c_fd2[j] >= row.c_hd - 1e-12


def test_si_sweep_both_patterns_cross():
    result = sweep(fig4_preset())
    assert result.crossover_fd1_db == pytest.approx(CROSS_FD1_EXACT, abs=5e-4)
    # With the UE-to-UE ratio at or below the SI ratio, pattern 2's binding
    # hops coincide with pattern 1's, so the curves and crossings match.
    assert result.crossover_fd2_db[-6.0] == pytest.approx(result.crossover_fd1_db, abs=1e-9)
    assert result.crossover_fd2_db[0.0] == pytest.approx(result.crossover_fd1_db, abs=1e-9)
    # A louder UE-to-UE ratio drags pattern 2 below HD sooner.
    exact = brentq(
        lambda x: c_fd_mode2(
            LinkBudget.symmetric(
                12.0, gamma_si=db_to_linear(x), gamma_u2d=db_to_linear(x + 6.0)
            )
        )
        - C_HD_12,
        -10.0,
        20.0,
        xtol=1e-12,
    )
    assert exact == pytest.approx(CROSS_FD2_PLUS6_EXACT, abs=1e-9)
    assert result.crossover_fd2_db[6.0] == pytest.approx(exact, abs=5e-4)
    assert result.crossover_fd2_db[6.0] == pytest.approx(CROSS_FD2_PLUS6_SWEEP, abs=1e-9)


def test_patterns_coincide_when_u2d_below_si():
    for si_db in (-3.0, 2.0, 9.0):
        for off in (-8.0, 0.0):
            b = LinkBudget.symmetric(
                12.0, gamma_si=db_to_linear(si_db), gamma_u2d=db_to_linear(si_db + off)
            )
            assert c_fd_mode2(b) == pytest.approx(c_fd_mode1(b), rel=1e-12)


def test_crossover_interpolation_edge_cases():
    grid = [0.0, 1.0, 2.0]
    assert _crossover(grid, [3.0, 2.0, 1.0], [0.0, 0.0, 0.0]) is None
    assert _crossover(grid, [-1.0, -2.0, -3.0], [0.0, 0.0, 0.0]) == 0.0
    # Linear curve crossing zero halfway between grid points.
    assert _crossover(grid, [1.0, -1.0, -3.0], [0.0, 0.0, 0.0]) == pytest.approx(0.5)


def test_sweep_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(axis="gamma_moon").validate()
    with pytest.raises(ValueError):
        SweepConfig(step_db=0.0).validate()
    with pytest.raises(ValueError):
        SweepConfig(start_db=5.0, stop_db=1.0).validate()
    cfg = SweepConfig(start_db=0.0, stop_db=1.0, step_db=0.5)
    assert cfg.grid_db() == [0.0, 0.5, 1.0]


def test_sweep_csv_outputs(tmp_path):
    result = sweep(fig4_preset())
    sweep_path = tmp_path / "sweep.csv"
    cross_path = tmp_path / "crossovers.csv"
    write_sweep_csv(result, str(sweep_path))
    write_crossover_csv(result, str(cross_path))
    with open(sweep_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["param_db", "c_hd", "c_fd1", "c_fd2_case1", "c_fd2_case2", "c_fd2_case3"]
    assert len(rows) == 1 + len(result.rows)
    with open(cross_path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["curve", "u2d_offset_db", "crossover_db"]
    assert len(rows) == 1 + 1 + 3
