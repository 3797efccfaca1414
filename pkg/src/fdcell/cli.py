"""Command-line entry points.

Subcommands:
  sweep-capacity  closed-form HD/FD comparison across an interference sweep
  power-opt       solve one two-link power allocation (optionally vs oracle)
  dump-channel    realize one drop and dump the link table (and SINR table)
  run             Monte Carlo simulation campaign for one variant
  report          combine finished runs into summary tables and figures
"""
from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import capacity, report, sim
from .config import ChannelConfig, VARIANTS, load_run_config
from .power import PowerProblem, SolveOptions, oracle_grid, solve_sp
from .radio import mode_sinr_rows
from .topology import drop_topology, realize_channel, write_channel_csv
from .units import db_to_linear, dbm_to_watt, watt_to_dbm


def _cmd_sweep_capacity(args) -> int:
    if args.preset == "fig3":
        cfg = capacity.fig3_preset()
    else:
        cfg = capacity.fig4_preset()
    cfg.base_snr_db = args.base_snr_db
    cfg.start_db = args.start_db
    cfg.stop_db = args.stop_db
    cfg.step_db = args.step_db
    if args.u2d_offsets_db:
        cfg.u2d_offsets_db = tuple(args.u2d_offsets_db)
    result = capacity.sweep(cfg)
    capacity.write_sweep_csv(result, args.out)
    crossover_path = args.crossovers_out or (args.out.rsplit(".", 1)[0] + "_crossovers.csv")
    capacity.write_crossover_csv(result, crossover_path)
    if args.fig:
        report.render_sweep_figure(result, args.fig)
    x1 = result.crossover_fd1_db
    print(f"wrote {args.out} ({len(result.rows)} rows) and {crossover_path}")
    print(f"FD pattern 1 falls below HD at {x1:.2f} dB" if x1 is not None else
          "FD pattern 1 stays above HD over the grid")
    for off, x in result.crossover_fd2_db.items():
        print(
            f"FD pattern 2 (u2d {off:+g} dB) falls below HD at {x:.2f} dB"
            if x is not None
            else f"FD pattern 2 (u2d {off:+g} dB) stays above HD over the grid"
        )
    return 0


def _cmd_power_opt(args) -> int:
    problem = PowerProblem(
        w1=args.w1,
        w2=args.w2,
        g1=db_to_linear(args.g1_db),
        g2=db_to_linear(args.g2_db),
        c1=db_to_linear(args.c1_db) if args.c1_db is not None else 0.0,
        c2=db_to_linear(args.c2_db) if args.c2_db is not None else 0.0,
        n1=dbm_to_watt(args.n1_dbm),
        n2=dbm_to_watt(args.n2_dbm),
        p1_max=dbm_to_watt(args.p1_max_dbm),
        p2_max=dbm_to_watt(args.p2_max_dbm),
    )
    opts = SolveOptions(
        epsilon=args.epsilon, max_iters=args.max_iters, objective=args.objective
    )
    sol = solve_sp(problem, opts)

    def fmt_p(p: float) -> str:
        return "off" if p <= 0.0 else f"{watt_to_dbm(p):.2f} dBm"

    print(f"mode label: {args.mode}")
    print(f"p1 = {sol.p1:.6g} W ({fmt_p(sol.p1)})")
    print(f"p2 = {sol.p2:.6g} W ({fmt_p(sol.p2)})")
    print(f"objective = {sol.objective:.9g} (weighted sum rate, nats)")
    print(f"iterations = {sol.iterations}, converged = {sol.converged}")
    if args.trace_out:
        with open(args.trace_out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "p1_w", "p2_w", "objective_nats"])
            for i, (p1, p2, obj) in enumerate(sol.trace):
                w.writerow([i, f"{p1:.9g}", f"{p2:.9g}", f"{obj:.9g}"])
        print(f"wrote trace to {args.trace_out}")
    if args.oracle:
        ref = oracle_grid(problem)
        ratio = sol.objective / ref.objective if ref.objective > 0 else float("inf")
        print(
            f"oracle: p1 = {ref.p1:.6g} W, p2 = {ref.p2:.6g} W, "
            f"objective = {ref.objective:.9g} (solver/oracle = {ratio:.6f})"
        )
    return 0


def _cmd_dump_channel(args) -> int:
    cfg = load_run_config(args.config) if args.config else None
    channel_cfg = cfg.channel if cfg else ChannelConfig()
    n_ues = args.n_ues or (cfg.n_ues if cfg else 10)
    rng = np.random.default_rng(args.seed)
    topo = drop_topology(rng, n_ues, channel_cfg)
    channel = realize_channel(topo, rng, channel_cfg)
    write_channel_csv(channel, args.out)
    print(f"wrote {args.out} ({len(channel.links)} links)")
    if args.sinr_out:
        rows = mode_sinr_rows(channel, n_ues)
        with open(args.sinr_out, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=["mode", "link", "ue", "sinr_db", "se_bps_hz"])
            w.writeheader()
            w.writerows(rows)
        print(f"wrote {args.sinr_out} ({len(rows)} rows)")
    return 0


def _cmd_run(args) -> int:
    cfg = load_run_config(args.config)
    if args.variant:
        cfg.variant = args.variant
    if args.seed is not None:
        cfg.seed = args.seed
    if args.exact:
        cfg.exact = True
    cfg.validate()
    metrics = sim.run(cfg, out_dir=args.out)
    for b in metrics.bins:
        dl, _ = b.served_dl_bps()
        ul, _ = b.served_ul_bps()
        label = "random" if b.backhaul_loss_db is None else f"{b.backhaul_loss_db:g} dB"
        print(
            f"[{cfg.variant}] backhaul {label}: served DL {dl / 1e6:.2f} Mb/s, "
            f"UL {ul / 1e6:.2f} Mb/s over {len(b.drops)} drops"
        )
    if args.out:
        print(f"outputs in {args.out}")
    return 0


def _cmd_report(args) -> int:
    written = report.write_report(args.runs, args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdcell")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep-capacity", help="closed-form HD vs FD capacity sweep")
    p.add_argument("--preset", choices=["fig3", "fig4"], required=True,
                   help="fig3 sweeps direct interference, fig4 self-interference")
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--crossovers-out", default=None)
    p.add_argument("--fig", default=None, help="also render the sweep to this PNG")
    p.add_argument("--base-snr-db", type=float, default=12.0)
    p.add_argument("--start-db", type=float, default=-10.0)
    p.add_argument("--stop-db", type=float, default=20.0)
    p.add_argument("--step-db", type=float, default=0.5)
    p.add_argument("--u2d-offsets-db", type=float, nargs="+", default=None)
    p.set_defaults(func=_cmd_sweep_capacity)

    p = sub.add_parser("power-opt", help="solve one two-link power allocation")
    p.add_argument("--mode", choices=["fdd", "fdu", "fdb", "fda", "generic"], default="generic")
    p.add_argument("--w1", type=float, default=1.0)
    p.add_argument("--w2", type=float, default=1.0)
    p.add_argument("--g1-db", type=float, required=True, help="serving gain of link 1 (dB)")
    p.add_argument("--g2-db", type=float, required=True)
    p.add_argument("--c1-db", type=float, default=None, help="cross gain into link 1 (dB); omit for none")
    p.add_argument("--c2-db", type=float, default=None)
    p.add_argument("--n1-dbm", type=float, default=-91.0)
    p.add_argument("--n2-dbm", type=float, default=-95.0)
    p.add_argument("--p1-max-dbm", type=float, default=46.0)
    p.add_argument("--p2-max-dbm", type=float, default=24.0)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--objective", choices=["product", "sum-ratio"], default="product")
    p.add_argument("--oracle", action="store_true", help="compare against the grid oracle")
    p.add_argument("--trace-out", default=None)
    p.set_defaults(func=_cmd_power_opt)

    p = sub.add_parser("dump-channel", help="realize one drop and dump its links")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--n-ues", type=int, default=None)
    p.add_argument("--out", default="channel.csv")
    p.add_argument("--sinr-out", default=None, help="also dump per-mode SINRs at max power")
    p.set_defaults(func=_cmd_dump_channel)

    p = sub.add_parser("run", help="Monte Carlo simulation for one variant")
    p.add_argument("--config", required=True)
    p.add_argument("--variant", choices=list(VARIANTS), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--exact", action="store_true",
                   help="exhaustive schedule search (small cells only)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="summaries and figures from finished runs")
    p.add_argument("--runs", nargs="+", required=True, help="run output directories")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
