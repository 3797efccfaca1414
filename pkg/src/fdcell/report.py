"""Cross-run comparison: summary tables and rendered figures.

The report path consumes the metrics.json files written by `run` for one
or more variants and produces delimited summaries plus PNG figures next to
them.  Percentage gains are computed per backhaul-loss bin against the
half-duplex run when one is present.
"""
from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

VARIANT_ORDER = ("hd", "fd-fixed", "fd-pa")
VARIANT_LABELS = {"hd": "HD", "fd-fixed": "FD fixed power", "fd-pa": "FD power allocation"}
MODE_ORDER = ("fdd", "fdu", "fdb", "fda", "hd")


def load_metrics_json(run_dir: str) -> dict:
    path = os.path.join(run_dir, "metrics.json")
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _bin_key(b: dict):
    loss = b["backhaul_loss_db"]
    return "random" if loss is None else float(loss)


def jain_index(values) -> float:
    """Jain fairness index of a non-negative allocation vector."""
    arr = np.asarray(values, dtype=float)
    total = arr.sum()
    if total <= 0.0:
        return 1.0
    return float(total**2 / (len(arr) * (arr**2).sum()))


def summarize(runs: list[dict]) -> list[dict]:
    """Flatten runs into per-(bin, variant) rows with gains vs the HD run."""
    if not runs:
        raise ValueError("no runs to report")
    hd_by_bin: dict = {}
    for run in runs:
        if run["variant"] == "hd":
            for b in run["bins"]:
                hd_by_bin[_bin_key(b)] = b

    rows = []
    for run in runs:
        for b in run["bins"]:
            key = _bin_key(b)
            total = b["served_dl_bps"] + b["served_ul_bps"]
            row = {
                "backhaul_loss_db": key,
                "variant": run["variant"],
                "served_dl_bps": b["served_dl_bps"],
                "served_ul_bps": b["served_ul_bps"],
                "served_total_bps": total,
                "gain_vs_hd_pct": None,
                "jain_dl": None,
                "jain_ul": None,
            }
            hd = hd_by_bin.get(key)
            if hd is not None:
                hd_total = hd["served_dl_bps"] + hd["served_ul_bps"]
                if hd_total > 0.0:
                    row["gain_vs_hd_pct"] = 100.0 * (total - hd_total) / hd_total
            per_ue_dl = np.sum([d["per_ue_dl_bits"] for d in b["drops"]], axis=0)
            per_ue_ul = np.sum([d["per_ue_ul_bits"] for d in b["drops"]], axis=0)
            row["jain_dl"] = jain_index(per_ue_dl)
            row["jain_ul"] = jain_index(per_ue_ul)
            rows.append(row)
    rows.sort(key=lambda r: (str(r["backhaul_loss_db"]), r["variant"]))
    return rows


def write_report(run_dirs: list[str], out_dir: str) -> list[str]:
    """Build summary.csv, mode_usage.csv and the figures; returns the list
    of files written."""
    runs = [load_metrics_json(d) for d in run_dirs]
    if not runs:
        raise ValueError("no runs to report")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    rows = summarize(runs)
    path = os.path.join(out_dir, "summary.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "backhaul_loss_db",
                "variant",
                "served_dl_bps",
                "served_ul_bps",
                "served_total_bps",
                "gain_vs_hd_pct",
                "jain_dl",
                "jain_ul",
            ]
        )
        for r in rows:
            w.writerow(
                [
                    r["backhaul_loss_db"],
                    r["variant"],
                    f"{r['served_dl_bps']:.1f}",
                    f"{r['served_ul_bps']:.1f}",
                    f"{r['served_total_bps']:.1f}",
                    "" if r["gain_vs_hd_pct"] is None else f"{r['gain_vs_hd_pct']:.2f}",
                    f"{r['jain_dl']:.4f}",
                    f"{r['jain_ul']:.4f}",
                ]
            )
    written.append(path)

    path = os.path.join(out_dir, "mode_usage.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["backhaul_loss_db", "variant", "mode", "fraction"])
        for run in runs:
            for b in run["bins"]:
                for mode in MODE_ORDER:
                    frac = b["mode_usage"].get(mode, 0.0)
                    w.writerow([_bin_key(b), run["variant"], mode, f"{frac:.6f}"])
    written.append(path)

    written += _render_figures(runs, rows, out_dir)
    return written


def _numeric_bins(rows) -> list[float]:
    return sorted({r["backhaul_loss_db"] for r in rows if r["backhaul_loss_db"] != "random"})


def _render_figures(runs: list[dict], rows: list[dict], out_dir: str) -> list[str]:
    written = []
    bins = _numeric_bins(rows)
    variants = [v for v in VARIANT_ORDER if any(r["variant"] == v for r in rows)]
    variants += sorted({r["variant"] for r in rows} - set(variants))

    if bins:
        for direction, key in (("dl", "served_dl_bps"), ("ul", "served_ul_bps")):
            fig, ax = plt.subplots(figsize=(7, 4.5))
            for variant in variants:
                ys = []
                for b in bins:
                    match = [r for r in rows if r["variant"] == variant and r["backhaul_loss_db"] == b]
                    ys.append(match[0][key] / 1e6 if match else np.nan)
                ax.plot(bins, ys, marker="o", label=VARIANT_LABELS.get(variant, variant))
            ax.set_xlabel("backhaul loss (dB)")
            ax.set_ylabel(f"served {direction.upper()} throughput (Mb/s)")
            ax.grid(True, alpha=0.4)
            ax.legend()
            fig.tight_layout()
            path = os.path.join(out_dir, f"throughput_{direction}.png")
            fig.savefig(path, dpi=150)
            plt.close(fig)
            written.append(path)

    # Mode usage: one group of stacked bars per (bin, variant).
    groups = []
    for run in runs:
        for b in run["bins"]:
            groups.append((f"{_bin_key(b)} dB\n{run['variant']}", b["mode_usage"]))
    if groups:
        fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(groups)), 4.5))
        x = np.arange(len(groups))
        bottom = np.zeros(len(groups))
        for mode in MODE_ORDER:
            vals = np.array([g[1].get(mode, 0.0) for g in groups])
            ax.bar(x, vals, bottom=bottom, label=mode.upper())
            bottom += vals
        ax.set_xticks(x)
        ax.set_xticklabels([g[0] for g in groups], fontsize=8)
        ax.set_ylabel("fraction of active slots")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = os.path.join(out_dir, "mode_usage.png")
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def render_sweep_figure(result, path: str) -> None:
    """Plot one capacity sweep: HD line, FD pattern 1 and the pattern-2
    cases against the swept interference parameter."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = [r.param_db for r in result.rows]
    ax.plot(xs, [r.c_hd for r in result.rows], "k--", label="HD")
    ax.plot(xs, [r.c_fd1 for r in result.rows], label="FD pattern 1")
    for j, off in enumerate(result.config.u2d_offsets_db):
        ax.plot(
            xs,
            [r.c_fd2[j] for r in result.rows],
            label=f"FD pattern 2 (u2d {off:+g} dB)",
        )
    ax.set_xlabel(f"{result.config.axis} (dB)")
    ax.set_ylabel("spectral efficiency (b/s/Hz)")
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
