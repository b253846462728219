#!/usr/bin/env python3
"""Render the CSV tables written by `rtgym report` as PNG figures.

Usage: plot_report.py REPORT_DIR [--out DIR]

Needs matplotlib. Each figure is skipped when its table is absent.
"""

import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path


def rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def plot_pressure(plt, table, out):
    by_game = defaultdict(lambda: defaultdict(list))
    for r in table:
        by_game[r["game"]][r["paradigm"]].append((int(r["pressure"]), float(r["mean_score"])))
    for game, lines in by_game.items():
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for paradigm, pts in sorted(lines.items()):
            pts.sort()
            ax.plot([p for p, _ in pts], [s for _, s in pts], marker="o", label=paradigm)
        ax.set_xscale("log", base=2)
        ax.invert_xaxis()  # tighter budgets to the right
        ax.set_xlabel("tokens per step")
        ax.set_ylabel("mean score")
        ax.set_ylim(0, 1.05)
        ax.set_title(game)
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / f"pressure_{game}.png", dpi=150)
        plt.close(fig)


def plot_budget_sweep(plt, table, out):
    groups = defaultdict(list)
    for r in table:
        groups[(r["game"], r["difficulty"], r["pressure"])].append(
            (int(r["agile_reactive_budget"]), float(r["mean_score"]), float(r["natural_cdf_at_budget"]))
        )
    for (game, difficulty, pressure), pts in groups.items():
        if len(pts) < 2:
            continue
        pts.sort()
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot([b for b, _, _ in pts], [s for _, s, _ in pts], marker="o", label="score")
        ax.plot([b for b, _, _ in pts], [c for _, _, c in pts], linestyle="--", label="reactive tokens CDF")
        ax.set_xscale("log", base=2)
        ax.set_xlabel("reactive budget per step")
        ax.set_ylim(0, 1.05)
        ax.set_title(f"{game} {difficulty} @ {pressure}")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / f"budget_{game}_{difficulty}_{pressure}.png", dpi=150)
        plt.close(fig)


def plot_token_cdf(plt, table, out):
    by_game = defaultdict(list)
    for r in table:
        by_game[r["game"]].append((int(r["tokens"]), float(r["fraction"])))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for game, pts in sorted(by_game.items()):
        pts.sort()
        ax.step([t for t, _ in pts], [f for _, f in pts], where="post", label=game)
    ax.set_xlabel("tokens to a reactive answer")
    ax.set_ylabel("fraction of calls")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "token_cdf.png", dpi=150)
    plt.close(fig)


def plot_token_trace(plt, table, out):
    by_cell = defaultdict(list)
    for r in table:
        by_cell[(r["game"], r["cell"])].append(r)
    for (game, cell), rs in by_cell.items():
        rs.sort(key=lambda r: int(r["turn"]))
        turns = [int(r["turn"]) for r in rs]
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for col, label in (("mean_reactive", "reactive"), ("mean_planning", "planning"), ("mean_trace", "plan trace")):
            ax.plot(turns, [float(r[col]) for r in rs], label=label)
        ax.set_xlabel("turn")
        ax.set_ylabel("tokens")
        ax.set_title(f"{game} {cell}")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / f"trace_{game}_{cell}.png", dpi=150)
        plt.close(fig)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("report_dir", type=Path)
    ap.add_argument("--out", type=Path, help="figure directory (default REPORT_DIR/figures)")
    args = ap.parse_args()

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib is not installed; nothing to plot", file=sys.stderr)
        return 1

    out = args.out or args.report_dir / "figures"
    out.mkdir(parents=True, exist_ok=True)
    figures = {
        "plot_pressure.csv": plot_pressure,
        "budget_sweep.csv": plot_budget_sweep,
        "token_cdf.csv": plot_token_cdf,
        "plot_token_trace.csv": plot_token_trace,
    }
    for name, fn in figures.items():
        path = args.report_dir / name
        if path.exists():
            fn(plt, rows(path), out)
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
