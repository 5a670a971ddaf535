"""Render run, baseline, and comparison figures next to the CSV outputs."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from . import analysis  # noqa: E402
from .engine import read_population  # noqa: E402

FIGURE_DPI = 120


def _style():
    plt.rcParams.update({
        "figure.figsize": (6.0, 3.8),
        "axes.grid": True,
        "grid.alpha": 0.3,
        "font.size": 9,
    })


def _read_run_metrics(run_dir: Path) -> list[dict]:
    rows = []
    g = 0
    while (run_dir / f"gen_{g}" / "metrics.csv").exists():
        with open(run_dir / f"gen_{g}" / "metrics.csv", newline="") as fh:
            rows.extend(csv.DictReader(fh))
        g += 1
    if not rows:
        raise FileNotFoundError(f"no generation metrics under {run_dir}")
    return rows


def _column(rows, name) -> list[float]:
    return [float(r[name]) for r in rows if r.get(name)]


def render_run(run_dir) -> list[Path]:
    """Figures for one run directory; returns the written paths."""
    run_dir = Path(run_dir)
    rows = _read_run_metrics(run_dir)
    fig_dir = run_dir / "figures"
    fig_dir.mkdir(exist_ok=True)
    _style()
    gens = _column(rows, "generation")
    written = []

    fig, ax1 = plt.subplots()
    ax1.plot(gens, _column(rows, "front1_hypervolume"), "o-", color="tab:blue")
    ax1.set_xlabel("generation")
    ax1.set_ylabel("rank-1 front hypervolume", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.plot(gens, _column(rows, "front1_size"), "s--", color="tab:orange")
    ax2.set_ylabel("rank-1 front size", color="tab:orange")
    ax2.grid(False)
    fig.tight_layout()
    path = fig_dir / "hypervolume.png"
    fig.savefig(path, dpi=FIGURE_DPI)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots()
    for name in ("validity_fragments", "novelty", "diversity"):
        ax.plot(gens, _column(rows, name), "o-", label=name.replace("_", " "))
    ax.set_xlabel("generation")
    ax.set_ylabel("ratio")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    fig.tight_layout()
    path = fig_dir / "population_quality.png"
    fig.savefig(path, dpi=FIGURE_DPI)
    plt.close(fig)
    written.append(path)

    loss_gens = [float(r["generation"]) for r in rows if r.get("total")]
    if loss_gens:
        fig, ax = plt.subplots()
        for name in ("recon", "kl", "prop_mse", "total"):
            ax.plot(loss_gens, _column(rows, name), "o-", label=name)
        ax.set_xlabel("generation")
        ax.set_ylabel("final-epoch loss term")
        ax.set_yscale("log")
        ax.legend()
        fig.tight_layout()
        path = fig_dir / "training_losses.png"
        fig.savefig(path, dpi=FIGURE_DPI)
        plt.close(fig)
        written.append(path)

    final_gen = int(gens[-1])
    pop = read_population(run_dir / f"gen_{final_gen}" / "population.jsonl")
    hists = analysis.distribution_summary(pop.members, bins=20)
    dist_csv = fig_dir / "distributions_final.csv"
    with open(dist_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "bin_lower", "count"])
        for feature, pairs in hists.items():
            for edge, count in pairs:
                writer.writerow([feature, f"{edge:.9g}", count])
    written.append(dist_csv)

    fig, axes = plt.subplots(2, 4, figsize=(12, 5.5))
    for ax, (feature, pairs) in zip(axes.ravel(), hists.items()):
        edges = [p[0] for p in pairs]
        counts = [p[1] for p in pairs]
        width = edges[1] - edges[0] if len(edges) > 1 else 1.0
        ax.bar(edges, counts, width=width, align="edge")
        ax.set_title(feature)
    axes.ravel()[-1].axis("off")
    fig.suptitle(f"generation {final_gen} population")
    fig.tight_layout()
    path = fig_dir / "distributions_final.png"
    fig.savefig(path, dpi=FIGURE_DPI)
    plt.close(fig)
    written.append(path)
    return written


def render_baseline(out_dir, trace: list[float]) -> list[Path]:
    """Hypervolume-vs-batch figure for the quasi-random baseline."""
    out_dir = Path(out_dir)
    fig_dir = out_dir / "figures"
    fig_dir.mkdir(exist_ok=True)
    _style()
    fig, ax = plt.subplots()
    ax.plot(range(len(trace)), trace, "o-")
    ax.set_xlabel("batch (0 = initial design)")
    ax.set_ylabel("cumulative rank-1 hypervolume")
    fig.tight_layout()
    path = fig_dir / "baseline_hypervolume.png"
    fig.savefig(path, dpi=FIGURE_DPI)
    plt.close(fig)
    return [path]


def render_compare(out_dir, comparison: analysis.FrontComparison) -> list[Path]:
    """Survival bar chart for a front comparison."""
    out_dir = Path(out_dir)
    fig_dir = out_dir / "figures"
    fig_dir.mkdir(exist_ok=True)
    _style()
    rows = comparison.rows()
    fig, ax = plt.subplots()
    names = [r[0] for r in rows]
    ax.bar(names, [r[3] for r in rows], color="tab:blue")
    ax.set_ylabel("% of source front in pooled rank-1 front")
    ax.set_ylim(0, 105)
    for i, r in enumerate(rows):
        ax.text(i, r[3] + 1, f"{r[2]}/{r[1]}", ha="center", fontsize=8)
    fig.tight_layout()
    path = fig_dir / "front_survival.png"
    fig.savefig(path, dpi=FIGURE_DPI)
    plt.close(fig)
    return [path]
