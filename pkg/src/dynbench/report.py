"""Figure rendering for rollout summaries.

The report path writes two figures next to the delimited output: the
per-round mean majority risk with a standard-deviation band, and the
early-round similarity score against the final risk with a least-squares
fit.  Data files stay byte-deterministic; figures are regeneratable from
them.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import RolloutSummary


def risk_curve_figure(summary: RolloutSummary, path: str) -> str:
    mean = np.asarray(summary.mean_series)
    std = np.asarray(summary.std_series)
    rounds = np.arange(len(mean))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(rounds, mean, color="C0", label="mean risk")
    ax.fill_between(rounds, mean - std, mean + std, color="C0", alpha=0.25, label="std")
    ax.set_xlabel("round")
    ax.set_ylabel("majority-vote risk")
    ax.set_title(f"{summary.config.design.get('kind', 'run')}: {summary.config.rollouts} rollouts")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def z_scatter_figure(summary: RolloutSummary, path: str) -> str | None:
    pairs = [(r.z, r.final_risk) for r in summary.records if r.z is not None]
    if len(pairs) < 2:
        return None
    zs = np.array([p[0] for p in pairs])
    finals = np.array([p[1] for p in pairs])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(zs, finals, color="C1", s=18)
    if np.ptp(zs) > 0:
        slope, intercept = np.polyfit(zs, finals, 1)
        grid = np.linspace(zs.min(), zs.max(), 50)
        ax.plot(grid, slope * grid + intercept, "b--", linewidth=1, label="least-squares fit")
        ax.legend()
    r = summary.pearson_z_final
    title = f"z_{summary.config.z_round} vs final risk"
    if r is not None:
        title += f"  (r = {r:.3f})"
    ax.set_title(title)
    ax.set_xlabel(f"similarity score at round {summary.config.z_round}")
    ax.set_ylabel("final majority-vote risk")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_report(summary: RolloutSummary, out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = [risk_curve_figure(summary, os.path.join(out_dir, "risk_curve.png"))]
    scatter = z_scatter_figure(summary, os.path.join(out_dir, "z_vs_final.png"))
    if scatter:
        written.append(scatter)
    return written
