"""Figure rendering and delimited-text export for reports and simulations.

Every CLI report path writes a machine-readable JSON document, a TSV with one
row per arm (or per policy/cohort), and PNG figures next to them. Rendering
is headless (Agg) and deterministic.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIG_DPI = 150


def write_tsv(path: str | Path, rows: Sequence[Mapping]) -> Path:
    """Tab-delimited export with a header row; column order follows the first row."""
    path = Path(path)
    if not rows:
        path.write_text("", encoding="utf-8")
        return path
    fieldnames = list(rows[0])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, delimiter="\t")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in fieldnames})
    return path


def write_json(path: str | Path, payload: Mapping) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def fig_effect_intervals(report: Mapping) -> plt.Figure:
    """Per-arm effect estimates with 95% credible intervals; zero line for reference."""
    arms = report["arms"]
    labels = [row["arm"] for row in arms]
    means = np.array([row["effect_mean"] for row in arms])
    lows = np.array([row["ci95_low"] for row in arms])
    highs = np.array([row["ci95_high"] for row in arms])
    y = np.arange(len(labels))

    fig, ax = plt.subplots(figsize=(6, 0.9 + 0.5 * len(labels)))
    ax.errorbar(
        means, y, xerr=[means - lows, highs - means], fmt="o", color="tab:blue", capsize=4
    )
    ax.axvline(0.0, color="grey", lw=1, ls="--")
    ax.set_yticks(y)
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    ax.set_xlabel("effect on event-days per period (negative = improvement)")
    ax.set_title(f"Trial {report['trial_id']}: effect estimates (95% CI)")
    fig.tight_layout()
    return fig


def fig_prob_optimal(report: Mapping) -> plt.Figure:
    """Bar chart of each arm's probability of being the best option."""
    arms = report["arms"]
    labels = [row["arm"] for row in arms]
    probs = [row["prob_optimal"] for row in arms]

    fig, ax = plt.subplots(figsize=(6, 3.2))
    bars = ax.bar(labels, probs, color="tab:green")
    ax.bar_label(bars, fmt="%.2f")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("P(best option)")
    ax.set_title(f"Trial {report['trial_id']}: probability optimal")
    fig.tight_layout()
    return fig


def fig_case_study(rows: Sequence[Mapping], delta_per_month: float) -> plt.Figure:
    """Quantile bands of P(reduction >= delta/month) per arm across replicates."""
    labels = [r["arm"] for r in rows]
    q10 = np.array([r["prob_q10"] for r in rows])
    q50 = np.array([r["prob_q50"] for r in rows])
    q90 = np.array([r["prob_q90"] for r in rows])
    x = np.arange(len(labels))

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.errorbar(x, q50, yerr=[q50 - q10, q90 - q50], fmt="s", color="tab:purple", capsize=5)
    ax.set_xticks(x)
    ax.set_xticklabels(labels)
    ax.set_ylim(-0.02, 1.02)
    ax.set_ylabel(f"P(reduction >= {delta_per_month:g} days/month)")
    ax.set_title("Replicated case study: posterior probability bands (q10/q50/q90)")
    fig.tight_layout()
    return fig


def fig_policy_comparison(comparison: Mapping) -> plt.Figure:
    """Correct-selection rates with bootstrap intervals, one bar per policy."""
    policies = comparison["policies"]
    labels = list(policies)
    rates = np.array([policies[p]["correct_selection_rate"] for p in labels])
    lows = np.array([policies[p]["rate_ci95"][0] for p in labels])
    highs = np.array([policies[p]["rate_ci95"][1] for p in labels])

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    axes[0].bar(labels, rates, yerr=[rates - lows, highs - rates], capsize=5, color="tab:blue")
    axes[0].set_ylim(0, 1.05)
    axes[0].set_ylabel("correct-selection rate")
    axes[0].set_title("Selection accuracy (bootstrap 95% CI)")

    outcomes = [policies[p]["mean_outcome"] for p in labels]
    axes[1].bar(labels, outcomes, color="tab:orange")
    axes[1].set_ylabel("mean event-days per period")
    axes[1].set_title("Realized outcome (lower is better)")
    fig.tight_layout()
    return fig


def fig_auc(result: Mapping) -> plt.Figure:
    """Within- vs cross-cohort AUC bars with the chance line."""
    labels = ["within cohort", "cross cohort"]
    values = [result["within_cohort_auc"], result["cross_cohort_auc"]]

    fig, ax = plt.subplots(figsize=(5, 3.2))
    bars = ax.bar(labels, values, color=["tab:blue", "tab:red"])
    ax.bar_label(bars, fmt="%.3f")
    ax.axhline(0.5, color="grey", lw=1, ls="--", label="chance")
    ax.set_ylim(0, 1.0)
    ax.set_ylabel("AUC")
    ax.set_title("Responder prediction transfers poorly across cohorts")
    ax.legend()
    fig.tight_layout()
    return fig


def save_figures(figures: Mapping[str, plt.Figure], out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, fig in figures.items():
        path = out_dir / f"{name}.png"
        fig.savefig(path, dpi=FIG_DPI)
        plt.close(fig)
        paths.append(path)
    return paths


def save_report_outputs(report, out_dir: str | Path) -> list[Path]:
    """Write report.json + per-arm and per-period TSVs + figures."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    d = report.to_dict()
    paths = [
        write_json(out_dir / "report.json", d),
        write_tsv(out_dir / "report_arms.tsv", report.arm_rows()),
        write_tsv(out_dir / "report_periods.tsv", d["periods"]),
    ]
    paths += save_figures(
        {"effect_intervals": fig_effect_intervals(d), "prob_optimal": fig_prob_optimal(d)}, out_dir
    )
    return paths
