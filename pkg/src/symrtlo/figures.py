"""Report figures.

Renders matplotlib charts for an optimization run next to a delimited
summary: per-kind cell counts before/after (PNG + CSV), rule-retrieval
scores with the elbow cutoff, and FSM state counts when the control-flow
path ran. Pure file output, Agg backend, no display required.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def render_figures(report, outdir) -> list[str]:
    """Write report figures into ``outdir``; returns the created paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    created: list[str] = []

    created.append(_cost_breakdown(report, outdir))
    created.append(_cost_csv(report, outdir))
    if report.plan.selected_rules:
        created.append(_rule_scores(report, outdir))
    if report.fsm_summary:
        created.append(_fsm_states(report, outdir))
    return created


def _cost_breakdown(report, outdir: Path) -> str:
    before = report.cost_before.histogram
    after = report.cost_after.histogram
    kinds = sorted(set(before) | set(after))
    if not kinds:
        kinds = ["(none)"]
    xs = range(len(kinds))
    width = 0.38

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(
        [x - width / 2 for x in xs],
        [before.get(k, 0) for k in kinds],
        width,
        label=f"before ({report.cost_before.cells} cells)",
        color="#888888",
    )
    ax.bar(
        [x + width / 2 for x in xs],
        [after.get(k, 0) for k in kinds],
        width,
        label=f"after ({report.cost_after.cells} cells)",
        color="#2a7fff",
    )
    ax.set_xticks(list(xs))
    ax.set_xticklabels(kinds, rotation=30, ha="right")
    ax.set_ylabel("primitive cells")
    ax.set_title("Cell counts by kind")
    ax.legend()
    fig.tight_layout()
    path = outdir / "cost_breakdown.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def _cost_csv(report, outdir: Path) -> str:
    before = report.cost_before.histogram
    after = report.cost_after.histogram
    path = outdir / "cost_breakdown.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "cells_before", "cells_after"])
        for kind in sorted(set(before) | set(after)):
            writer.writerow([kind, before.get(kind, 0), after.get(kind, 0)])
        writer.writerow(["total", report.cost_before.cells, report.cost_after.cells])
        writer.writerow(
            ["area_proxy", report.cost_before.area_proxy, report.cost_after.area_proxy]
        )
        writer.writerow(["depth", report.cost_before.depth, report.cost_after.depth])
        writer.writerow(["wires", report.cost_before.wires, report.cost_after.wires])
    return str(path)


def _rule_scores(report, outdir: Path) -> str:
    names = [n for n, _ in report.plan.selected_rules]
    scores = [s for _, s in report.plan.selected_rules]

    fig, ax = plt.subplots(figsize=(7, 3.2 + 0.25 * len(names)))
    ys = range(len(names))
    ax.barh(list(ys), scores, color="#2a7fff")
    ax.set_yticks(list(ys))
    ax.set_yticklabels(names)
    ax.invert_yaxis()
    ax.set_xlabel("cosine similarity")
    ax.set_title(f"Selected rules (goal={report.plan.goal})")
    if scores:
        ax.axvline(min(scores), linestyle="--", color="#cc3333", linewidth=1,
                   label="elbow threshold")
        ax.legend()
    fig.tight_layout()
    path = outdir / "rule_scores.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)


def _fsm_states(report, outdir: Path) -> str:
    summary = report.fsm_summary
    fig, ax = plt.subplots(figsize=(4, 3.5))
    ax.bar(
        ["before", "after"],
        [summary["original_states"], summary["minimized_states"]],
        color=["#888888", "#2a7fff"],
    )
    ax.set_ylabel("FSM states")
    ax.set_title("State minimization")
    fig.tight_layout()
    path = outdir / "fsm_states.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return str(path)
