"""SVG plots and run-directory report bundling for the CLI."""

from __future__ import annotations

import base64
import json
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

# deterministic SVG ids and no embedded creation date
plt.rcParams["svg.hashsalt"] = "stereoid"
_SVG_META = {"Date": None}


def save_score_histogram(
    scores: Sequence[float],
    labels: Sequence[int],
    path: str | Path,
    threshold: Optional[float] = None,
) -> None:
    """Anomaly-score histogram, flagged and normal frames separately."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    fig, ax = plt.subplots(figsize=(6, 4))
    bins = np.linspace(scores.min(), scores.max() + 1e-9, 40)
    ax.hist(scores[labels == 1], bins=bins, alpha=0.7, label="normal", color="#4878d0")
    ax.hist(scores[labels == -1], bins=bins, alpha=0.7, label="issue", color="#d65f5f")
    if threshold is not None:
        ax.axvline(threshold, color="black", linestyle="--", linewidth=1, label="threshold")
    ax.set_xlabel("anomaly score")
    ax.set_ylabel("frames")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def save_grid_heatmap(table: Sequence[dict], path: str | Path) -> None:
    """F1 heatmap over the (contamination, n_estimators) tuning grid."""
    conts = sorted({row["contamination"] for row in table})
    nests = sorted({row["n_estimators"] for row in table})
    grid = np.full((len(nests), len(conts)), np.nan)
    ci = {c: i for i, c in enumerate(conts)}
    ni = {n: i for i, n in enumerate(nests)}
    for row in table:
        grid[ni[row["n_estimators"]], ci[row["contamination"]]] = row["f1"]
    fig, ax = plt.subplots(figsize=(7, 5))
    im = ax.imshow(grid, aspect="auto", origin="lower", cmap="viridis")
    ax.set_xlabel("contamination")
    ax.set_ylabel("n_estimators")
    step_x = max(1, len(conts) // 8)
    step_y = max(1, len(nests) // 8)
    ax.set_xticks(range(0, len(conts), step_x), [f"{c:.3f}" for c in conts[::step_x]])
    ax.set_yticks(range(0, len(nests), step_y), [str(n) for n in nests[::step_y]])
    fig.colorbar(im, ax=ax, label="F1 (issue class)")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def save_loss_curves(log_path: str | Path, path: str | Path) -> None:
    """Loss components per generator step from an NDJSON training log."""
    steps, g_total, g_l1, d_loss = [], [], [], []
    with open(log_path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            steps.append(rec["step"])
            g_total.append(rec["g_total"])
            g_l1.append(rec["g_l1"])
            d_loss.append(rec["d_loss"])
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(steps, g_total, label="generator total", linewidth=1)
    ax.plot(steps, d_loss, label="critic", linewidth=1)
    ax2 = ax.twinx()
    ax2.plot(steps, g_l1, label="L1", color="#55a868", linewidth=1)
    ax2.set_ylabel("L1")
    ax.set_xlabel("generator step")
    ax.set_ylabel("loss")
    lines = ax.get_lines() + ax2.get_lines()
    ax.legend(lines, [ln.get_label() for ln in lines], loc="upper right")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def bundle_report(run_dir: str | Path, out_name: str = "report") -> tuple[Path, Path]:
    """Collect a run directory's artifacts into markdown + HTML summaries.

    The markdown references SVGs by relative path; the HTML inlines them.
    """
    run_dir = Path(run_dir)
    sections: list[str] = ["# stereoid run report", ""]
    run_json = run_dir / "run.json"
    if run_json.exists():
        sections += ["## Configuration", "", "```json", run_json.read_text().strip(), "```", ""]
    for label, pattern in [
        ("Text tables", "*.txt"),
        ("CSV outputs", "*.csv"),
    ]:
        files = sorted(run_dir.glob(pattern))
        if not files:
            continue
        sections += [f"## {label}", ""]
        for f in files:
            if f.suffix == ".txt":
                sections += [f"### {f.name}", "", "```", f.read_text().rstrip(), "```", ""]
            else:
                sections += [f"- `{f.name}` ({sum(1 for _ in open(f)) - 1} rows)"]
        sections += [""]
    svgs = sorted(run_dir.glob("*.svg"))
    if svgs:
        sections += ["## Plots", ""]
        for f in svgs:
            sections += [f"### {f.name}", "", f"![{f.stem}]({f.name})", ""]
    md = "\n".join(sections)
    md_path = run_dir / f"{out_name}.md"
    md_path.write_text(md)

    html_parts = ["<html><head><meta charset='utf-8'><title>stereoid report</title></head><body>"]
    html_parts.append("<pre>" + md.replace("&", "&amp;").replace("<", "&lt;") + "</pre>")
    for f in svgs:
        html_parts.append(f"<h3>{f.name}</h3>")
        html_parts.append(f.read_text())
    html_parts.append("</body></html>")
    html_path = run_dir / f"{out_name}.html"
    html_path.write_text("\n".join(html_parts))
    return md_path, html_path
