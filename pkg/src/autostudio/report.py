"""Session reports: layout-overlay figures plus a delimited summary table.

Reads a persisted session directory and renders, per turn, the generated
image with its bounding boxes drawn on top (subjects solid, components
dashed), alongside one `summary.csv` row per turn.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.patches as patches
import matplotlib.pyplot as plt
from PIL import Image

from .engine.session import load_session_index, load_turn_layout
from .model import RawLayout

SUBJECT_COLOR = "tab:red"
COMPONENT_COLOR = "tab:blue"


def render_layout_figure(layout: RawLayout, image_path: str | Path | None = None):
    """One figure: the turn image (if present) under its box overlay."""
    fig, ax = plt.subplots(figsize=(6, 6 * layout.frame.height / layout.frame.width))
    if image_path and Path(image_path).exists():
        ax.imshow(Image.open(image_path))
    ax.set_xlim(0, layout.frame.width)
    ax.set_ylim(layout.frame.height, 0)
    for entry in layout.entries:
        is_component = entry.id.is_component
        rect = patches.Rectangle(
            (entry.box.x, entry.box.y),
            entry.box.w,
            entry.box.h,
            linewidth=1.0 if is_component else 1.8,
            linestyle="--" if is_component else "-",
            edgecolor=COMPONENT_COLOR if is_component else SUBJECT_COLOR,
            facecolor="none",
        )
        ax.add_patch(rect)
        ax.annotate(
            entry.id.render(),
            (entry.box.x + 2, entry.box.y + 2),
            va="top",
            fontsize=7,
            color=COMPONENT_COLOR if is_component else SUBJECT_COLOR,
        )
    ax.set_title(f"{len(layout.subject_entries())} subjects")
    ax.set_xticks([])
    ax.set_yticks([])
    fig.tight_layout()
    return fig


def write_session_report(session_root: str | Path, out_dir: str | Path) -> list[Path]:
    """Render per-turn figures and the summary CSV; returns written paths."""
    session_root = Path(session_root)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = load_session_index(session_root)
    written: list[Path] = []

    rows = []
    for turn in index.get("turns", []):
        k = turn["k"]
        layout = load_turn_layout(session_root, k)
        image_path = session_root / turn["image"]
        fig = render_layout_figure(layout, image_path)
        fig_path = out / f"turn_{k:02d}_layout.png"
        fig.savefig(fig_path, dpi=110)
        plt.close(fig)
        written.append(fig_path)

        diag = {}
        diag_path = session_root / f"turn_{k}" / "diagnostics.json"
        if diag_path.exists():
            diag = json.loads(diag_path.read_text(encoding="utf-8"))
        rows.append(
            {
                "turn": k,
                "prompt": turn["prompt"],
                "mode": turn["mode"],
                "subjects": len(layout.subject_entries()),
                "entries": len(layout.entries),
                "guidance": diag.get("guidance", ""),
                "injected_steps": len(diag.get("injected_steps", [])),
                "override": turn.get("override", False),
                "revisions": turn.get("revisions", 0),
                "image": turn["image"],
                "figure": fig_path.name,
            }
        )

    csv_path = out / "summary.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=[
                "turn", "prompt", "mode", "subjects", "entries", "guidance",
                "injected_steps", "override", "revisions", "image", "figure",
            ],
        )
        writer.writeheader()
        writer.writerows(rows)
    written.append(csv_path)
    return written
