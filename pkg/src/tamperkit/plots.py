"""Report figures rendered next to the CSV output (Agg backend, PNG files)."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

# fixed metadata so repeated runs produce byte-identical PNGs
_METADATA = {"Software": "tamperkit"}
_DPI = 100


def _save(fig, path: str | Path) -> None:
    fig.savefig(path, dpi=_DPI, metadata=_METADATA)
    plt.close(fig)


def save_method_summary(path: str | Path, rows: Sequence[Mapping]) -> None:
    """Grouped bars of accuracy and ROC-AUC, one group per method row."""
    methods = [r["method"] for r in rows]
    xs = range(len(methods))
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar([x - 0.2 for x in xs], [r["accuracy"] for r in rows], 0.4,
           label="accuracy", color="#3465a4")
    ax.bar([x + 0.2 for x in xs], [r["roc_auc"] for r in rows], 0.4,
           label="ROC-AUC", color="#f57900")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(methods, rotation=20)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score")
    ax.set_title("Pair verdicts per homogenization method")
    ax.legend(loc="lower right")
    fig.tight_layout()
    _save(fig, path)


def save_recall_by_type(path: str | Path, rows: Sequence[Mapping]) -> None:
    """Bars of recall per (type, difficulty), grouped by method."""
    methods = sorted({r["method"] for r in rows})
    cats = sorted({(r["type"], r["difficulty"]) for r in rows})
    width = 0.8 / max(len(methods), 1)
    fig, ax = plt.subplots(figsize=(8, 4))
    for i, method in enumerate(methods):
        by_cat = {(r["type"], r["difficulty"]): r["recall"]
                  for r in rows if r["method"] == method}
        xs = [j + (i - (len(methods) - 1) / 2.0) * width for j in range(len(cats))]
        ax.bar(xs, [by_cat.get(c, 0.0) for c in cats], width, label=method)
    ax.set_xticks(list(range(len(cats))))
    ax.set_xticklabels([f"{t}\n{d}" for t, d in cats])
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("recall")
    ax.set_title("Tampering recall per type and difficulty")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def save_angle_scatter(path: str | Path, rows: Sequence[Mapping]) -> None:
    """Viewing angle vs dissimilarity, split by verdict correctness."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for correct, marker, color in ((True, "o", "#4e9a06"), (False, "x", "#cc0000")):
        pts = [(r["angle_deg"], r["dissimilarity"]) for r in rows
               if r["correct"] is correct]
        if pts:
            ax.scatter([p[0] for p in pts], [p[1] for p in pts], marker=marker,
                       color=color, s=24,
                       label="correct" if correct else "incorrect")
    ax.set_xlim(0.0, 90.0)
    ax.set_xlabel("viewing angle (deg)")
    ax.set_ylabel("dissimilarity")
    ax.set_title("Verdicts against face viewing angle")
    if rows:
        ax.legend(loc="upper left")
    fig.tight_layout()
    _save(fig, path)
