"""Figure rendering for the command-line report paths.

Every command that writes delimited output also drops a PNG next to it.
Figures are best-effort diagnostics; the CSV/JSON files stay authoritative.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def save_loss_curve(path, losses, branch_curves=None, boundaries=None,
                    title="training loss") -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    losses = np.asarray(losses, dtype=float)
    ax.plot(losses, lw=0.6, alpha=0.4, color="tab:blue", label="loss")
    if len(losses) >= 20:
        w = max(len(losses) // 100, 5)
        smooth = np.convolve(losses, np.ones(w) / w, mode="valid")
        ax.plot(np.arange(len(smooth)) + w - 1, smooth, lw=1.5, color="tab:blue")
    if branch_curves:
        arr = np.asarray(branch_curves, dtype=float)
        if arr.ndim == 2 and arr.shape[1] > 1:
            for k in range(arr.shape[1]):
                ax.plot(arr[:, k], lw=0.8, alpha=0.6, label=f"branch {k}")
    if boundaries:
        for b in boundaries[:-1]:
            ax.axvline(b, color="gray", ls="--", lw=0.8)
    ax.set_xlabel("update")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_scatter(path, points, title="samples", centers=None, reference=None) -> None:
    points = np.asarray(points)
    if points.ndim != 2 or points.shape[1] != 2:
        return  # scatter figures only make sense for 2-D data
    fig, ax = plt.subplots(figsize=(5, 5))
    if reference is not None:
        ref = np.asarray(reference)
        ax.scatter(ref[:, 0], ref[:, 1], s=4, alpha=0.25, color="gray", label="reference")
    ax.scatter(points[:, 0], points[:, 1], s=4, alpha=0.5, color="tab:blue", label="samples")
    if centers is not None:
        centers = np.asarray(centers)
        ax.scatter(centers[:, 0], centers[:, 1], marker="x", s=60, color="tab:red",
                   label="modes")
    ax.set_title(title)
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_search_plot(path, trials, title="branch-weight search") -> None:
    a = np.array([t.a for t in trials])
    b = np.array([t.b for t in trials])
    score = np.array([t.score for t in trials])
    finite = np.isfinite(score)
    fig, ax = plt.subplots(figsize=(6, 5))
    sc = ax.scatter(a[finite], b[finite], c=score[finite], cmap="viridis_r", s=45)
    if (~finite).any():
        ax.scatter(a[~finite], b[~finite], marker="x", color="red", s=45, label="diverged")
        ax.legend(loc="upper right", fontsize=8)
    fig.colorbar(sc, ax=ax, label="score (lower is better)")
    ax.set_xlabel("a (log-space slope)")
    ax.set_ylabel("b (log-space intercept)")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_metric_bars(path, rows, title="metrics") -> None:
    """Bar chart of one metrics-CSV append batch: (metric, value) pairs."""
    if not rows:
        return
    labels = [f"{m}" for m, _ in rows]
    values = [v for _, v in rows]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(range(len(values)), values, color="tab:blue")
    ax.set_xticks(range(len(values)), labels, rotation=20, ha="right")
    ax.set_ylabel("value")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
