"""Matplotlib figures rendered next to the delimited report files.

Every CLI report command saves a PNG alongside its CSV/PGM/text outputs.
Rendering is deterministic: the Agg backend, a fixed dpi, and no embedded
metadata, so reruns produce byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_DPI = 120


def save_figure(fig, path) -> None:
    fig.savefig(path, format="png", dpi=_DPI, metadata={"Software": None})
    plt.close(fig)


def training_curves(log_rows, columns, path) -> None:
    """Loss components and validation accuracy over epochs."""
    epochs = [r["epoch"] for r in log_rows]
    fig, (ax_loss, ax_acc) = plt.subplots(1, 2, figsize=(9, 3.5))
    for col in columns:
        if col in ("epoch", "val_accuracy"):
            continue
        ax_loss.plot(epochs, [r[col] for r in log_rows], label=col)
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    ax_loss.set_yscale("log")
    ax_loss.legend(fontsize=7)
    ax_acc.plot(epochs, [r["val_accuracy"] for r in log_rows], color="tab:green")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("validation accuracy")
    ax_acc.set_ylim(0.0, 1.05)
    fig.tight_layout()
    save_figure(fig, path)


def metric_bars(report, path) -> None:
    """One bar group per metric, one bar per attribute."""
    metrics = ["interpretability", "modularity", "mig", "sap", "scc"]
    per_attr = {
        "interpretability": report.interpretability,
        "modularity": report.modularity_per_attribute,
        "mig": report.mig,
        "sap": report.sap,
        "scc": report.scc,
    }
    names = report.attribute_names
    width = 0.8 / max(len(names), 1)
    fig, ax = plt.subplots(figsize=(1.8 * len(metrics) + 1, 3.5))
    base = np.arange(len(metrics))
    for j, name in enumerate(names):
        vals = [float(per_attr[m][j]) for m in metrics]
        ax.bar(base + j * width, vals, width=width, label=name)
    ax.set_xticks(base + 0.4 - width / 2)
    ax.set_xticklabels(metrics, fontsize=8)
    ax.set_ylim(-1.05, 1.05)
    ax.axhline(0.0, color="black", linewidth=0.5)
    ax.legend(fontsize=7)
    ax.set_ylabel("score")
    fig.tight_layout()
    save_figure(fig, path)


def image_grid(grid: np.ndarray, path, row_labels=(), title: str = "") -> None:
    """Grayscale tiled image grid (as written to PGM) with optional row labels."""
    h = max(2.0, 0.35 * len(row_labels) + 1.0) if row_labels else 3.0
    fig, ax = plt.subplots(figsize=(7, h))
    ax.imshow(grid, cmap="gray", vmin=0.0, vmax=1.0, interpolation="nearest")
    ax.set_xticks([])
    ax.set_yticks([])
    if row_labels:
        step = grid.shape[0] / len(row_labels)
        ax.set_yticks([step * (i + 0.5) for i in range(len(row_labels))])
        ax.set_yticklabels(row_labels, fontsize=7)
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    save_figure(fig, path)


def attribute_sweep(sweep_values, series: dict, path, title: str = "") -> None:
    """Recomputed attribute values against the swept latent value."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for name, values in series.items():
        ax.plot(sweep_values, values, marker="o", markersize=3, label=name)
    ax.set_xlabel("latent value")
    ax.set_ylabel("attribute of decoded output")
    if title:
        ax.set_title(title, fontsize=9)
    ax.legend(fontsize=7)
    fig.tight_layout()
    save_figure(fig, path)


def surface_heatmap(x_values, y_values, grid: np.ndarray, path,
                    x_label: str, y_label: str, title: str = "") -> None:
    """Attribute value over a 2-d latent grid."""
    fig, ax = plt.subplots(figsize=(5, 4))
    mesh = ax.pcolormesh(x_values, y_values, grid, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax)
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    save_figure(fig, path)


def sweep_tradeoff(rows, path) -> None:
    """Reconstruction accuracy vs interpretability across the swept settings."""
    fig, ax = plt.subplots(figsize=(5, 4))
    gammas = sorted({r["gamma"] for r in rows})
    cmap = plt.get_cmap("viridis")
    for i, gamma in enumerate(gammas):
        sub = [r for r in rows if r["gamma"] == gamma]
        ax.scatter([r["interpretability"] for r in sub],
                   [r["recon_accuracy"] for r in sub],
                   s=[20 + 15 * j for j in range(len(sub))],
                   color=cmap(i / max(len(gammas) - 1, 1)),
                   label=f"gamma={gamma:g}")
    ax.set_xlabel("mean interpretability")
    ax.set_ylabel("reconstruction accuracy")
    ax.legend(fontsize=7)
    fig.tight_layout()
    save_figure(fig, path)


def piano_roll_panel(rolls, labels, path, title: str = "") -> None:
    """A row of binary piano rolls (pitch x time), one per sweep step."""
    n = len(rolls)
    fig, axes = plt.subplots(1, n, figsize=(1.1 * n + 1, 2.8), squeeze=False)
    for ax, roll, label in zip(axes[0], rolls, labels):
        ax.imshow(roll, cmap="gray_r", aspect="auto", origin="lower",
                  interpolation="nearest")
        ax.set_xticks([])
        ax.set_yticks([])
        ax.set_title(str(label), fontsize=6)
    if title:
        fig.suptitle(title, fontsize=9)
    fig.tight_layout()
    save_figure(fig, path)
