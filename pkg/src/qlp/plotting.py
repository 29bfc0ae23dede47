"""Figure rendering for CLI reports.

Figures are written next to the JSON output; they never feed back into it.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
    "savefig.dpi": 120,
    "savefig.bbox": "tight",
}


def _save(fig, path) -> str:
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def kernel_heatmap(entries, path, title="Quantum kernel"):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        im = ax.imshow(np.asarray(entries), vmin=0.0, vmax=1.0, cmap="viridis")
        ax.grid(False)
        ax.set_xlabel("sample j")
        ax.set_ylabel("sample i")
        ax.set_title(title)
        fig.colorbar(im, ax=ax, label="K(x_i, x_j)")
        return _save(fig, path)


def grover_curve(ks, simulated, theta, path, chosen_k=None):
    """Simulated success per k over the continuous curve sin^2((2k+1) theta)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        grid = np.linspace(min(ks), max(ks), 400)
        ax.plot(grid, np.sin((2 * grid + 1) * theta) ** 2, "-", lw=1.5, label="sin^2((2k+1) theta)")
        ax.plot(ks, simulated, "o", ms=4, label="state-vector simulation")
        if chosen_k is not None:
            ax.axvline(chosen_k, color="grey", ls="--", lw=1, label=f"k = {chosen_k}")
        ax.set_xlabel("Grover iterations k")
        ax.set_ylabel("success probability")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(loc="best")
        return _save(fig, path)


def anneal_report(probabilities, ground_mask, path, gap_trace=None, labels=None):
    """Final-state distribution, with the gap trace in a second panel if given."""
    probs = np.asarray(probabilities)
    panels = 2 if gap_trace else 1
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, panels, figsize=(6.4 * panels, 4.0), squeeze=False)
        ax = axes[0, 0]
        colors = np.where(np.asarray(ground_mask), "tab:green", "tab:blue")
        ax.bar(np.arange(probs.size), probs, color=colors, width=0.9)
        ax.set_xlabel("basis state")
        ax.set_ylabel("probability")
        ax.set_title("final state (green: ground configurations)")
        if labels is not None and probs.size <= 16:
            ax.set_xticks(np.arange(probs.size), labels, rotation=90)
        if gap_trace:
            t, gap = zip(*gap_trace)
            ax2 = axes[0, 1]
            ax2.plot(t, gap, "-o", ms=3)
            ax2.set_xlabel("t")
            ax2.set_ylabel("spectral gap")
            ax2.set_title(f"minimum gap {min(gap):.4g}")
        return _save(fig, path)


def decision_bars(ids, decision, labels, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        colors = np.where(np.asarray(labels) > 0, "tab:orange", "tab:blue")
        ax.bar(np.arange(len(decision)), decision, color=colors)
        ax.axhline(0.0, color="black", lw=0.8)
        if len(ids) <= 40:
            ax.set_xticks(np.arange(len(ids)), ids, rotation=90)
        ax.set_ylabel("decision value f(x)")
        ax.set_title("study-method classifier")
        return _save(fig, path)
