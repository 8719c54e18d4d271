"""Campaign figures rendered to files next to the metrics table."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .features import FeatureState, StatsStore

_STATE_ORDER = (FeatureState.SUPPORTED, FeatureState.UNKNOWN, FeatureState.UNSUPPORTED)
_STATE_COLORS = {"Supported": "#2a9d8f", "Unknown": "#e9c46a", "Unsupported": "#e76f51"}


def render_validity(windows, path) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    xs = [w.window for w in windows]
    ys = [w.validity for w in windows]
    ax.plot(xs, ys, marker="o", color="#264653")
    ax.set_xlabel("update window")
    ax.set_ylabel("validity rate")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_feature_states(store: StatsStore, path) -> None:
    counts = {s: 0 for s in _STATE_ORDER}
    for stats in store.all_stats():
        counts[stats.state] = counts.get(stats.state, 0) + 1
    fig, ax = plt.subplots(figsize=(6, 3.5))
    labels = [s.value for s in _STATE_ORDER]
    values = [counts[s] for s in _STATE_ORDER]
    ax.bar(labels, values, color=[_STATE_COLORS[l] for l in labels])
    ax.set_ylabel("features")
    for i, v in enumerate(values):
        ax.text(i, v, str(v), ha="center", va="bottom")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_campaign_figures(windows, store: StatsStore, figures_dir) -> None:
    figures_dir = Path(figures_dir)
    figures_dir.mkdir(parents=True, exist_ok=True)
    render_validity(windows, figures_dir / "validity.png")
    render_feature_states(store, figures_dir / "feature_states.png")
