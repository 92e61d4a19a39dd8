"""Sensitivity heatmaps and recommendation-timing histogram."""
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Sequence

import matplotlib as mpl
mpl.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

HEATMAP_METRICS = ("n_recs", "acceptable_rate", "total_savings", "relative_savings")


def _grid(table: Sequence[Mapping[str, object]], metric: str):
    availability = sorted({row["availability_th"] for row in table})
    usage = sorted({row["usage_th"] for row in table})
    values = np.full((len(availability), len(usage)), np.nan)
    for row in table:
        value = row[metric]
        if value is not None:
            values[availability.index(row["availability_th"]), usage.index(row["usage_th"])] = value
    return availability, usage, values


def sensitivity_heatmaps(table: Sequence[Mapping[str, object]], directory, household: str) -> List[Path]:
    """One PNG per metric, availability threshold on the y axis, usage threshold on the x axis."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for metric in HEATMAP_METRICS:
        availability, usage, values = _grid(table, metric)
        fig, ax = plt.subplots(figsize=(6, 5))
        image = ax.imshow(values, origin="lower", aspect="auto", cmap="viridis")
        ax.set_xticks(range(len(usage)))
        ax.set_xticklabels([f"{u:g}" for u in usage])
        ax.set_yticks(range(len(availability)))
        ax.set_yticklabels([f"{a:g}" for a in availability])
        ax.set_xlabel("usage threshold")
        ax.set_ylabel("availability threshold")
        ax.set_title(f"{household}: {metric.replace('_', ' ')}")
        fig.colorbar(image, ax=ax)
        fig.tight_layout()
        path = directory / f"sensitivity_{metric}.png"
        fig.savefig(path, dpi=120, metadata={"Software": None})
        plt.close(fig)
        paths.append(path)
    return paths


def timing_histogram(timing: Sequence[Mapping[str, object]], path, household: str) -> Path:
    """Recommended start hours, one line per availability threshold."""
    counts: Dict[float, np.ndarray] = {}
    for row in timing:
        counts.setdefault(row["availability_th"], np.zeros(24))[row["hour"]] = row["n_recs"]
    fig, ax = plt.subplots(figsize=(8, 4))
    for threshold in sorted(counts):
        ax.plot(range(24), counts[threshold], marker="o", markersize=3, label=f"{threshold:g}")
    ax.set_xlabel("recommended start hour")
    ax.set_ylabel("recommendations")
    ax.set_xticks(range(0, 24, 2))
    ax.set_title(f"{household}: recommendation timing")
    ax.legend(title="availability threshold", fontsize=7)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def hourly_context_plot(timing: Sequence[Mapping[str, object]], path, household: str) -> Path:
    """Mean day-ahead price and mean availability per hour, the backdrop of the timing histogram."""
    prices, presence = np.full(24, np.nan), np.full(24, np.nan)
    for row in timing:
        hour = row["hour"]
        if row.get("mean_price") is not None:
            prices[hour] = row["mean_price"]
        if row.get("mean_availability") is not None:
            presence[hour] = row["mean_availability"]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    top.bar(range(24), prices, color="tab:orange")
    top.set_ylabel("mean price")
    top.set_title(f"{household}: prices and availability by hour")
    bottom.bar(range(24), presence, color="tab:blue")
    bottom.set_ylim(0, 1)
    bottom.set_ylabel("mean availability")
    bottom.set_xlabel("hour of day")
    bottom.set_xticks(range(0, 24, 2))
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
