"""Report figures rendered next to the delimited outputs.

Match figure: database places in blue, query positions in green, a red
segment from each query to its matched place (short segments mean good
matches; long ones are usually floor mismatches). Surface figure: the tuning
score as a heatmap over the two detector parameters on log axes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import LineCollection


def save_match_figure(path, db_lon, db_lat, q_lon, q_lat, m_lon, m_lat, dpi=150):
    fig, ax = plt.subplots(figsize=(9, 7))
    ax.scatter(db_lon, db_lat, s=6, c="tab:blue", alpha=0.5, label="database places")
    ax.scatter(q_lon, q_lat, s=6, c="tab:green", alpha=0.7, label="queries")
    segments = np.stack(
        [np.column_stack([q_lon, q_lat]), np.column_stack([m_lon, m_lat])], axis=1
    )
    ax.add_collection(LineCollection(segments, colors="red", linewidths=0.5, alpha=0.6))
    ax.set_xlabel("longitude [m]")
    ax.set_ylabel("latitude [m]")
    ax.set_title("query-to-place match assignments")
    ax.legend(loc="best")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def save_surface_figure(path, pzge_values, pzgne_values, surface, best=None, dpi=150):
    fig, ax = plt.subplots(figsize=(8, 6))
    # pcolormesh wants ascending axes; the sweeps descend
    order_g = np.argsort(pzge_values)
    order_n = np.argsort(pzgne_values)
    mesh = ax.pcolormesh(
        np.asarray(pzgne_values)[order_n],
        np.asarray(pzge_values)[order_g],
        np.asarray(surface)[np.ix_(order_g, order_n)],
        shading="nearest",
        cmap="viridis",
    )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("PzGne")
    ax.set_ylabel("PzGe")
    ax.set_title("validation score over detector parameters")
    if best is not None:
        ax.plot([best[1]], [best[0]], marker="*", color="red", markersize=12)
    fig.colorbar(mesh, ax=ax, label="building+floor accuracy")
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
