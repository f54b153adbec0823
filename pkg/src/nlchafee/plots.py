"""Figure rendering for the report paths; every function writes a PNG file.

Uses Figure/Agg directly so no global pyplot state is touched.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

__all__ = ["save_equilibria_png", "save_bifurcation_png",
           "save_trajectory_png", "save_graph_png"]


def _new_fig(width=6.4, height=4.2):
    fig = Figure(figsize=(width, height), dpi=130)
    FigureCanvasAgg(fig)
    return fig


def save_equilibria_png(eqset, ids, path: Path) -> None:
    fig = _new_fig()
    ax = fig.add_subplot(1, 1, 1)
    ax.axhline(0.0, color="0.6", lw=0.8)
    for ident, entry in zip(ids, eqset.entries):
        ax.plot(entry.samples[:, 0], entry.samples[:, 1], lw=1.4, label=ident)
    ax.set_xlabel("x")
    ax.set_ylabel("u(x)")
    ax.set_title(f"stationary profiles, lambda = {eqset.lam:g}")
    if eqset.entries:
        ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path)


def save_bifurcation_png(diagram, path: Path) -> None:
    fig = _new_fig()
    ax = fig.add_subplot(1, 1, 1)
    ks = sorted({r.k for r in diagram.rows})
    for k in ks:
        pts = [(r.lam, r.d_star) for r in diagram.rows if r.k == k]
        if pts:
            arr = np.array(pts)
            ax.plot(arr[:, 0], arr[:, 1], ".", ms=3, label=f"k={k}")
    ax.set_xlabel("lambda")
    ax.set_ylabel("d* = ||u||^2_H1")
    ax.set_title("nonlocal equilibrium branches")
    if ks:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)


def save_trajectory_png(times, energies, laps, l2, h1, path: Path) -> None:
    fig = _new_fig(6.4, 6.0)
    ax1 = fig.add_subplot(3, 1, 1)
    ax1.plot(times, energies, lw=1.2)
    ax1.set_ylabel("energy")
    ax2 = fig.add_subplot(3, 1, 2, sharex=ax1)
    ax2.step(times, laps, where="post", lw=1.2)
    ax2.set_ylabel("lap")
    ax3 = fig.add_subplot(3, 1, 3, sharex=ax1)
    ax3.plot(times, l2, lw=1.2, label="L2")
    ax3.plot(times, h1, lw=1.2, label="H1")
    ax3.set_xlabel("t")
    ax3.set_ylabel("norm")
    ax3.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)


def save_graph_png(graph, path: Path) -> None:
    """Nodes laid out by (zero count, Lyapunov energy); arrows per edge."""
    fig = _new_fig(6.4, 4.8)
    ax = fig.add_subplot(1, 1, 1)
    pos = {}
    for n in graph.nodes:
        x = n.k + (0.18 * n.sign if n.k else 0.0)
        pos[n.ident] = (x, n.energy)
        ax.plot([x], [n.energy], "o", ms=7,
                color="tab:red" if n.classification == "unstable" else "tab:blue")
        ax.annotate(n.ident, (x, n.energy), textcoords="offset points",
                    xytext=(6, 5), fontsize=8)
    for e in graph.edges:
        if e.src in pos and e.dst in pos:
            (x0, y0), (x1, y1) = pos[e.src], pos[e.dst]
            ax.annotate("", xy=(x1, y1), xytext=(x0, y0),
                        arrowprops=dict(arrowstyle="-|>", lw=1.0,
                                        linestyle="-" if e.provenance == "required" else "--",
                                        color="0.3"))
    ax.set_xlabel("sign components k (0 = zero equilibrium)")
    ax.set_ylabel("Lyapunov energy")
    ax.set_title("connection graph")
    fig.tight_layout()
    fig.savefig(path)
