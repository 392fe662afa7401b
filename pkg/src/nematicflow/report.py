"""Figure rendering for the CLI report paths.

Each renderer takes rows as written next to it in CSV form and saves a
PNG alongside; the CSV stays the interchange surface, figures are a
convenience view of the same numbers.  Matplotlib runs on the Agg
backend so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def render_diagnostics(rows, path) -> Path:
    """Norms/energy traces of a simulation run (rows from diagnostics CSV)."""
    t = [r["t"] for r in rows]
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True)
    panels = [
        (axes[0, 0], [("v_l2", "|v|_2"), ("v_h1", "|grad v|_2")], "velocity"),
        (axes[0, 1], [("d_l2", "|d|_2"), ("d_h1", "||d||_H1")], "orientation"),
        (axes[1, 0], [("energy", "E")], "total energy"),
        (axes[1, 1], [("y", "ln(1 + |d|^{4N+2})")], "log energy"),
    ]
    for ax, series, title in panels:
        for key, label in series:
            ax.plot(t, [r[key] for r in rows], label=label)
        ax.set_title(title)
        ax.legend(fontsize=8)
        ax.grid(alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def render_pullback(rows, path) -> Path:
    """Endpoint distance against start time for each seed."""
    fig, ax = plt.subplots(figsize=(6, 4))
    seeds = sorted({r["seed"] for r in rows})
    for seed in seeds:
        pts = [(abs(r["s"]), r["distance"]) for r in rows
               if r["seed"] == seed and r["status"] == "ok"]
        if pts:
            pts.sort()
            ax.loglog([x for x, _ in pts], [y for _, y in pts],
                      "o-", label=f"seed {seed}")
    ax.set_xlabel("|s| (how far in the past the pair starts)")
    ax.set_ylabel("distance at t*")
    ax.set_title("pullback distances")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def render_absorbing(rows, path) -> Path:
    """g(0) against start time, one line per initial magnitude R."""
    fig, ax = plt.subplots(figsize=(6, 4))
    radii = sorted({r["R"] for r in rows})
    for R in radii:
        pts = [(abs(r["s"]), r["g0"]) for r in rows
               if r["R"] == R and r["status"] == "ok"]
        if pts:
            pts.sort()
            ax.semilogx([x for x, _ in pts], [y for _, y in pts],
                        "o-", label=f"R = {R:g}")
    ax.set_xlabel("|s|")
    ax.set_ylabel("g(0)")
    ax.set_title("absorbing-ball estimate")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def render_spectrum(basis, path) -> Path:
    """Stokes eigenvalues and noise weights of the mode basis."""
    fig, ax = plt.subplots(figsize=(6, 4))
    n = np.arange(1, basis.count + 1)
    ax.semilogy(n, basis.alphas, "o-", label="alpha_n")
    ax.semilogy(n, basis.lambdas, "s-", label=f"lambda_n = (1+alpha_n)^-{basis.q:g}")
    ax.set_xlabel("mode index")
    ax.set_title("noise mode spectrum")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
