#!/usr/bin/env python3
"""
Plots
Batch SVG figures: energy budget, boundary density trace and the convergence ladder
"""

from pathlib import Path
from typing import Sequence

import numpy as np
from loguru import logger

from src.diagnostics.report import DiagnosticsReport


def _pyplot():
    import matplotlib

    matplotlib.use("agg")
    import matplotlib.pyplot as plt

    return plt


def plot_energy_budget(report: DiagnosticsReport, path: Path) -> Path:
    """Energy components, cumulative dissipation and the balance residual"""
    plt = _pyplot()
    energy = report.series["energy"]
    t = energy["time"]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for name in ("kinetic", "internal", "interaction", "total"):
        top.plot(t, energy[name], label=name)
    dissipation = energy["viscous"] + energy["alignment"] + energy["damping"]
    top.plot(t, energy["total"] + dissipation, "k--", label="E + dissipation")
    top.set_ylabel("energy")
    top.legend(fontsize="small")
    bottom.plot(t, energy["residual"], color="tab:red")
    bottom.set_xlabel("t")
    bottom.set_ylabel("balance residual")
    fig.suptitle(report.label)
    return _save(fig, plt, path)


def plot_boundary_trace(report: DiagnosticsReport, path: Path) -> Path:
    """Boundary-cell densities against their reference decay, and b+(t), b-(t)"""
    plt = _pyplot()
    boundary = report.series["boundary"]
    t = boundary["time"]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    top.plot(t, boundary["rho_minus"], "o", ms=3, label="rho(b-)")
    top.plot(t, boundary["rho_plus"], "s", ms=3, label="rho(b+)")
    top.plot(t, boundary["reference_minus"], "k-", label="reference")
    top.set_yscale("log")
    top.set_ylabel("boundary density")
    top.legend(fontsize="small")
    bottom.plot(t, boundary["b_minus"], label="b-")
    bottom.plot(t, boundary["b_plus"], label="b+")
    bottom.set_xlabel("t")
    bottom.set_ylabel("free boundary")
    bottom.legend(fontsize="small")
    return _save(fig, plt, path)


def plot_convergence_ladder(
    epsilons: Sequence[float], distances: Sequence[float], path: Path, label: str = "L1(K)"
) -> Path:
    """Distances between consecutive ladder members against the finer epsilon"""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(np.asarray(epsilons, dtype=float), np.asarray(distances, dtype=float), "o-")
    ax.set_xlabel("epsilon")
    ax.set_ylabel(label)
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, plt, path)


def _save(fig, plt, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    logger.debug(f"💾 Plot written to {path}")
    return path
