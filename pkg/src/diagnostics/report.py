#!/usr/bin/env python3
"""
Diagnostics Report
Collects the estimate series of one trajectory into a machine-readable report
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from loguru import logger

from src.diagnostics.checks import CheckResult, at_least, at_most, failed
from src.diagnostics.estimates import (
    Series,
    Window,
    alignment_identity_check,
    bd_checks,
    bd_series,
    boundary_density_check,
    budget_integrals,
    default_window,
    energy_budget,
    energy_checks,
    moment_series,
    second_moment_check,
    window_integrability,
)
from src.forces.nonlocal_terms import NonlocalConfig
from src.pressure.laws import PressureLaw
from src.solver.lagrangian import free_boundary_margin
from src.solver.trajectory import Trajectory


@dataclass
class Tolerances:
    """Thresholds of the report flags"""
    energy: float = 0.01
    boundary_density: float = 0.02
    mass: float = 1e-12
    alignment: float = 1e-10
    second_moment_slack: float = 1e-3
    margin: float = 0.5
    enforce_margin: bool = True
    bracket_slack: float = 1e-6


@dataclass
class DiagnosticsReport:
    """
    Estimate series and flags of one run.

    Every series group shares the output-time column `time`; residuals are signed.
    """
    label: str
    series: Dict[str, Series] = field(default_factory=dict)
    integrability: Dict[str, float] = field(default_factory=dict)
    budgets: Dict[str, float] = field(default_factory=dict)
    flags: Dict[str, CheckResult] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def add(self, check: CheckResult) -> None:
        self.flags[check.name] = check

    @property
    def passed(self) -> bool:
        return not self.failed_checks

    @property
    def failed_checks(self) -> List[CheckResult]:
        return failed(self.flags.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "passed": self.passed,
            "metadata": self.metadata,
            "integrability": self.integrability,
            "budgets": self.budgets,
            "flags": {name: check.to_dict() for name, check in self.flags.items()},
            "final": {
                group: {name: float(values[-1]) for name, values in columns.items()}
                for group, columns in self.series.items()
                if columns and len(columns["time"])
            },
        }

    def to_json(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
        logger.info(f"💾 Report written to {path}")
        return path

    def write_series(self, directory: Path) -> List[Path]:
        """One CSV per series group, time in the first column"""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for group, columns in self.series.items():
            names = ["time"] + [name for name in columns if name != "time"]
            table = np.column_stack([np.asarray(columns[name], dtype=float) for name in names])
            path = directory / f"{group}.csv"
            np.savetxt(path, table, delimiter=",", header=",".join(names), comments="", fmt="%.17g")
            written.append(path)
        logger.debug(f"💾 {len(written)} series written to {directory}")
        return written

    def log_summary(self) -> None:
        for check in self.flags.values():
            status = "✅" if check.passed else "❌"
            logger.info(
                f"  {status} {check.name}: {check.value:.4g} (threshold {check.threshold:g})"
            )


def analyze(
    trajectory: Trajectory,
    law: PressureLaw,
    cfg: NonlocalConfig,
    tolerances: Optional[Tolerances] = None,
    window: Optional[Window] = None,
    initial_energy: Optional[float] = None,
) -> DiagnosticsReport:
    """
    Evaluate every estimate on a trajectory

    Args:
        trajectory: Solver output
        law: Pressure law of the run
        cfg: Nonlocal forces of the run
        tolerances: Flag thresholds (defaults when omitted)
        window: Window K (central half of the initial support when omitted)
        initial_energy: Constructed E0, the scale of the energy flags (discrete E(0) when omitted)

    Returns:
        DiagnosticsReport with series, window integrals, budgets and flags
    """
    tolerances = tolerances or Tolerances()
    initial = trajectory.initial
    window = window or default_window((initial.left_boundary, initial.right_boundary))
    report = DiagnosticsReport(
        label=trajectory.label,
        metadata={
            "epsilon": initial.epsilon,
            "alpha": initial.alpha,
            "n_cells": initial.n_cells,
            "halfwidth": trajectory.halfwidth,
            "window": [window.left, window.right],
            "law": law.to_dict(),
            "steps": trajectory.accumulators[-1].steps,
            "rejections": trajectory.accumulators[-1].rejections,
        },
    )

    energy = energy_budget(trajectory, law, cfg)
    report.series["energy"] = energy
    for check in energy_checks(energy, tolerances.energy, cfg.forces_off, initial_energy):
        report.add(check)

    moments = moment_series(trajectory)
    report.series["moments"] = moments
    report.add(second_moment_check(moments, tolerances.second_moment_slack))
    mass_defect = max(a.max_mass_defect for a in trajectory.accumulators)
    mass_drift = float(np.max(np.abs(moments["mass"] - initial.total_mass))) / initial.total_mass
    report.add(at_most("mass_conservation", max(mass_defect, mass_drift), tolerances.mass))

    boundary, checks = boundary_density_check(
        trajectory,
        law,
        initial.alpha,
        initial.epsilon,
        tolerance=tolerances.boundary_density,
        bracket_slack=tolerances.bracket_slack,
    )
    report.series["boundary"] = boundary
    for check in checks:
        report.add(check)

    bd = bd_series(trajectory, law)
    report.series["bd_entropy"] = bd
    for check in bd_checks(bd):
        report.add(check)

    for check in alignment_identity_check(trajectory, cfg, tolerances.alignment):
        report.add(check)

    density, velocity = window_integrability(trajectory, law, window)
    report.integrability = {"density": density, "velocity": velocity}
    report.budgets = budget_integrals(trajectory, law, window)

    if trajectory.halfwidth > 0.0:
        margin = free_boundary_margin(trajectory)
        detail = None if tolerances.enforce_margin else "informational"
        check = at_least("free_boundary_margin", margin, tolerances.margin, detail)
        if not tolerances.enforce_margin:
            check.passed = True
        report.add(check)

    status = "✅" if report.passed else "❌"
    logger.info(f"{status} Diagnostics for '{trajectory.label}': {len(report.flags)} checks")
    return report
