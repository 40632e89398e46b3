#!/usr/bin/env python3
"""
Trajectory
Snapshots at the output times plus the per-step accumulators streamed by the solver
"""

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
from loguru import logger

from src.errors import StructuralError
from src.solver.state import MassGridState


@dataclass
class Accumulators:
    """
    Time integrals accumulated step by step.

    Dissipation terms are stored with the sign they enter the energy balance
    E(t) + viscous + alignment + damping = E(0).
    """
    viscous: float = 0.0
    alignment: float = 0.0
    damping: float = 0.0
    momentum_weight: float = 0.0
    bd_interior: float = 0.0
    bd_boundary: float = 0.0
    steps: int = 0
    rejections: int = 0
    max_alignment_momentum: float = 0.0
    max_mass_defect: float = 0.0

    @property
    def dissipation(self) -> float:
        return self.viscous + self.alignment + self.damping

    def snapshot(self) -> "Accumulators":
        return replace(self)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class Trajectory:
    """States at the output times, each paired with the accumulators reached there"""
    states: List[MassGridState] = field(default_factory=list)
    accumulators: List[Accumulators] = field(default_factory=list)
    halfwidth: float = 0.0
    label: str = "run"

    def record(self, state: MassGridState, totals: Accumulators) -> None:
        self.states.append(state.copy())
        self.accumulators.append(totals.snapshot())

    @property
    def times(self) -> np.ndarray:
        return np.array([state.time for state in self.states])

    @property
    def initial(self) -> MassGridState:
        if not self.states:
            raise StructuralError("trajectory is empty")
        return self.states[0]

    @property
    def final(self) -> MassGridState:
        if not self.states:
            raise StructuralError("trajectory is empty")
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.states)

    def write(self, directory: Path) -> Path:
        """
        Write one CSV per snapshot and a JSON manifest

        Args:
            directory: Run directory; snapshots go to `snapshots/`

        Returns:
            Path of the manifest
        """
        directory = Path(directory)
        snapshot_dir = directory / "snapshots"
        snapshot_dir.mkdir(parents=True, exist_ok=True)
        files = []
        for index, state in enumerate(self.states):
            path = snapshot_dir / f"snapshot_{index:04d}.csv"
            rho = state.cell_rho
            node_rho = np.concatenate(([rho[0]], 0.5 * (rho[1:] + rho[:-1]), [rho[-1]]))
            table = np.column_stack([state.node_xi, state.node_x, node_rho, state.node_u])
            np.savetxt(path, table, delimiter=",", header="xi,x,rho,u", comments="", fmt="%.17g")
            files.append(path.name)

        manifest = {
            "label": self.label,
            "halfwidth": self.halfwidth,
            "n_cells": self.initial.n_cells if self.states else 0,
            "cell_mass_min": float(np.min(self.initial.dxi)) if self.states else 0.0,
            "cell_mass_max": float(np.max(self.initial.dxi)) if self.states else 0.0,
            "epsilon": self.initial.epsilon if self.states else None,
            "alpha": self.initial.alpha if self.states else None,
            "times": [float(t) for t in self.times],
            "snapshots": files,
            "accumulators": [totals.to_dict() for totals in self.accumulators],
        }
        manifest_path = directory / "trajectory.json"
        with open(manifest_path, "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
        logger.info(f"💾 {len(files)} snapshots written to {snapshot_dir}")
        return manifest_path
