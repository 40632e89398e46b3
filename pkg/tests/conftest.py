#!/usr/bin/env python3
"""
Shared Test Fixtures
Pressure laws, small grid states and shrunken run configurations
"""

from pathlib import Path

import numpy as np
import pytest

from src.config.loader import ConfigLoader, RunConfig
from src.pressure.laws import LawKind, PressureLaw
from src.solver.state import MassGridState
from src.solver.trajectory import Accumulators, Trajectory

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"


@pytest.fixture
def law() -> PressureLaw:
    """gamma = 2 with the normalised kappa = 1/8, so k(rho) = sqrt(rho)"""
    return PressureLaw(gamma=2.0)


@pytest.fixture
def blend_law() -> PressureLaw:
    return PressureLaw(
        LawKind.GENERAL_BLEND, gamma=3.0, kappa=0.5, gamma2=1.5, kappa2=0.5
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def plateau(time: float = 0.0, n_cells: int = 64, epsilon: float = 0.1) -> MassGridState:
    """Unit density at rest on [-1, 1]"""
    nodes = np.linspace(-1.0, 1.0, n_cells + 1)
    return MassGridState(time, nodes, np.zeros_like(nodes), 2.0 / n_cells, epsilon, 1.0)


def static_trajectory(times=(0.0, 1.0), n_cells: int = 64) -> Trajectory:
    """The resting plateau recorded at several times"""
    states = [plateau(t, n_cells) for t in times]
    return Trajectory(
        states=states,
        accumulators=[Accumulators() for _ in states],
        halfwidth=1.0,
        label="static",
    )


@pytest.fixture
def plateau_state() -> MassGridState:
    return plateau()


@pytest.fixture
def smoke_config(tmp_path) -> RunConfig:
    """configs/smoke.yml cut down to a few steps, writing under tmp_path"""
    config = ConfigLoader(CONFIGS / "smoke.yml").config
    config.solver.n_cells = 64
    config.solver.t_end = 0.02
    config.solver.n_outputs = 2
    config.diagnostics.plots = False
    config.output.directory = str(tmp_path / "results")
    config.output.workers = 1
    return config
