#!/usr/bin/env python3
"""
Tests for the space-time entropy dissipation residual
"""

import numpy as np
import pytest

from src.diagnostics.estimates import Window
from src.entropy.dissipation import dissipation_residual
from src.entropy.pairs import mechanical_pair, special_pair_hash
from src.errors import StructuralError
from src.forces.nonlocal_terms import NonlocalConfig
from src.initial.construction import build_initial_data
from src.initial.profiles import make_preset
from src.solver.lagrangian import SolverConfig, run
from src.solver.trajectory import Accumulators, Trajectory
from tests.conftest import plateau, static_trajectory


@pytest.mark.parametrize("make_pair", [mechanical_pair, special_pair_hash])
def test_resting_state_has_no_dissipation(law, make_pair):
    result = dissipation_residual(
        static_trajectory((0.0, 0.5, 1.0)), make_pair(law), NonlocalConfig()
    )
    assert result.field.shape == (2, 65)
    np.testing.assert_allclose(result.field, 0.0, atol=1e-10)
    assert result.l1 <= 1e-10
    np.testing.assert_allclose(result.times, [0.25, 0.75])


def test_summary_carries_budgets(law):
    result = dissipation_residual(
        static_trajectory(), mechanical_pair(law), NonlocalConfig(), Window(-0.5, 0.5)
    )
    summary = result.summary()
    assert summary["l1"] == 0.0
    assert any(key.startswith("budget_") for key in summary)


def test_needs_two_snapshots(law):
    with pytest.raises(StructuralError):
        dissipation_residual(static_trajectory((0.0,)), mechanical_pair(law), NonlocalConfig())


def test_snapshots_must_share_grid(law):
    states = [plateau(0.0, 32), plateau(1.0, 64)]
    trajectory = Trajectory(states, [Accumulators(), Accumulators()], halfwidth=1.0)
    with pytest.raises(StructuralError):
        dissipation_residual(trajectory, mechanical_pair(law), NonlocalConfig())


def test_times_must_increase(law):
    with pytest.raises(StructuralError):
        dissipation_residual(
            static_trajectory((0.0, 1.0, 1.0)), mechanical_pair(law), NonlocalConfig()
        )


def test_positive_part_shrinks_under_refinement(law):
    raw = make_preset("gaussian_bump", width=0.5)
    positives = []
    for epsilon, n_cells, n_outputs in ((0.1, 64, 20), (0.05, 256, 80)):
        data = build_initial_data(
            raw, law, epsilon, 1.0, 2.5, halfwidth=3.0, resolution=32, edge_density=5e-2
        )
        trajectory = run(
            data, law, NonlocalConfig(), SolverConfig(t_end=0.2, n_outputs=n_outputs), n_cells
        )
        result = dissipation_residual(trajectory, mechanical_pair(law), NonlocalConfig())
        assert result.negative > 0.0
        positives.append(result.positive)
    assert positives[1] <= positives[0]
