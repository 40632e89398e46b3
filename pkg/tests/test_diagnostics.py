#!/usr/bin/env python3
"""
Tests for the estimate diagnostics, the report and the plots
"""

import json

import numpy as np
import pytest

from src.diagnostics.estimates import (
    Window,
    alignment_identity_check,
    boundary_reference,
    budget_integrals,
    check_window,
    convergence_metric,
    default_window,
    energy_checks,
    fitted_rate,
    moment_series,
    second_moment_check,
    uniform_growth,
    uniform_spread,
    window_integrability,
    worst_ratio,
)
from src.diagnostics.plots import plot_boundary_trace, plot_convergence_ladder, plot_energy_budget
from src.diagnostics.report import Tolerances, analyze
from src.errors import ParameterError, StructuralError
from src.forces.nonlocal_terms import AlignmentKernel, KernelKind, NonlocalConfig
from src.solver.trajectory import Accumulators, Trajectory
from src.testing.oracles import random_state
from tests.conftest import static_trajectory

CENTRAL = Window(-0.5, 0.5)


def test_window_geometry():
    assert CENTRAL.width == 1.0
    np.testing.assert_array_equal(CENTRAL.contains(np.array([-1.0, 0.0, 0.5])), [False, True, True])
    np.testing.assert_allclose(
        CENTRAL.overlap(np.array([-1.0, 0.0, 1.0]), np.array([0.0, 0.25, 2.0])), [0.5, 0.25, 0.0]
    )
    with pytest.raises(ParameterError):
        Window(1.0, 1.0)


def test_default_window_is_central_half():
    window = default_window((-2.0, 6.0))
    assert (window.left, window.right) == (0.0, 4.0)


def test_window_must_stay_inside_domain():
    with pytest.raises(StructuralError):
        check_window(static_trajectory(), Window(-1.5, 0.5))


def test_boundary_reference_closed_form(law):
    # rho0 (1 + kappa (gamma - alpha)/eps rho0^(gamma - alpha) t)^(-1/(gamma - alpha))
    values = boundary_reference(1.0, law, 1.0, 0.1, np.array([0.0, 1.0]))
    np.testing.assert_allclose(values, [1.0, 1.0 / 2.25])
    with pytest.raises(ParameterError):
        boundary_reference(1.0, law, 1.0, 0.1, np.array([1.0]), exponent=1.0)


def test_worst_ratio():
    assert worst_ratio([]) == 0.0
    assert worst_ratio([1.0, 0.5, 0.25]) == pytest.approx(0.5)
    assert worst_ratio([0.0, 0.0]) == 0.0
    assert worst_ratio([0.0, 1.0]) == float("inf")


def test_fitted_rate():
    eps = [0.1, 0.05, 0.025]
    assert fitted_rate(eps, [e**0.5 for e in eps]) == pytest.approx(0.5)
    assert np.isnan(fitted_rate([0.1], [1.0]))


def test_uniform_spread():
    assert uniform_spread([2.0, 1.0, 1.5]) == pytest.approx(0.5)
    assert uniform_spread([0.0, 0.0]) == 0.0


def test_convergence_metric():
    first = static_trajectory()
    second = static_trajectory()
    assert convergence_metric(first, second, CENTRAL).sup_l1 == 0.0
    for state in second.states:
        state.node_u = state.node_u + 1.0
    metric = convergence_metric(first, second, CENTRAL)
    np.testing.assert_allclose(metric.l1_m, 1.0, rtol=1e-6)
    np.testing.assert_allclose(metric.l1_rho, 0.0, atol=1e-12)
    assert metric.to_dict()["sup_l1"] == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(StructuralError):
        convergence_metric(first, static_trajectory((0.0, 2.0)), CENTRAL)


def test_window_integrals_on_plateau(law):
    density, velocity = window_integrability(static_trajectory(), law, CENTRAL)
    assert density == pytest.approx(1.0)
    assert velocity == pytest.approx(1.0)
    budgets = budget_integrals(static_trajectory(), law, CENTRAL)
    assert budgets == pytest.approx({"viscous": 0.0, "bd": 0.0, "fractional": 0.0}, abs=1e-20)


def test_energy_checks():
    energy = {
        "total": np.array([1.0, 0.9, 0.95]),
        "residual": np.array([0.0, 0.001, -0.002]),
        "interaction": np.zeros(3),
        "interaction_shifted": np.zeros(3),
    }
    checks = {check.name: check for check in energy_checks(energy, 0.01, forces_off=True)}
    assert checks["energy_balance"].passed
    assert not checks["energy_nonincreasing"].passed
    assert len(energy_checks(energy, 0.01, forces_off=False)) == 1


def test_energy_scale_uses_constructed_initial_energy():
    energy = {
        "total": np.array([1000.0, 999.0, 998.0]),
        "residual": np.array([0.0, 5.0, 5.0]),
        "interaction": np.zeros(3),
        "interaction_shifted": np.full(3, 0.25),
    }
    inflated = {check.name: check for check in energy_checks(energy, 0.01, forces_off=False)}
    assert inflated["energy_balance"].passed
    assert "energy_initial_gap" not in inflated

    checks = energy_checks(energy, 0.01, forces_off=False, initial_energy=-0.04)
    flags = {check.name: check for check in checks}
    # scale = -0.04 + 0.25
    assert flags["energy_balance"].value == pytest.approx(5.0 / 0.21)
    assert not flags["energy_balance"].passed
    assert flags["energy_initial_gap"].value == pytest.approx(1000.04 / 0.21)
    assert not flags["energy_initial_gap"].passed


def test_uniform_growth():
    assert uniform_growth([1.0, 1.05, 1.02]) == pytest.approx(0.05)
    assert uniform_growth([2.0, 1.0, 0.5]) == 0.0
    assert uniform_growth([]) == 0.0
    assert uniform_growth([0.0, 1.0]) == 0.0


def test_second_moment_check_on_plateau():
    check = second_moment_check(moment_series(static_trajectory()))
    assert check.passed
    assert check.name == "second_moment_gronwall"


def test_alignment_identities(rng):
    cfg = NonlocalConfig(alignment=AlignmentKernel(KernelKind.GAUSSIAN, strength=1.0, width=0.5))
    trajectory = Trajectory([random_state(rng, 30)], [Accumulators()])
    checks = alignment_identity_check(trajectory, cfg)
    assert [check.name for check in checks] == [
        "alignment_neutrality",
        "alignment_neutrality_steps",
        "alignment_symmetrisation",
    ]
    assert all(check.passed for check in checks)
    assert alignment_identity_check(trajectory, NonlocalConfig()) == []


def test_analyze_static_trajectory(law, tmp_path):
    report = analyze(static_trajectory((0.0, 0.5, 1.0)), law, NonlocalConfig())
    assert {
        "energy_balance",
        "energy_nonincreasing",
        "second_moment_gronwall",
        "mass_conservation",
        "boundary_density_upper",
        "boundary_density_closed_form",
        "bd_entropy_finite",
        "bd_dissipation_nondecreasing",
        "free_boundary_margin",
    } <= set(report.flags)
    assert report.flags["mass_conservation"].passed
    assert report.flags["energy_balance"].passed
    assert report.flags["free_boundary_margin"].value == pytest.approx(1.0)
    assert report.metadata["window"] == [-0.5, 0.5]
    assert report.integrability["density"] == pytest.approx(1.0)

    data = json.loads(report.to_json(tmp_path / "report.json").read_text())
    assert data["label"] == "static"
    assert set(data["final"]) == {"energy", "moments", "boundary", "bd_entropy"}

    written = report.write_series(tmp_path / "series")
    assert sorted(path.name for path in written) == [
        "bd_entropy.csv",
        "boundary.csv",
        "energy.csv",
        "moments.csv",
    ]
    assert (tmp_path / "series" / "energy.csv").read_text().startswith("time,")


def test_margin_can_be_informational(law):
    trajectory = static_trajectory()
    trajectory.halfwidth = 10.0
    enforced = analyze(trajectory, law, NonlocalConfig())
    assert not enforced.flags["free_boundary_margin"].passed
    relaxed = analyze(trajectory, law, NonlocalConfig(), Tolerances(enforce_margin=False))
    assert relaxed.flags["free_boundary_margin"].passed
    assert relaxed.flags["free_boundary_margin"].detail == "informational"


def test_plots_write_svg(law, tmp_path):
    report = analyze(static_trajectory(), law, NonlocalConfig())
    for path in (
        plot_energy_budget(report, tmp_path / "energy.svg"),
        plot_boundary_trace(report, tmp_path / "boundary.svg"),
        plot_convergence_ladder([0.1, 0.05], [0.2, 0.1], tmp_path / "ladder.svg"),
    ):
        assert path.exists()
        assert "<svg" in path.read_text()
