#!/usr/bin/env python3
"""
Tests for single runs, epsilon sweeps and the entropy suite
"""

import json

import numpy as np
import pytest

from src.config.loader import ConfigLoader, RunConfig
from src.entropy.pairs import PairKind
from src.errors import ConfigError, SimulationError
from src.sweep import entropy_suite
from src.sweep.entropy_suite import run_entropy
from src.sweep.runner import (
    SweepAborted,
    SweepReport,
    analysis_window,
    entropy_pair_for,
    run_label,
    run_single,
    run_sweep,
    run_sweep_async,
)
from tests.conftest import CONFIGS


def test_run_label():
    assert run_label(0.1) == "eps_0.1"
    assert run_label(0.00125) == "eps_0.00125"


def test_analysis_window(smoke_config):
    window = analysis_window(smoke_config)
    # central half of the support where rho0 >= 0.05 max rho0
    half = 0.25 * np.sqrt(2.0 * np.log(20.0))
    assert window.right == pytest.approx(half, abs=2e-3)
    assert window.left == pytest.approx(-half, abs=2e-3)
    smoke_config.initial.edge_density = 0.0
    window = analysis_window(smoke_config)
    assert (window.left, window.right) == (-2.0, 2.0)
    smoke_config.diagnostics.window = [-1.0, 1.0]
    assert analysis_window(smoke_config).width == 2.0


def test_entropy_pair_selection(smoke_config, law):
    smoke_config.entropy.dissipation_pair = "special_hash"
    assert entropy_pair_for(smoke_config, law, None).kind is PairKind.SPECIAL_HASH
    smoke_config.entropy.dissipation_pair = "none"
    assert entropy_pair_for(smoke_config, law, None) is None
    smoke_config.entropy.dissipation_pair = "mechanical"
    assert entropy_pair_for(smoke_config, law, None).kind is PairKind.MECHANICAL


def test_run_single_writes_artifacts(smoke_config, tmp_path):
    directory = tmp_path / "run"
    result = run_single(smoke_config, 0.1, directory, plots=True)
    assert result.label == "eps_0.1"
    assert len(result.trajectory) == 3
    report = result.report
    assert report.flags["mass_conservation"].passed
    assert report.flags["initial_mass"].passed
    assert report.metadata["entropy_dissipation"]["pair"] == "mechanical"
    assert report.flags["free_boundary_margin"].detail == "informational"

    data = json.loads((directory / "report.json").read_text())
    assert data["label"] == "eps_0.1"
    assert "initial" in data["metadata"]
    for name in (
        "trajectory.json",
        "initial.csv",
        "series/energy.csv",
        "series/boundary.csv",
        "snapshots/snapshot_0000.csv",
        "plots/energy_budget.svg",
        "plots/boundary_density.svg",
    ):
        assert (directory / name).exists(), name


def test_run_single_without_directory(smoke_config, tmp_path):
    result = run_single(smoke_config, 0.1)
    assert result.directory is None
    assert not (tmp_path / "results").exists()


def test_sweep_needs_three_epsilons(smoke_config):
    with pytest.raises(ConfigError):
        run_sweep(smoke_config)


@pytest.mark.asyncio
async def test_sweep_over_small_ladder(smoke_config, tmp_path):
    smoke_config.viscosity.epsilons = [0.06, 0.1, 0.08]
    report = await run_sweep_async(smoke_config, tmp_path / "sweep", workers=1)
    assert report.epsilons == [0.1, 0.08, 0.06]
    assert [(row["from"], row["to"]) for row in report.distances] == [(0.1, 0.08), (0.08, 0.06)]
    assert {
        "cauchy_consistency",
        "uniform_density_integral",
        "uniform_velocity_integral",
        "uniform_bd_entropy_max",
        "fractional_budget_rate",
        "margin_smallest_epsilon",
        "initial_second_moment_converges",
        "initial_interaction_energy_converges",
    } <= set(report.flags)
    assert len(report.members) == 3
    for epsilon in (0.1, 0.08, 0.06):
        assert (tmp_path / "sweep" / run_label(epsilon) / "report.json").exists()
    saved = json.loads((tmp_path / "sweep" / "sweep_report.json").read_text())
    assert saved["epsilons"] == [0.1, 0.08, 0.06]
    assert (tmp_path / "sweep" / "ladder.csv").read_text().startswith("epsilon,E0,")


@pytest.mark.asyncio
async def test_member_failure_aborts_sweep(smoke_config, tmp_path, mocker):
    smoke_config.viscosity.epsilons = [0.1, 0.08, 0.06]
    mocker.patch("src.sweep.runner.run_single", side_effect=SimulationError("boom"))
    with pytest.raises(SweepAborted) as excinfo:
        await run_sweep_async(smoke_config, tmp_path, workers=1)
    assert excinfo.value.report.error == "SimulationError: boom"
    assert not excinfo.value.report.passed
    saved = json.loads((tmp_path / "sweep_report.json").read_text())
    assert saved["passed"] is False
    assert saved["members"] == []


def test_write_ladder(tmp_path):
    report = SweepReport(
        epsilons=[0.1, 0.05],
        members=[{"epsilon": 0.1, "E0": 1.0, "passed": True}, {"epsilon": 0.05, "passed": False}],
    )
    lines = report.write_ladder(tmp_path / "ladder.csv").read_text().splitlines()
    assert len(lines) == 3
    assert lines[0].split(",")[-1] == "passed"
    assert lines[1].startswith("0.10000000000000001,1,")
    assert lines[2].endswith(",0")


def small_entropy_config(tmp_path) -> RunConfig:
    config = RunConfig()
    config.entropy.resolution = 16
    config.entropy.quadrature_order = 32
    config.entropy.grid_resolution = 32
    config.entropy.rho_max = 2.0
    config.output.directory = str(tmp_path)
    return config


def test_entropy_suite_polytropic(tmp_path):
    config = small_entropy_config(tmp_path)
    report = run_entropy(config, tmp_path / "entropy")
    assert "generated_matches_mechanical" in report.flags
    assert "generator_compatibility" in report.flags
    assert "goursat_residual" in report.flags
    assert {"special_eta", "goursat_eta", "generator_quadratic_max_eta"} <= set(report.constants)
    data = json.loads((tmp_path / "entropy" / "entropy_report.json").read_text())
    assert data["law"]["kind"] == "polytropic"
    header = (tmp_path / "entropy" / "goursat_table.csv").read_text().splitlines()[0]
    assert header == "rho,s,u,eta,q"


def test_entropy_suite_zero_generator(tmp_path):
    config = small_entropy_config(tmp_path)
    config.entropy.generator = "zero"
    report = run_entropy(config)
    assert report.constants["generator_zero_max_eta"] == 0.0
    assert "generator_compatibility" not in report.flags


def test_entropy_suite_forwards_seed(tmp_path, mocker):
    config = small_entropy_config(tmp_path)
    config.output.seed = 7
    pair_checks = mocker.spy(entropy_suite, "pair_checks")
    compatibility = mocker.spy(entropy_suite, "compatibility_check")
    report = run_entropy(config)
    assert pair_checks.call_args.kwargs["seed"] == 7
    assert compatibility.call_args.kwargs["seed"] == 7
    assert "generated_matches_mechanical" in report.flags
    assert report.flags["compatibility_mechanical"].passed


def test_entropy_suite_unknown_generator(tmp_path):
    config = small_entropy_config(tmp_path)
    config.entropy.generator = "cubic"
    with pytest.raises(ConfigError):
        run_entropy(config)


def test_entropy_suite_general_law(tmp_path):
    config = small_entropy_config(tmp_path)
    config.pressure.kind = "general_blend"
    config.pressure.gamma = 3.0
    config.pressure.kappa = 0.5
    config.pressure.gamma2 = 1.5
    config.pressure.kappa2 = 0.5
    report = run_entropy(config)
    assert "generated_matches_mechanical" not in report.flags
    assert report.flags["goursat_boundary"].passed
    assert "goursat_cancellation" in report.constants


@pytest.mark.slow
def test_reference_run(tmp_path):
    config = ConfigLoader(CONFIGS / "reference_run.yml").config
    config.diagnostics.plots = False
    result = run_single(config, config.viscosity.ladder()[0], tmp_path / "reference")
    report = result.report
    for name in (
        "energy_balance",
        "energy_initial_gap",
        "mass_conservation",
        "boundary_density_upper",
        "boundary_density_closed_form",
        "alignment_neutrality",
        "alignment_symmetrisation",
        "free_boundary_margin",
    ):
        assert report.flags[name].passed, report.flags[name]
    assert report.passed, [check.name for check in report.failed_checks]
    assert result.trajectory.final.is_ordered()
    assert (tmp_path / "reference" / "report.json").exists()


@pytest.mark.slow
def test_four_member_sweep(tmp_path):
    config = ConfigLoader(CONFIGS / "sweep.yml").config
    config.diagnostics.plots = False
    report = run_sweep(config, tmp_path / "sweep", workers=1)
    assert report.epsilons == [0.04, 0.02, 0.01, 0.005]
    assert len(report.distances) == 3
    assert all(member["passed"] for member in report.members), report.members
    for name in (
        "cauchy_consistency",
        "uniform_density_integral",
        "uniform_velocity_integral",
        "uniform_bd_entropy_max",
        "fractional_budget_rate",
        "margin_smallest_epsilon",
    ):
        assert report.flags[name].passed, report.flags[name]
    assert report.passed
