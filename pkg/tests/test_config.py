#!/usr/bin/env python3
"""
Tests for the configuration loader
"""

import pytest

from src.config.loader import ConfigLoader, RunConfig
from src.errors import ConfigError
from src.forces.nonlocal_terms import InteractionKind, KernelKind
from src.pressure.laws import LawKind
from tests.conftest import CONFIGS, ROOT


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("NLNS_WORKERS", "NLNS_OUTPUT_DIR", "NLNS_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)


def write(tmp_path, text: str, name: str = "config.yml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_defaults_are_valid():
    loader = ConfigLoader()
    assert loader.config.problems() == []
    assert loader.config.viscosity.ladder() == [0.01]
    assert loader.config.pressure_law().kind is LawKind.POLYTROPIC
    assert loader.config.nonlocal_config().forces_off
    assert loader.config.window() is None
    assert loader.config.initial.edge_density == 0.05
    solver = loader.config.solver_config()
    assert (solver.end_mass_ratio, solver.grading) == (1e-3, 1.15)


@pytest.mark.parametrize(
    "path",
    [ROOT / "config.yml"] + sorted(CONFIGS.glob("*.yml")),
    ids=lambda path: path.name,
)
def test_shipped_configs_validate(path):
    ConfigLoader(path)


def test_smoke_config():
    config = ConfigLoader(CONFIGS / "smoke.yml").config
    assert config.name == "smoke"
    assert config.initial.halfwidth == 3.0
    assert config.solver.n_cells == 128
    assert config.diagnostics.plots is False
    assert config.tolerances().enforce_margin is False


def test_off_is_read_as_a_string():
    config = ConfigLoader(ROOT / "config.yml").config
    assert config.nonlocal_forces.interaction == "off"
    assert config.nonlocal_forces.alignment.kind == "off"
    assert config.nonlocal_config().alignment.kind is KernelKind.OFF


def test_sweep_ladder():
    config = ConfigLoader(CONFIGS / "sweep.yml").config
    assert config.require_ladder() == [0.04, 0.02, 0.01, 0.005]
    forces = config.nonlocal_config()
    assert forces.interaction is InteractionKind.NEWTONIAN_QUADRATIC
    assert forces.damping == -0.5


def test_single_epsilon_is_not_a_ladder():
    with pytest.raises(ConfigError):
        ConfigLoader(CONFIGS / "smoke.yml").config.require_ladder()


def test_explicit_epsilons_take_precedence(tmp_path):
    path = write(tmp_path, "viscosity:\n  epsilon0: 0.1\n  halvings: 2\n  epsilons: [0.3, 0.2]\n")
    assert ConfigLoader(path).config.viscosity.ladder() == [0.3, 0.2]


def test_general_law_p_limit():
    config = ConfigLoader(CONFIGS / "general_law.yml").config
    # min(gamma, gamma2) / (min(gamma, gamma2) - alpha) = 1.5 / 0.6
    assert config.p_limit() == pytest.approx(2.5)
    assert config.pressure_law().kind is LawKind.GENERAL_BLEND


@pytest.mark.parametrize(
    "text",
    [
        "solver:\n  n_cels: 10\n",
        "plotting:\n  dpi: 300\n",
        "nonlocal:\n  alignment:\n    radius: 1.0\n",
        "solver: 5\n",
        "- just\n- a list\n",
    ],
    ids=["unknown-key", "unknown-section", "unknown-nested-key", "scalar-section", "list"],
)
def test_malformed_files(tmp_path, text):
    with pytest.raises(ConfigError):
        ConfigLoader(write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        ConfigLoader(tmp_path / "absent.yml")


def test_parse_error(tmp_path):
    with pytest.raises(ConfigError):
        ConfigLoader(write(tmp_path, "solver: [unclosed\n"))


def test_empty_file_means_defaults(tmp_path):
    assert ConfigLoader(write(tmp_path, "")).config.name == "run"


@pytest.mark.parametrize(
    "text, message",
    [
        ("viscosity:\n  alpha: 0.5\n", "alpha"),
        ("viscosity:\n  p_exponent: 1.5\n", "p_exponent"),
        ("viscosity:\n  epsilons: [0.1, -0.1]\n", "epsilon"),
        ("initial:\n  halfwidth: 1.5\n", "halfwidth"),
        ("initial:\n  preset: square\n", "preset"),
        ("nonlocal:\n  alignment:\n    kind: cosine\n", "nonlocal"),
        ("pressure:\n  gamma: 0.9\n", "pressure"),
        ("solver:\n  cfl: 2.0\n", "solver"),
        ("diagnostics:\n  window: [1.0, -1.0]\n", "diagnostics"),
        ("output:\n  workers: 0\n", "workers"),
        ("output:\n  log_level: chatty\n", "log_level"),
        ("initial:\n  edge_density: 1.0\n", "edge_density"),
        ("solver:\n  end_mass_ratio: 0.0\n", "end_mass_ratio"),
        ("solver:\n  grading: 1.0\n", "grading"),
    ],
)
def test_invalid_values(tmp_path, text, message):
    with pytest.raises(ConfigError, match=message):
        ConfigLoader(write(tmp_path, text))


def test_validation_can_be_deferred(tmp_path):
    loader = ConfigLoader(write(tmp_path, "viscosity:\n  alpha: 0.5\n"), validate=False)
    assert any("alpha" in issue for issue in loader.config.problems())


def test_window_and_tolerances(tmp_path):
    path = write(tmp_path, "diagnostics:\n  window: [-1.0, 2.0]\n  energy_tolerance: 0.05\n")
    config = ConfigLoader(path).config
    window = config.window()
    assert (window.left, window.right) == (-1.0, 2.0)
    tolerances = config.tolerances()
    assert tolerances.energy == 0.05
    assert tolerances.enforce_margin is True


def test_environment_overrides(monkeypatch, tmp_path):
    monkeypatch.setenv("NLNS_WORKERS", "3")
    monkeypatch.setenv("NLNS_OUTPUT_DIR", str(tmp_path / "out"))
    monkeypatch.setenv("NLNS_LOG_LEVEL", "debug")
    output = ConfigLoader().output
    assert output.workers == 3
    assert output.directory == str(tmp_path / "out")
    assert output.log_level == "DEBUG"


def test_invalid_worker_override_is_ignored(monkeypatch):
    monkeypatch.setenv("NLNS_WORKERS", "many")
    assert ConfigLoader().output.workers == RunConfig().output.workers


@pytest.mark.parametrize("suffix", [".yml", ".json"])
def test_save_and_reload(tmp_path, suffix):
    original = ConfigLoader(CONFIGS / "sweep.yml")
    saved = original.save_config(tmp_path / f"saved{suffix}")
    reloaded = ConfigLoader(saved).config
    assert reloaded.to_dict() == original.config.to_dict()


def test_summary_lists_the_ladder():
    summary = ConfigLoader(CONFIGS / "sweep.yml").get_config_summary()
    assert summary.startswith("📋 Configuration Summary: sweep")
    assert "0.04, 0.02, 0.01, 0.005" in summary
