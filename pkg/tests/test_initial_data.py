#!/usr/bin/env python3
"""
Tests for the initial profiles and the approximate initial-data construction
"""

import numpy as np
import pytest

from src.errors import ConfigError, ParameterError, StructuralError, VacuumError
from src.initial.construction import (
    build_initial_data,
    check_viscosity_exponent,
    cutoff_step,
    mollifier,
    trim_to_support,
)
from src.initial.profiles import Profile, RawInitialData, make_preset
from src.pressure.laws import PressureLaw
from src.solver.state import state_from_profile


@pytest.fixture(scope="module")
def gaussian():
    return make_preset("gaussian_bump", mass=1.0, width=0.5)


@pytest.fixture(scope="module")
def constructed(gaussian):
    return build_initial_data(
        gaussian, PressureLaw(gamma=2.0), 0.1, 1.0, 2.5, halfwidth=3.0, resolution=32
    )


@pytest.fixture(scope="module")
def trimmed(gaussian):
    return build_initial_data(
        gaussian,
        PressureLaw(gamma=2.0),
        0.1,
        1.0,
        2.5,
        halfwidth=3.0,
        resolution=32,
        edge_density=1e-2,
    )


@pytest.mark.parametrize(
    "name, parameters, mass",
    [
        ("gaussian_bump", {"mass": 2.0, "width": 0.3}, 2.0),
        ("double_bump", {"mass": 1.5, "separation": 2.0}, 1.5),
        ("compact_plateau", {"mass": 1.0, "halfwidth": 1.0, "edge": 0.5}, 1.0),
    ],
)
def test_preset_mass(name, parameters, mass):
    raw = make_preset(name, **parameters)
    assert raw.total_mass == pytest.approx(mass, rel=1e-8)
    assert raw.kinetic_energy == 0.0


def test_preset_velocity(gaussian):
    raw = make_preset("gaussian_bump", velocity="tanh", velocity_amplitude=0.5)
    assert raw.kinetic_energy > 0.0
    np.testing.assert_allclose(raw.momentum(np.array([-1.0])), -raw.momentum(np.array([1.0])))


def test_unknown_preset_and_velocity():
    with pytest.raises(ConfigError):
        make_preset("square_wave")
    with pytest.raises(ConfigError):
        make_preset("gaussian_bump", velocity="spiral", velocity_amplitude=1.0)


def test_density_vanishes_outside_support(gaussian):
    low, high = gaussian.support
    assert gaussian.density(np.array([low - 1.0, high + 1.0])).tolist() == [0.0, 0.0]


def test_from_table():
    raw = RawInitialData.from_table(np.array([-1.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0]))
    assert raw.total_mass == pytest.approx(1.0, rel=1e-10)
    assert raw.support == (-1.0, 1.0)
    with pytest.raises(ParameterError):
        RawInitialData.from_table(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    with pytest.raises(ParameterError):
        RawInitialData.from_table(np.array([0.0, 1.0]), np.array([1.0, -1.0]))


def test_viscosity_exponent_range():
    assert check_viscosity_exponent(1.0) == pytest.approx(2.0)
    assert check_viscosity_exponent(0.75) == pytest.approx(4.0)
    for alpha in (0.5, 2.0 / 3.0, 1.1):
        with pytest.raises(ParameterError):
            check_viscosity_exponent(alpha)


def test_mollifier_has_unit_mass():
    offsets = np.linspace(-0.3, 0.3, 61)
    kernel = mollifier(offsets, 0.3)
    assert kernel.sum() * (offsets[1] - offsets[0]) == pytest.approx(1.0)
    assert kernel[0] == 0.0 and kernel[-1] == 0.0


def test_cutoff_step_is_a_monotone_switch():
    z = np.linspace(-1.0, 3.0, 81)
    values = cutoff_step(z)
    assert np.all(values[z <= 0.0] == 0.0)
    assert np.all(values[z >= 2.0] == 1.0)
    assert np.all(np.diff(values) >= 0.0)


def test_construction_conserves_mass(constructed, gaussian):
    assert constructed.mass_error < 1e-12
    assert constructed.total_mass == pytest.approx(gaussian.total_mass)
    assert np.all(constructed.rho.values > 0.0)


def test_construction_domain(constructed):
    assert abs(constructed.halfwidth - 3.0) <= constructed.grid_spacing
    assert constructed.rho.x[0] == pytest.approx(-constructed.halfwidth)
    assert constructed.rho.x[-1] == pytest.approx(constructed.halfwidth)
    assert constructed.beta == pytest.approx(2.0)


def test_construction_velocity(constructed):
    assert constructed.u.values[0] == 0.0
    assert constructed.u.values[-1] == 0.0
    np.testing.assert_array_equal(constructed.ubar.values, 0.0)
    assert constructed.kinetic_identity_gap == 0.0
    assert constructed.collar_size >= 0.0


def test_construction_summary(constructed):
    summary = constructed.summary()
    for key in (
        "E0",
        "E1_over_eps",
        "second_moment",
        "interaction_energy",
        "collar_size",
        "boundary_stress_residual",
        "mass_error",
    ):
        assert np.isfinite(summary[key])
    assert summary["E1_over_eps"] == pytest.approx(constructed.E1 / 0.1)
    assert summary["second_moment"] > 0.0


def test_construction_to_state(constructed, gaussian):
    state = constructed.to_state(64)
    assert state.n_cells == 64
    assert state.is_ordered()
    assert state.total_mass == pytest.approx(gaussian.total_mass, rel=1e-12)
    assert state.left_boundary == pytest.approx(-constructed.halfwidth)


def test_construction_to_csv(constructed, tmp_path):
    path = constructed.to_csv(tmp_path / "initial.csv")
    assert path.read_text().splitlines()[0] == "x,rho,u,ubar"


def test_halfwidth_from_exponent(gaussian, law):
    data = build_initial_data(gaussian, law, 0.5, 1.0, 1.5, resolution=16)
    assert abs(data.halfwidth - 0.5**-1.5) <= data.grid_spacing


def test_construction_rejects_bad_parameters(gaussian, law):
    with pytest.raises(ParameterError):
        build_initial_data(gaussian, law, 0.1, 1.0, 2.5, halfwidth=1.5)
    with pytest.raises(ParameterError):
        build_initial_data(gaussian, law, 0.0, 1.0, 2.5, halfwidth=3.0)
    with pytest.raises(ParameterError):
        build_initial_data(gaussian, law, 0.1, 0.6, 2.5, halfwidth=3.0)


def test_state_from_profile_inverts_cumulative_mass():
    x = np.linspace(0.0, 1.0, 101)
    state = state_from_profile(x, np.ones_like(x), np.zeros_like(x), 10, 0.1, 1.0)
    np.testing.assert_allclose(state.node_x, np.linspace(0.0, 1.0, 11), atol=1e-12)
    np.testing.assert_allclose(state.cell_rho, 1.0, rtol=1e-10)
    with pytest.raises(StructuralError):
        state_from_profile(x[::-1], np.ones_like(x), np.zeros_like(x), 10, 0.1, 1.0)


def test_trimmed_support(trimmed, constructed):
    peak = float(np.max(trimmed.rho.values))
    assert trimmed.rho.values[0] >= 1e-2 * peak * (1.0 - 1e-12)
    assert trimmed.rho.values[-1] >= 1e-2 * peak * (1.0 - 1e-12)
    assert 1.0 < trimmed.extent < 2.5
    assert constructed.extent == pytest.approx(constructed.halfwidth)
    assert trimmed.mass_error < 1e-12
    assert 0.0 < trimmed.trimmed_mass < 0.05
    assert trimmed.u.x.shape == trimmed.rho.x.shape
    assert trimmed.summary()["extent"] == pytest.approx(trimmed.extent)


def test_trimming_keeps_full_domain_diagnostics(trimmed, constructed):
    assert trimmed.halfwidth == constructed.halfwidth
    assert trimmed.collar_size == constructed.collar_size
    assert trimmed.boundary_stress_residual == constructed.boundary_stress_residual
    assert trimmed.E0 == pytest.approx(constructed.E0, abs=1e-2)
    assert trimmed.boundary_density == pytest.approx(trimmed.rho.values[-1])


def test_graded_state_from_trimmed_data(trimmed):
    uniform = trimmed.to_state(64)
    graded = trimmed.to_state(64, end_mass_ratio=1e-3)
    assert graded.dxi[0] < 0.2 * uniform.dxi[0]
    assert graded.dxi[-1] == pytest.approx(graded.dxi[0])
    assert graded.total_mass == pytest.approx(uniform.total_mass, rel=1e-12)
    assert graded.left_boundary == uniform.left_boundary == trimmed.rho.x[0]
    assert graded.right_boundary == uniform.right_boundary == trimmed.rho.x[-1]
    assert graded.is_ordered()


def test_trim_to_support():
    x = np.linspace(-2.0, 2.0, 401)
    rho = Profile(x, np.exp(-(x**2)))
    velocity = Profile(x, x.copy())
    cut, (u,), fraction = trim_to_support(rho, (velocity,), 0.5, 1.0)
    assert cut.x[0] >= -np.sqrt(np.log(2.0)) and cut.x[-1] <= np.sqrt(np.log(2.0))
    assert cut.integral() == pytest.approx(1.0)
    np.testing.assert_array_equal(u.x, cut.x)
    kept = rho.values >= 0.5
    assert fraction == pytest.approx(1.0 - Profile(x[kept], rho.values[kept]).integral())
    with pytest.raises(ParameterError):
        trim_to_support(rho, (), 1.0, 1.0)
    with pytest.raises(VacuumError):
        spike = np.where(np.arange(x.size) == 200, 1.0, 0.0)
        trim_to_support(Profile(x, spike), (), 0.5, 1.0)


def test_effective_support(gaussian):
    low, high = gaussian.effective_support(1e-2)
    # exp(-x^2 / (2 w^2)) = 1e-2 at x = w sqrt(2 ln 100)
    assert high == pytest.approx(0.5 * np.sqrt(2.0 * np.log(100.0)), abs=5e-3)
    assert low == pytest.approx(-high, abs=5e-3)
    assert gaussian.effective_support(0.0) == gaussian.support
