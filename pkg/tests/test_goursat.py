#!/usr/bin/env python3
"""
Tests for the Goursat entropy table and the eta-hat pair
"""

import numpy as np
import pytest

from src.entropy.goursat import (
    boundary_error,
    build_goursat_table,
    goursat_checks,
    goursat_hat,
    local_exponents,
    odd_symmetry_error,
    pde_residual,
    signed_energy,
)
from src.entropy.pairs import PairKind, jacobi_rule, special_pair_hash
from src.errors import GoursatInstabilityError, ParameterError
from src.pressure.laws import LawKind, PressureLaw


@pytest.fixture(scope="module")
def wave_table():
    """gamma = 3 turns the entropy equation into the plain wave equation"""
    law = PressureLaw(gamma=3.0)
    return law, build_goursat_table(law, 2.0, 64)


def test_table_layout(wave_table):
    _, table = wave_table
    assert table.resolution == 64
    assert table.eta.shape == (65, 129)
    assert table.rho[0] == 0.0
    # k(rho) = rho for gamma = 3
    assert table.s[-1] == pytest.approx(2.0)
    assert table.inside()[0].sum() == 1


def test_wave_equation_residual(wave_table):
    law, table = wave_table
    assert pde_residual(law, table) < 1e-8


def test_characteristic_data_and_symmetry(wave_table):
    law, table = wave_table
    scale = float(np.max(np.abs(table.eta)))
    assert boundary_error(law, table) <= 1e-14 * scale
    assert odd_symmetry_error(table) <= 1e-14 * scale


def test_csv_export(wave_table, tmp_path):
    _, table = wave_table
    path = table.to_csv(tmp_path / "goursat_table.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "rho,s,u,eta,q"
    assert len(lines) - 1 == int(table.inside().sum())


def test_bad_table_parameters(law):
    with pytest.raises(ParameterError):
        build_goursat_table(law, 0.0, 64)
    with pytest.raises(ParameterError):
        build_goursat_table(law, 2.0, 2)


def test_growth_guard(law):
    with pytest.raises(GoursatInstabilityError):
        build_goursat_table(law, 2.0, 64, growth_limit=1e-6)


def test_hat_pair_agrees_with_closed_form_for_polytropic(law):
    """Normalised eta# solves the same Goursat problem when gamma = 2"""
    pair = goursat_hat(law, rho_max=2.0, grid_resolution=128)
    assert pair.kind is PairKind.GOURSAT_HAT
    _, _, norm = jacobi_rule(law, 8)
    rho = np.array([0.5, 1.0, 1.5])
    u = np.array([0.4, -0.6, 0.9])
    expected = special_pair_hash(law).evaluate(rho, u).eta / norm
    np.testing.assert_allclose(pair.evaluate(rho, u).eta, expected, rtol=2e-2)


def test_hat_pair_outside_cone_is_signed_energy(law):
    pair = goursat_hat(law, rho_max=2.0, grid_resolution=32)
    values = pair.evaluate(np.array([1.0, 1.0]), np.array([2.0, -2.0]))
    np.testing.assert_allclose(values.eta, [2.125, -2.125])
    np.testing.assert_allclose(
        values.eta, signed_energy(law, np.array([1.0, 1.0]), np.array([2.0, -2.0]))
    )
    np.testing.assert_allclose(values.eta_m, [2.0, 2.0])


def test_hat_pair_refuses_densities_beyond_table(law):
    pair = goursat_hat(law, rho_max=2.0, grid_resolution=32)
    with pytest.raises(ParameterError):
        pair.evaluate(np.array([100.0]), np.array([0.0]))


def test_general_law_checks(blend_law):
    table, checks = goursat_checks(blend_law, rho_max=2.0, grid_resolution=64)
    assert table.resolution == 64
    assert checks["goursat_boundary"].passed
    assert checks["goursat_odd_symmetry"].passed
    assert {"goursat_eta_drift", "goursat_cancellation_drift"} <= set(checks)


def test_local_exponents_follow_the_density_thresholds():
    law = PressureLaw(
        LawKind.GENERAL_BLEND,
        gamma=3.0,
        kappa=0.5,
        gamma2=1.5,
        kappa2=0.5,
        rho_star_low=2.0,
        rho_star_high=8.0,
    )
    gamma, theta = local_exponents(law, np.array([0.0, 0.5, 1.5, 2.0, 4.0, 8.0, 20.0]))
    np.testing.assert_allclose(gamma[:4], 3.0)
    np.testing.assert_allclose(gamma[5:], 1.5)
    assert 1.5 < gamma[4] < 3.0
    np.testing.assert_allclose(theta, 0.5 * (gamma - 1.0))

    polytropic, _ = local_exponents(PressureLaw(gamma=2.0), np.array([0.5, 1.5, 20.0]))
    np.testing.assert_allclose(polytropic, 2.0)
