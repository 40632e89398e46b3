#!/usr/bin/env python3
"""
Discrete Functionals
Energy, moment and BD-entropy functionals of a single MassGridState.
Mass-weighted integrals are sums against the cell/node masses; pure dx
integrals use the node positions.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import numpy.typing as npt

from src.forces.nonlocal_terms import interaction_energy
from src.pressure.laws import PressureLaw
from src.solver.state import MassGridState

FloatArray = npt.NDArray[np.float64]


@dataclass
class EnergyComponents:
    kinetic: float
    internal: float
    interaction: float
    interaction_shifted: float

    @property
    def total(self) -> float:
        return self.kinetic + self.internal + self.interaction


def kinetic_energy(state: MassGridState) -> float:
    """1/2 int rho u^2 with the lumped node masses"""
    return float(0.5 * np.dot(state.node_masses, state.node_u**2))


def momentum_weight(state: MassGridState) -> float:
    """int rho u^2"""
    return float(np.dot(state.node_masses, state.node_u**2))


def internal_energy_total(state: MassGridState, law: PressureLaw) -> float:
    """int rho e(rho) = sum dxi_i e(rho_i)"""
    return float(np.dot(state.dxi, law.internal_energy(state.cell_rho)))


def energy_components(
    state: MassGridState, law: PressureLaw, with_interaction: bool = True
) -> EnergyComponents:
    """Kinetic, internal and (optionally) interaction parts of E(t)"""
    if with_interaction:
        energy = interaction_energy(state)
        signed, shifted = energy.signed, energy.shifted
    else:
        signed = shifted = 0.0
    return EnergyComponents(
        kinetic=kinetic_energy(state),
        internal=internal_energy_total(state, law),
        interaction=signed,
        interaction_shifted=shifted,
    )


def second_moment(state: MassGridState) -> float:
    """int x^2 rho with the lumped node masses"""
    return float(np.dot(state.node_masses, state.node_x**2))


def total_mass_from_positions(state: MassGridState) -> float:
    """sum rho_i (x_{i+1} - x_i), recomputed from the geometry"""
    return float(np.sum(state.cell_rho * state.cell_widths))


def _density_jumps(state: MassGridState) -> Tuple[FloatArray, FloatArray]:
    """Node-centred density gradient data: mean density, (d rho)^2 / dx between cell centres"""
    rho = state.cell_rho
    spacing = np.diff(state.cell_centers)
    mean = 0.5 * (rho[1:] + rho[:-1])
    return mean, np.diff(rho) ** 2 / spacing


def bd_entropy(state: MassGridState) -> float:
    """eps^2 int rho^(2 alpha - 3) rho_x^2"""
    if state.n_cells < 2:
        return 0.0
    mean, squares = _density_jumps(state)
    return float(state.epsilon**2 * np.sum(mean ** (2.0 * state.alpha - 3.0) * squares))


def bd_dissipation_rate(state: MassGridState, law: PressureLaw) -> float:
    """
    eps int P'(rho) rho^(alpha - 2) rho_x^2

    For the polytropic law this is eps kappa gamma int rho^(alpha+gamma-3) rho_x^2.
    """
    if state.n_cells < 2:
        return 0.0
    mean, squares = _density_jumps(state)
    weight = np.asarray(law.dpressure(mean)) * mean ** (state.alpha - 2.0)
    return float(state.epsilon * np.sum(weight * squares))


def boundary_densities(state: MassGridState) -> FloatArray:
    """(rho(b-), rho(b+)) read from the two boundary cells"""
    rho = state.cell_rho
    return np.array([rho[0], rho[-1]])


def bd_boundary_trace(state: MassGridState, law: PressureLaw) -> float:
    """P(rho(b+)) + P(rho(b-))"""
    return float(np.sum(law.pressure(boundary_densities(state))))


def bd_boundary_rate(state: MassGridState, law: PressureLaw) -> float:
    """(1/eps) sum over both ends of P'(rho) rho^(gamma + 1 - alpha)"""
    rho = boundary_densities(state)
    rate = np.asarray(law.dpressure(rho)) * rho ** (law.gamma + 1.0 - state.alpha)
    return float(np.sum(rate) / state.epsilon)
