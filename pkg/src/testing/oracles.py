#!/usr/bin/env python3
"""
Reference Oracles
Direct O(N^2) evaluations of the nonlocal terms, used to check the fast paths
"""

from typing import Tuple

import numpy as np
import numpy.typing as npt
from loguru import logger

from src.forces.nonlocal_terms import AlignmentKernel, potential_w
from src.solver.state import MassGridState

FloatArray = npt.NDArray[np.float64]


def direct_interaction_force(state: MassGridState) -> FloatArray:
    """
    (W' * rho)(x_j) for the piecewise-constant cell density, cell by cell

    A cell left of node j contributes -dxi_i, a cell to the right +dxi_i;
    the quadratic part contributes (x_j - xbar_i) dxi_i.
    """
    x = state.node_x
    masses = state.cell_masses
    centers = state.cell_centers
    right_edges = x[1:]
    left_of = right_edges[None, :] <= x[:, None]
    sign_part = np.where(left_of, -masses[None, :], masses[None, :])
    quadratic = (x[:, None] - centers[None, :]) * masses[None, :]
    return np.sum(sign_part + quadratic, axis=1)


def direct_interaction_energy(positions: FloatArray, masses: FloatArray) -> float:
    """1/2 sum_j sum_k W(x_j - x_k) m_j m_k"""
    x = np.asarray(positions, dtype=float)
    m = np.asarray(masses, dtype=float)
    return float(0.5 * m @ potential_w(x[:, None] - x[None, :]) @ m)


def direct_alignment(
    positions: FloatArray, velocities: FloatArray, masses: FloatArray, kernel: AlignmentKernel
) -> Tuple[FloatArray, float]:
    """V_j = sum_k w(x_j - x_k)(u_k - u_j) m_k and 1/2 sum sum w |u_j - u_k|^2 m_j m_k"""
    x = np.asarray(positions, dtype=float)
    u = np.asarray(velocities, dtype=float)
    m = np.asarray(masses, dtype=float)
    weights = kernel(x[:, None] - x[None, :])
    if np.isfinite(kernel.support_radius):
        weights = np.where(np.abs(x[:, None] - x[None, :]) <= kernel.support_radius, weights, 0.0)
    du = u[None, :] - u[:, None]
    velocity = np.sum(weights * du * m[None, :], axis=1)
    dissipation = 0.5 * float(np.sum(weights * du**2 * m[:, None] * m[None, :]))
    return velocity, dissipation


def random_state(
    rng: np.random.Generator, n_cells: int, epsilon: float = 0.1, alpha: float = 1.0
) -> MassGridState:
    """Strictly ordered random nodes with random velocities and unit total mass"""
    widths = rng.uniform(0.2, 1.0, n_cells)
    widths *= 4.0 / widths.sum()
    x = np.concatenate(([0.0], np.cumsum(widths))) - 2.0 + rng.uniform(-0.5, 0.5)
    u = rng.normal(size=n_cells + 1)
    return MassGridState(0.0, x, u, 1.0 / n_cells, epsilon, alpha)


if __name__ == "__main__":
    logger.info("🧪 Testing reference oracles...")
    demo = random_state(np.random.default_rng(0), 16)
    logger.info(f"interaction force: {direct_interaction_force(demo)}")
