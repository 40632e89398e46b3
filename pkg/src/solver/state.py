#!/usr/bin/env python3
"""
Mass Grid State
Staggered Lagrangian discretisation: cell densities on a fixed mass grid,
node positions and velocities at the cell edges
"""

from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np
import numpy.typing as npt
from scipy.integrate import cumulative_trapezoid

from src.errors import StructuralError, VacuumError

FloatArray = npt.NDArray[np.float64]


@dataclass
class MassGridState:
    """
    Discrete state on the mass interval [0, M].

    Cell i spans nodes i and i+1 and carries the fixed mass dxi[i]; its density
    is always recomputed from the node positions, so mass is exact. A scalar
    dxi is broadcast to every cell.
    """
    time: float
    node_x: FloatArray
    node_u: FloatArray
    dxi: Union[float, FloatArray]
    epsilon: float
    alpha: float

    def __post_init__(self) -> None:
        self.node_x = np.asarray(self.node_x, dtype=float)
        self.node_u = np.asarray(self.node_u, dtype=float)
        if self.node_x.shape != self.node_u.shape or self.node_x.ndim != 1:
            raise StructuralError("node_x and node_u must be 1D arrays of equal length")
        if self.node_x.size < 2:
            raise StructuralError("need at least one cell")
        dxi = np.asarray(self.dxi, dtype=float)
        if dxi.ndim == 0:
            dxi = np.full(self.node_x.size - 1, float(dxi))
        if dxi.shape != (self.node_x.size - 1,):
            raise StructuralError("need one cell mass per cell")
        if not np.all(dxi > 0.0):
            raise StructuralError("cell mass must be positive")
        self.dxi = dxi

    @property
    def n_cells(self) -> int:
        return int(self.node_x.size - 1)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.dxi))

    @property
    def cell_widths(self) -> FloatArray:
        return np.diff(self.node_x)

    @property
    def cell_rho(self) -> FloatArray:
        return self.dxi / self.cell_widths

    @property
    def cell_centers(self) -> FloatArray:
        return 0.5 * (self.node_x[:-1] + self.node_x[1:])

    @property
    def cell_u(self) -> FloatArray:
        return 0.5 * (self.node_u[:-1] + self.node_u[1:])

    @property
    def cell_masses(self) -> FloatArray:
        return self.dxi.copy()

    @property
    def node_masses(self) -> FloatArray:
        """Lumped node masses: half of each neighbouring cell"""
        return 0.5 * (np.append(self.dxi, 0.0) + np.insert(self.dxi, 0, 0.0))

    @property
    def node_xi(self) -> FloatArray:
        """Cumulative mass coordinate of each node"""
        return np.concatenate(([0.0], np.cumsum(self.dxi)))

    @property
    def left_boundary(self) -> float:
        return float(self.node_x[0])

    @property
    def right_boundary(self) -> float:
        return float(self.node_x[-1])

    def is_ordered(self) -> bool:
        return bool(np.all(np.diff(self.node_x) > 0.0))

    def validate(self) -> None:
        if not self.is_ordered():
            raise StructuralError(f"node positions not strictly increasing at t={self.time:.6g}")
        if not (np.all(np.isfinite(self.node_x)) and np.all(np.isfinite(self.node_u))):
            raise StructuralError(f"non-finite state at t={self.time:.6g}")

    def copy(self) -> "MassGridState":
        return replace(
            self, node_x=self.node_x.copy(), node_u=self.node_u.copy(), dxi=self.dxi.copy()
        )


def graded_cell_masses(
    total_mass: float, n_cells: int, end_ratio: float = 1.0, growth: float = 1.15
) -> FloatArray:
    """
    Cell masses that shrink geometrically toward both free boundaries

    The outermost cell carries about end_ratio times an interior cell and each
    step inward grows by the factor growth; at most a quarter of the cells on
    each side are graded. end_ratio = 1 gives equal masses.

    Args:
        total_mass: Sum of the returned masses
        n_cells: Number of cells N
        end_ratio: Boundary to interior mass ratio in (0, 1]
        growth: Ratio of neighbouring graded cells, > 1

    Returns:
        Array of N positive masses summing to total_mass, symmetric about the middle
    """
    if n_cells < 1:
        raise StructuralError("need at least one cell")
    if not 0.0 < end_ratio <= 1.0:
        raise StructuralError(f"end mass ratio must lie in (0, 1] (got {end_ratio})")
    if not growth > 1.0:
        raise StructuralError(f"grading factor must exceed 1 (got {growth})")
    weights = np.ones(n_cells)
    graded = min(int(np.ceil(np.log(1.0 / end_ratio) / np.log(growth))), n_cells // 4)
    if graded > 0:
        ramp = growth ** -np.arange(graded, 0, -1, dtype=float)
        weights[:graded] = ramp
        weights[n_cells - graded :] = ramp[::-1]
    return total_mass * weights / np.sum(weights)


def state_from_profile(
    x: FloatArray,
    rho: FloatArray,
    u: FloatArray,
    n_cells: int,
    epsilon: float,
    alpha: float,
    time: float = 0.0,
    cell_masses: Optional[FloatArray] = None,
) -> MassGridState:
    """
    Place N cells of prescribed mass on a sampled density profile

    Args:
        x: Increasing sample positions; x[0] and x[-1] become the free boundaries
        rho: Density samples (non-negative)
        u: Velocity samples
        n_cells: Number of cells N
        cell_masses: Relative cell masses (rescaled to the profile mass);
            equal masses when omitted

    Returns:
        MassGridState whose node positions invert the cumulative mass
    """
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(np.diff(x) <= 0.0):
        raise StructuralError("profile abscissae must be strictly increasing")
    if n_cells < 1:
        raise StructuralError("need at least one cell")
    cumulative = cumulative_trapezoid(rho, x, initial=0.0)
    total = float(cumulative[-1])
    if not total > 0.0:
        raise VacuumError("profile carries no mass")

    if cell_masses is None:
        dxi = np.full(n_cells, total / n_cells)
    else:
        weights = np.asarray(cell_masses, dtype=float)
        if weights.shape != (n_cells,) or not np.all(weights > 0.0):
            raise StructuralError("need one positive mass per cell")
        dxi = total * weights / np.sum(weights)
    levels = np.cumsum(dxi)[:-1]
    # invert only where the cumulative mass strictly grows
    increasing, first = np.unique(cumulative, return_index=True)
    interior = np.interp(levels, increasing, x[first])
    node_x = np.concatenate(([x[0]], interior, [x[-1]]))
    node_u = np.interp(node_x, x, np.asarray(u, dtype=float))
    state = MassGridState(time, node_x, node_u, dxi, epsilon, alpha)
    state.validate()
    return state
