#!/usr/bin/env python3
"""
Nonlocal Forces
Interaction force of W(x) = -|x| + x^2/2, Cucker-Smale alignment and linear damping
evaluated on the Lagrangian grid
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from loguru import logger
from numba import njit

from src.errors import ParameterError, StructuralError
from src.solver.state import MassGridState

FloatArray = npt.NDArray[np.float64]


class KernelKind(str, Enum):
    """Alignment weight families"""
    OFF = "off"
    CONSTANT = "constant"
    GAUSSIAN = "gaussian"
    TABLE = "table"


class InteractionKind(str, Enum):
    OFF = "off"
    NEWTONIAN_QUADRATIC = "newtonian_quadratic"


_KERNEL_CODES = {
    KernelKind.OFF: 0,
    KernelKind.CONSTANT: 1,
    KernelKind.GAUSSIAN: 2,
    KernelKind.TABLE: 3,
}


@dataclass(frozen=True)
class AlignmentKernel:
    """
    Even, bounded, non-negative communication weight.

    The weight is evaluated on |x| only, so evenness holds by construction.
    Gaussian: strength * exp(-(x/width)^2). Table: linear interpolation of
    (table_x, table_values) in |x|, zero beyond the last abscissa.
    """
    kind: KernelKind = KernelKind.OFF
    strength: float = 1.0
    width: float = 1.0
    table_x: Tuple[float, ...] = ()
    table_values: Tuple[float, ...] = ()
    cutoff: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", KernelKind(self.kind))
        object.__setattr__(self, "table_x", tuple(float(v) for v in self.table_x))
        object.__setattr__(self, "table_values", tuple(float(v) for v in self.table_values))
        if self.strength < 0.0 or not np.isfinite(self.strength):
            raise ParameterError("alignment strength must be finite and non-negative")
        if self.kind is KernelKind.GAUSSIAN and not self.width > 0.0:
            raise ParameterError("gaussian width must be positive")
        if self.kind is KernelKind.TABLE:
            xs = np.asarray(self.table_x)
            values = np.asarray(self.table_values)
            if xs.size < 2 or xs.size != values.size:
                raise ParameterError("table kernel needs matching abscissae and values (>= 2)")
            if xs[0] != 0.0 or np.any(np.diff(xs) <= 0.0):
                raise ParameterError("table abscissae must start at 0 and increase")
            if np.any(values < 0.0) or not np.all(np.isfinite(values)):
                raise ParameterError("table values must be finite and non-negative")
        if self.cutoff is not None and not self.cutoff > 0.0:
            raise ParameterError("cutoff radius must be positive")

    @property
    def enabled(self) -> bool:
        return self.kind is not KernelKind.OFF

    @property
    def support_radius(self) -> float:
        """Radius beyond which pairs are skipped (inf for the exact sum)"""
        radius = np.inf
        if self.kind is KernelKind.TABLE:
            radius = self.table_x[-1]
        if self.cutoff is not None:
            radius = min(radius, self.cutoff)
        return float(radius)

    def _packed(self) -> Tuple[int, float, float, FloatArray, FloatArray]:
        table_x = np.asarray(self.table_x if self.table_x else (0.0, 1.0), dtype=float)
        table_v = np.asarray(self.table_values if self.table_values else (0.0, 0.0), dtype=float)
        return _KERNEL_CODES[self.kind], float(self.strength), float(self.width), table_x, table_v

    def __call__(self, x: FloatArray) -> FloatArray:
        distance = np.abs(np.asarray(x, dtype=float))
        if self.kind is KernelKind.OFF:
            return np.zeros_like(distance)
        if self.kind is KernelKind.CONSTANT:
            return np.full_like(distance, self.strength)
        if self.kind is KernelKind.GAUSSIAN:
            return self.strength * np.exp(-((distance / self.width) ** 2))
        values = np.interp(distance, self.table_x, self.table_values)
        return np.where(distance >= self.table_x[-1], 0.0, values)


@dataclass(frozen=True)
class NonlocalConfig:
    """Damping coefficient lambda, alignment weight and interaction potential"""
    damping: float = 0.0
    alignment: AlignmentKernel = field(default_factory=AlignmentKernel)
    interaction: InteractionKind = InteractionKind.OFF

    def __post_init__(self) -> None:
        object.__setattr__(self, "interaction", InteractionKind(self.interaction))
        if not np.isfinite(self.damping):
            raise ParameterError("damping coefficient must be finite")

    @property
    def interaction_enabled(self) -> bool:
        return self.interaction is InteractionKind.NEWTONIAN_QUADRATIC

    @property
    def forces_off(self) -> bool:
        return self.damping == 0.0 and not self.alignment.enabled and not self.interaction_enabled


def potential_w(x: FloatArray) -> FloatArray:
    """W(x) = -|x| + x^2/2"""
    x = np.asarray(x, dtype=float)
    return -np.abs(x) + 0.5 * x**2


# ----------------------------------------------------------------------
# interaction


def interaction_force(
    positions: Sequence[float],
    cell_masses: Sequence[float],
    cell_centers: Sequence[float],
    total_mass: float,
) -> FloatArray:
    """
    dW/dx * rho at every node via prefix sums

    Args:
        positions: Node positions x_j (N+1, strictly increasing)
        cell_masses: Mass of each cell (N)
        cell_centers: Cell centres (N)
        total_mass: M

    Returns:
        M - 2 xi_j + x_j M - sum_i xbar_i dxi_i at each node
    """
    x = np.asarray(positions, dtype=float)
    masses = np.asarray(cell_masses, dtype=float)
    centers = np.asarray(cell_centers, dtype=float)
    if x.size != masses.size + 1 or centers.size != masses.size:
        raise StructuralError("need N+1 positions for N cells")
    if np.any(np.diff(x) <= 0.0):
        raise StructuralError("node positions must be strictly increasing")
    xi = np.concatenate(([0.0], np.cumsum(masses)))
    first_moment = float(np.dot(centers, masses))
    return total_mass - 2.0 * xi + x * total_mass - first_moment


def interaction_force_state(state: MassGridState) -> FloatArray:
    return interaction_force(
        state.node_x, state.cell_masses, state.cell_centers, state.total_mass
    )


@dataclass
class InteractionEnergy:
    """Signed interaction energy and the non-negative value with W + 1/2"""
    signed: float
    shifted: float


def point_mass_interaction_energy(
    positions: Sequence[float], masses: Sequence[float]
) -> InteractionEnergy:
    """
    1/2 sum_j sum_k W(x_j - x_k) m_j m_k in O(N log N)

    Args:
        positions: Point positions (any order)
        masses: Point masses
    """
    x = np.asarray(positions, dtype=float)
    m = np.asarray(masses, dtype=float)
    order = np.argsort(x, kind="stable")
    x = x[order]
    m = m[order]
    total = float(m.sum())
    centred = x - np.dot(m, x) / total if total > 0.0 else x
    mass_before = np.cumsum(m) - m
    moment_before = np.cumsum(m * centred) - m * centred
    repulsion = float(np.sum(m * (centred * mass_before - moment_before)))
    spread = float(total * np.dot(m, centred**2) - np.dot(m, centred) ** 2)
    signed = -repulsion + 0.5 * spread
    return InteractionEnergy(signed=signed, shifted=signed + 0.25 * total**2)


def interaction_energy(state: MassGridState) -> InteractionEnergy:
    """Interaction energy of the lumped node masses (the measure the node force acts on)"""
    return point_mass_interaction_energy(state.node_x, state.node_masses)


# ----------------------------------------------------------------------
# alignment


@njit(cache=True)
def _kernel_value(
    distance: float, code: int, strength: float, width: float, tx: FloatArray, tv: FloatArray
) -> float:
    if code == 1:
        return strength
    if code == 2:
        return strength * np.exp(-((distance / width) ** 2))
    if code == 3:
        if distance >= tx[-1]:
            return 0.0
        return np.interp(distance, tx, tv)
    return 0.0


@njit(cache=True)
def _alignment_pairs(
    x: FloatArray,
    u: FloatArray,
    m: FloatArray,
    code: int,
    strength: float,
    width: float,
    tx: FloatArray,
    tv: FloatArray,
    radius: float,
) -> Tuple[FloatArray, float]:
    """Symmetric pair loop over sorted points; returns V and sum w |du|^2 m m / 2"""
    n = x.size
    out = np.zeros(n)
    dissipation = 0.0
    for j in range(n):
        for k in range(j + 1, n):
            distance = x[k] - x[j]
            if distance > radius:
                break
            weight = _kernel_value(distance, code, strength, width, tx, tv)
            du = u[k] - u[j]
            out[j] += weight * du * m[k]
            out[k] -= weight * du * m[j]
            dissipation += weight * du * du * m[j] * m[k]
    return out, dissipation


def alignment_pairs(
    positions: FloatArray, velocities: FloatArray, masses: FloatArray, kernel: AlignmentKernel
) -> Tuple[FloatArray, float]:
    """Alignment V at each point and the symmetrised dissipation 1/2 sum sum w |du|^2 m m"""
    x = np.ascontiguousarray(positions, dtype=float)
    if not kernel.enabled:
        return np.zeros_like(x), 0.0
    if np.any(np.diff(x) < 0.0):
        raise StructuralError("alignment points must be sorted")
    code, strength, width, tx, tv = kernel._packed()
    return _alignment_pairs(
        x,
        np.ascontiguousarray(velocities, dtype=float),
        np.ascontiguousarray(masses, dtype=float),
        code,
        strength,
        width,
        tx,
        tv,
        kernel.support_radius,
    )


def alignment_velocity_coupling(state: MassGridState, cfg: NonlocalConfig) -> FloatArray:
    """
    Alignment acceleration V_j = sum_k w(x_j - x_k)(u_k - u_j) m_k at every node

    Args:
        state: Current grid state
        cfg: Nonlocal configuration carrying the alignment kernel

    Returns:
        V per node (zeros when alignment is off)
    """
    velocity, _ = alignment_pairs(state.node_x, state.node_u, state.node_masses, cfg.alignment)
    return velocity


def alignment_dissipation(state: MassGridState, cfg: NonlocalConfig) -> float:
    """1/2 sum_j sum_k w(x_j - x_k)|u_j - u_k|^2 m_j m_k"""
    _, dissipation = alignment_pairs(state.node_x, state.node_u, state.node_masses, cfg.alignment)
    return dissipation


# ----------------------------------------------------------------------
# combined


@dataclass
class NodeForces:
    """Per-node accelerations from the nonlocal terms"""
    damping: FloatArray
    alignment: FloatArray
    interaction: FloatArray

    @property
    def total(self) -> FloatArray:
        return self.damping + self.alignment - self.interaction


def nonlocal_forces(state: MassGridState, cfg: NonlocalConfig) -> NodeForces:
    """Evaluate every enabled nonlocal term on the nodes"""
    zeros = np.zeros_like(state.node_x)
    damping = cfg.damping * state.node_u if cfg.damping != 0.0 else zeros
    alignment = alignment_velocity_coupling(state, cfg) if cfg.alignment.enabled else zeros
    interaction = interaction_force_state(state) if cfg.interaction_enabled else zeros
    return NodeForces(damping=damping, alignment=alignment, interaction=interaction)


if __name__ == "__main__":
    logger.info("🧪 Testing nonlocal forces...")
    nodes = np.linspace(-1.0, 1.0, 9)
    demo = MassGridState(0.0, nodes, np.zeros_like(nodes), 0.25, 0.01, 1.0)
    logger.info(f"plateau force: {interaction_force_state(demo)}")
    logger.info(f"energy: {interaction_energy(demo)}")
