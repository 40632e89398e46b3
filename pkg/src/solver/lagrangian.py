#!/usr/bin/env python3
"""
Lagrangian Solver
Operator-split time integration on the fixed mass interval [0, M]: explicit
pressure and nonlocal forces, implicit density-dependent viscosity, stress-free
free boundaries
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
from loguru import logger
from scipy.linalg import solve_banded

from src.errors import CellInversionError, ParameterError, SimulationError
from src.forces.nonlocal_terms import (
    KernelKind,
    NonlocalConfig,
    alignment_pairs,
    interaction_force_state,
)
from src.initial.construction import ApproxInitialData
from src.pressure.laws import PressureLaw
from src.solver.functionals import (
    bd_boundary_rate,
    bd_dissipation_rate,
    total_mass_from_positions,
)
from src.solver.state import MassGridState
from src.solver.trajectory import Accumulators, Trajectory

FloatArray = npt.NDArray[np.float64]


class ViscousScheme(str, Enum):
    BACKWARD_EULER = "backward_euler"
    CRANK_NICOLSON = "crank_nicolson"


@dataclass
class SolverConfig:
    """Time-stepping parameters"""
    cfl: float = 0.5
    dt_max: float = 1e-2
    vacuum_floor: float = 1e-12
    viscous_scheme: ViscousScheme = ViscousScheme.BACKWARD_EULER
    t_end: float = 1.0
    n_outputs: int = 10
    output_times: Tuple[float, ...] = field(default_factory=tuple)
    strang: bool = False
    freeze_geometry: bool = False
    exponential_damping: bool = True
    max_retries: int = 8
    log_every: int = 500
    max_steps: int = 5_000_000
    end_mass_ratio: float = 1e-3
    grading: float = 1.15

    def __post_init__(self) -> None:
        self.viscous_scheme = ViscousScheme(self.viscous_scheme)
        self.output_times = tuple(float(t) for t in self.output_times)
        if not 0.0 < self.cfl <= 1.0:
            raise ParameterError(f"cfl must lie in (0, 1] (got {self.cfl})")
        if not self.dt_max > 0.0:
            raise ParameterError("dt_max must be positive")
        if not self.vacuum_floor > 0.0:
            raise ParameterError("vacuum_floor must be positive")
        if self.t_end < 0.0:
            raise ParameterError("t_end must be non-negative")
        if self.n_outputs < 1:
            raise ParameterError("n_outputs must be at least 1")
        if self.max_retries < 0:
            raise ParameterError("max_retries must be non-negative")
        if any(t < 0.0 or t > self.t_end for t in self.output_times):
            raise ParameterError("output times must lie in [0, t_end]")
        if not 0.0 < self.end_mass_ratio <= 1.0:
            raise ParameterError(f"end_mass_ratio must lie in (0, 1] (got {self.end_mass_ratio})")
        if not self.grading > 1.0:
            raise ParameterError(f"grading must exceed 1 (got {self.grading})")

    def output_schedule(self) -> FloatArray:
        """Output times after t = 0, ending at t_end"""
        if self.t_end == 0.0:
            return np.array([])
        if self.output_times:
            times = np.array([t for t in self.output_times if t > 0.0] + [self.t_end])
        else:
            times = np.linspace(0.0, self.t_end, self.n_outputs + 1)[1:]
        return np.unique(times)


@dataclass
class StepTerms:
    """Contributions of one accepted step to the accumulators"""
    dt: float
    viscous: float
    alignment: float
    damping: float
    momentum_weight: float
    alignment_momentum: float
    rejections: int


def viscous_coefficients(state: MassGridState, vacuum_floor: float) -> FloatArray:
    """D_i = eps mu(rho_i) rho_i / dxi, so the viscous stress is D_i (u_{i+1} - u_i)"""
    rho = state.cell_rho
    mu = np.maximum(rho, vacuum_floor) ** state.alpha
    return state.epsilon * mu * rho / state.dxi


def _face_difference(face_values: FloatArray) -> FloatArray:
    """Node divergence of a cell-face quantity with zero ghost faces"""
    return np.diff(np.concatenate(([0.0], face_values, [0.0])))


def _force_rate(cfg: NonlocalConfig, total_mass: float, exponential_damping: bool) -> float:
    rate = 0.0
    if cfg.damping != 0.0 and not exponential_damping:
        rate += abs(cfg.damping)
    kernel = cfg.alignment
    if kernel.enabled:
        peak = max(kernel.table_values) if kernel.kind is KernelKind.TABLE else kernel.strength
        rate += peak * total_mass
    if cfg.interaction_enabled:
        rate += np.sqrt(total_mass)
    return float(rate)


def stable_dt(
    state: MassGridState,
    law: PressureLaw,
    solver: SolverConfig,
    cfg: Optional[NonlocalConfig] = None,
) -> float:
    """
    Acoustic CFL step of the explicit stage

    Args:
        state: Current state
        law: Pressure law
        solver: Supplies cfl, dt_max and the vacuum floor
        cfg: When given, explicit nonlocal rates cap the step as well

    Returns:
        cfl * min_i dxi / (rho_i c_i + rho_i |u_{i+1} - u_i|), capped by dt_max
    """
    rho = state.cell_rho
    sound = np.sqrt(np.asarray(law.dpressure(np.maximum(rho, solver.vacuum_floor))))
    rates = rho * (sound + np.abs(np.diff(state.node_u))) / state.dxi
    rate = float(np.max(rates))
    if cfg is not None:
        rate = max(rate, _force_rate(cfg, state.total_mass, solver.exponential_damping))
    if not rate > 0.0:
        return solver.dt_max
    return float(min(solver.dt_max, solver.cfl / rate))


class LagrangianSolver:
    """Advances MassGridState with the split explicit/implicit scheme"""

    def __init__(self, law: PressureLaw, forces: NonlocalConfig, solver: SolverConfig):
        """
        Initialize the solver

        Args:
            law: Pressure law
            forces: Nonlocal force configuration
            solver: Time-stepping parameters
        """
        self.law = law
        self.forces = forces
        self.solver = solver
        logger.debug(
            f"⚙️ Solver ready: scheme={solver.viscous_scheme.value}, cfl={solver.cfl}, "
            f"strang={solver.strang}, frozen={solver.freeze_geometry}"
        )

    def stable_dt(self, state: MassGridState) -> float:
        return stable_dt(state, self.law, self.solver, self.forces)

    # ------------------------------------------------------------------
    # stages

    def _accelerations(
        self, state: MassGridState, u: FloatArray
    ) -> Tuple[FloatArray, float, float]:
        """Explicit accelerations, alignment dissipation rate and |sum m V|"""
        current = MassGridState(state.time, state.node_x, u, state.dxi, state.epsilon, state.alpha)
        masses = current.node_masses
        pressure = np.asarray(self.law.pressure(current.cell_rho))
        accel = -_face_difference(pressure) / masses

        dissipation = 0.0
        neutrality = 0.0
        if self.forces.alignment.enabled:
            velocity, dissipation = alignment_pairs(
                current.node_x, u, masses, self.forces.alignment
            )
            accel = accel + velocity
            neutrality = abs(float(np.dot(masses, velocity)))
        if self.forces.interaction_enabled:
            accel = accel - interaction_force_state(current)
        if self.forces.damping != 0.0 and not self.solver.exponential_damping:
            accel = accel + self.forces.damping * u
        return accel, float(dissipation), neutrality

    def _damp(self, u: FloatArray, dt: float) -> FloatArray:
        if self.forces.damping == 0.0 or not self.solver.exponential_damping:
            return u
        return u * np.exp(self.forces.damping * dt)

    def _viscous(
        self, masses: FloatArray, coeff: FloatArray, u_star: FloatArray, dt: float
    ) -> FloatArray:
        """Tridiagonal solve of m du/dt = div(D du) with zero stress on the ghost faces"""
        crank_nicolson = self.solver.viscous_scheme is ViscousScheme.CRANK_NICOLSON
        weight = 0.5 * dt if crank_nicolson else dt
        diagonal = masses.copy()
        diagonal[:-1] += weight * coeff
        diagonal[1:] += weight * coeff
        bands = np.zeros((3, masses.size))
        bands[0, 1:] = -weight * coeff
        bands[1] = diagonal
        bands[2, :-1] = -weight * coeff
        rhs = masses * u_star
        if crank_nicolson:
            rhs = rhs + weight * _face_difference(coeff * np.diff(u_star))
        return solve_banded((1, 1), bands, rhs)

    def _advance(
        self, state: MassGridState, dt: float
    ) -> Optional[Tuple[MassGridState, StepTerms]]:
        masses = state.node_masses
        coeff = viscous_coefficients(state, self.solver.vacuum_floor)
        u_old = state.node_u

        if self.solver.strang:
            accel, dissipation, neutrality = self._accelerations(state, u_old)
            u_half = self._damp(u_old + 0.5 * dt * accel, 0.5 * dt)
            u_visc = self._viscous(masses, coeff, u_half, dt)
            accel_late, dissipation_late, neutrality_late = self._accelerations(state, u_visc)
            u_new = self._damp(u_visc + 0.5 * dt * accel_late, 0.5 * dt)
            dissipation = 0.5 * (dissipation + dissipation_late)
            neutrality = max(neutrality, neutrality_late)
            u_star = u_half
        else:
            accel, dissipation, neutrality = self._accelerations(state, u_old)
            u_star = self._damp(u_old + dt * accel, dt)
            u_new = self._viscous(masses, coeff, u_star, dt)

        if self.solver.viscous_scheme is ViscousScheme.CRANK_NICOLSON:
            u_visc_eval = 0.5 * (u_star + u_new)
        else:
            u_visc_eval = u_new
        x_new = state.node_x if self.solver.freeze_geometry else state.node_x + dt * u_new
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(u_new))):
            return None
        if np.any(np.diff(x_new) <= 0.0):
            return None

        new_state = MassGridState(
            state.time + dt, x_new.copy(), u_new, state.dxi, state.epsilon, state.alpha
        )
        kinetic_weight = float(np.dot(masses, u_new**2))
        terms = StepTerms(
            dt=dt,
            viscous=float(dt * np.sum(coeff * np.diff(u_visc_eval) ** 2)),
            alignment=dt * dissipation,
            damping=-self.forces.damping
            * dt
            * 0.5
            * (float(np.dot(masses, u_old**2)) + kinetic_weight),
            momentum_weight=dt * kinetic_weight,
            alignment_momentum=neutrality,
            rejections=0,
        )
        return new_state, terms

    # ------------------------------------------------------------------
    # public

    def step(self, state: MassGridState, dt: float) -> Tuple[MassGridState, StepTerms]:
        """
        One split step, halving dt on cell inversion

        Args:
            state: Valid current state
            dt: Proposed step

        Returns:
            (new state, step contributions)

        Raises:
            CellInversionError: after max_retries halvings
        """
        trial = dt
        for attempt in range(self.solver.max_retries + 1):
            result = self._advance(state, trial)
            if result is not None:
                new_state, terms = result
                terms.rejections = attempt
                return new_state, terms
            if attempt < self.solver.max_retries:
                logger.warning(
                    f"⚠️ Cell inversion at t={state.time:.6g}, "
                    f"retrying with dt={0.5 * trial:.3g}"
                )
                trial *= 0.5
        raise CellInversionError(state.time, trial, self.solver.max_retries)

    def _accumulate(self, totals: Accumulators, terms: StepTerms, state: MassGridState) -> None:
        totals.viscous += terms.viscous
        totals.alignment += terms.alignment
        totals.damping += terms.damping
        totals.momentum_weight += terms.momentum_weight
        totals.bd_interior += terms.dt * bd_dissipation_rate(state, self.law)
        totals.bd_boundary += terms.dt * bd_boundary_rate(state, self.law)
        totals.steps += 1
        totals.rejections += terms.rejections
        totals.max_alignment_momentum = max(totals.max_alignment_momentum, terms.alignment_momentum)
        defect = abs(total_mass_from_positions(state) - state.total_mass) / state.total_mass
        totals.max_mass_defect = max(totals.max_mass_defect, defect)

    def run(
        self, initial: MassGridState, halfwidth: Optional[float] = None, label: str = "run"
    ) -> Trajectory:
        """
        Integrate to t_end, recording a snapshot at every output time

        Args:
            initial: Starting state (t = 0 snapshot)
            halfwidth: Half-width of the initial support, the scale of the free-boundary margin
            label: Name carried into the trajectory manifest

        Returns:
            Trajectory with states and accumulators at each output time
        """
        state = initial.copy()
        state.validate()
        b = halfwidth if halfwidth is not None else max(-state.left_boundary, state.right_boundary)
        trajectory = Trajectory(halfwidth=float(b), label=label)
        totals = Accumulators()
        trajectory.record(state, totals)

        schedule = self.solver.output_schedule()
        logger.info(
            f"⚙️ Running '{label}': N={state.n_cells}, eps={state.epsilon:g}, "
            f"t_end={self.solver.t_end:g}, {schedule.size} outputs"
        )
        for target in schedule:
            tolerance = 1e-12 * max(1.0, target)
            while state.time < target - tolerance:
                dt = min(self.stable_dt(state), target - state.time)
                state, terms = self.step(state, dt)
                self._accumulate(totals, terms, state)
                if totals.steps % self.solver.log_every == 0:
                    logger.debug(
                        f"step {totals.steps}: t={state.time:.6g}, dt={terms.dt:.3g}, "
                        f"b=({state.left_boundary:.4g}, {state.right_boundary:.4g})"
                    )
                if totals.steps >= self.solver.max_steps:
                    raise SimulationError(f"step limit {self.solver.max_steps} reached")
            state.time = float(target)
            trajectory.record(state, totals)
            logger.info(
                f"📊 t={target:.4g}: steps={totals.steps}, "
                f"dissipation={totals.dissipation:.6g}, "
                f"rho_b=({state.cell_rho[0]:.4g}, {state.cell_rho[-1]:.4g})"
            )
        if totals.rejections:
            logger.warning(f"⚠️ {totals.rejections} rejected steps in '{label}'")
        logger.success(f"✅ Run '{label}' finished after {totals.steps} steps")
        return trajectory


def step(
    state: MassGridState, law: PressureLaw, cfg: NonlocalConfig, solver: SolverConfig
) -> MassGridState:
    """Single step at the stable dt"""
    integrator = LagrangianSolver(law, cfg, solver)
    new_state, _ = integrator.step(state, integrator.stable_dt(state))
    return new_state


def run(
    initial: Union[ApproxInitialData, MassGridState],
    law: PressureLaw,
    cfg: NonlocalConfig,
    solver: SolverConfig,
    n_cells: Optional[int] = None,
    label: str = "run",
) -> Trajectory:
    """
    Integrate constructed initial data (or a ready state) to solver.t_end

    Args:
        initial: ApproxInitialData (needs n_cells) or a MassGridState
        n_cells: Number of cells for ApproxInitialData, graded by solver.end_mass_ratio

    Returns:
        Trajectory
    """
    if isinstance(initial, ApproxInitialData):
        if n_cells is None:
            raise ParameterError("n_cells is required to discretise constructed initial data")
        state = initial.to_state(n_cells, solver.end_mass_ratio, solver.grading)
        halfwidth: Optional[float] = initial.extent
    else:
        state = initial
        halfwidth = None
    return LagrangianSolver(law, cfg, solver).run(state, halfwidth=halfwidth, label=label)


def free_boundary_margin(trajectory: Trajectory, b: Optional[float] = None) -> float:
    """min over the snapshots of min(b+(t), -b-(t)) / b"""
    b = trajectory.halfwidth if b is None else b
    if not b > 0.0:
        raise ParameterError("domain half-width must be positive")
    margins = [min(state.right_boundary, -state.left_boundary) / b for state in trajectory.states]
    return float(min(margins))


if __name__ == "__main__":
    logger.info("🧪 Testing Lagrangian solver...")
    nodes = np.linspace(-1.0, 1.0, 65)
    demo = MassGridState(0.0, nodes, np.zeros_like(nodes), 2.0 / 64, 0.1, 1.0)
    law = PressureLaw(gamma=2.0)
    config = SolverConfig(t_end=0.1, n_outputs=2)
    result = LagrangianSolver(law, NonlocalConfig(), config).run(demo)
    final = result.final
    logger.info(f"boundaries at t=0.1: {final.left_boundary:.4f}, {final.right_boundary:.4f}")
