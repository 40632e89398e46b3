#!/usr/bin/env python3
"""
Estimate Diagnostics
Post-processing of a trajectory into the energy, moment, boundary, BD-entropy,
integrability and convergence series
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from loguru import logger
from scipy import integrate

from src.diagnostics.checks import CheckResult, at_least, at_most
from src.errors import ParameterError, StructuralError
from src.forces.nonlocal_terms import NonlocalConfig, alignment_pairs
from src.pressure.laws import PressureLaw
from src.solver.functionals import (
    bd_boundary_trace,
    bd_entropy,
    boundary_densities,
    energy_components,
    second_moment,
    total_mass_from_positions,
)
from src.solver.state import MassGridState
from src.solver.trajectory import Trajectory

FloatArray = npt.NDArray[np.float64]
Series = Dict[str, FloatArray]


@dataclass(frozen=True)
class Window:
    """Spatial window K = [left, right]"""
    left: float
    right: float

    def __post_init__(self) -> None:
        if not self.right > self.left:
            raise ParameterError(
                f"window must have positive length (got [{self.left}, {self.right}])"
            )

    @property
    def width(self) -> float:
        return self.right - self.left

    def contains(self, x: FloatArray) -> npt.NDArray[np.bool_]:
        return (x >= self.left) & (x <= self.right)

    def overlap(self, left: FloatArray, right: FloatArray) -> FloatArray:
        """Length of [left, right] inside K"""
        return np.clip(np.minimum(right, self.right) - np.maximum(left, self.left), 0.0, None)


def default_window(support: Tuple[float, float]) -> Window:
    """Central half of the initial support"""
    center = 0.5 * (support[0] + support[1])
    quarter = 0.25 * (support[1] - support[0])
    return Window(center - quarter, center + quarter)


def _time_integral(values: Sequence[float], times: FloatArray) -> float:
    if len(values) < 2:
        return 0.0
    return float(integrate.trapezoid(np.asarray(values), times))


def node_density(state: MassGridState) -> FloatArray:
    """Cell densities averaged onto the nodes (boundary nodes take their cell)"""
    rho = state.cell_rho
    return np.concatenate(([rho[0]], 0.5 * (rho[1:] + rho[:-1]), [rho[-1]]))


# ----------------------------------------------------------------------
# energy and moments


def energy_budget(trajectory: Trajectory, law: PressureLaw, cfg: NonlocalConfig) -> Series:
    """
    Energy components, cumulative dissipations and the signed balance residual

    Args:
        trajectory: Solver output (accumulators carry the dissipation integrals)
        law: Pressure law
        cfg: Nonlocal configuration (interaction energy only when enabled)

    Returns:
        Columns time, kinetic, internal, interaction, interaction_shifted, total,
        viscous, alignment, damping, residual
    """
    if len(trajectory) < 1:
        raise StructuralError("energy budget needs at least one snapshot")
    rows: Dict[str, List[float]] = {
        name: []
        for name in (
            "kinetic",
            "internal",
            "interaction",
            "interaction_shifted",
            "total",
            "viscous",
            "alignment",
            "damping",
            "residual",
        )
    }
    initial_total = None
    for state, totals in zip(trajectory.states, trajectory.accumulators):
        parts = energy_components(state, law, with_interaction=cfg.interaction_enabled)
        if initial_total is None:
            initial_total = parts.total
        rows["kinetic"].append(parts.kinetic)
        rows["internal"].append(parts.internal)
        rows["interaction"].append(parts.interaction)
        rows["interaction_shifted"].append(parts.interaction_shifted)
        rows["total"].append(parts.total)
        rows["viscous"].append(totals.viscous)
        rows["alignment"].append(totals.alignment)
        rows["damping"].append(totals.damping)
        rows["residual"].append(parts.total + totals.dissipation - initial_total)
    series = {"time": trajectory.times}
    series.update({name: np.asarray(values) for name, values in rows.items()})
    return series


def moment_series(trajectory: Trajectory) -> Series:
    """Mass recomputed from positions, second moment and cumulative int int rho u^2"""
    return {
        "time": trajectory.times,
        "mass": np.array([total_mass_from_positions(s) for s in trajectory.states]),
        "second_moment": np.array([second_moment(s) for s in trajectory.states]),
        "momentum_weight": np.array([a.momentum_weight for a in trajectory.accumulators]),
    }


def second_moment_check(moments: Series, slack: float = 1e-3) -> CheckResult:
    """M2(t) <= (M2(0) + int_0^t int rho u^2) e^t (1 + slack) at every output time"""
    times = moments["time"]
    bound = (moments["second_moment"][0] + moments["momentum_weight"]) * np.exp(times)
    ratio = float(np.max(moments["second_moment"] / (bound * (1.0 + slack))))
    return at_most("second_moment_gronwall", ratio, 1.0)


def energy_checks(
    energy: Series, tolerance: float, forces_off: bool, initial_energy: Optional[float] = None
) -> List[CheckResult]:
    """
    Relative balance residual and, without forces, monotone decay

    Residuals are divided by E0 written with W + 1/2 in place of W, a
    non-negative scale that differs from E0 by the constant M^2/4. E0 is the
    constructed initial energy when given (its gap to the discrete E(0) is
    flagged as well), else the discrete E(0).

    Args:
        energy: energy_budget series
        tolerance: Relative threshold shared by every energy flag
        forces_off: Also require E(t) to be non-increasing
        initial_energy: Constructed E0 over the same terms as the discrete energy

    Returns:
        energy_balance, optional energy_initial_gap and energy_nonincreasing
    """
    shift = float(energy["interaction_shifted"][0] - energy["interaction"][0])
    discrete = float(energy["total"][0])
    reference = discrete if initial_energy is None else float(initial_energy)
    scale = max(reference + shift, 1e-300)
    checks = [
        at_most(
            "energy_balance",
            float(np.max(np.abs(energy["residual"]))) / scale,
            tolerance,
            detail="max |E(t) + dissipation - E(0)| / E0 (shifted interaction)",
        )
    ]
    if initial_energy is not None:
        checks.append(
            at_most(
                "energy_initial_gap",
                abs(discrete - reference) / scale,
                tolerance,
                detail="|E(0) - E0| / E0 (shifted interaction)",
            )
        )
    if forces_off and energy["total"].size > 1:
        increase = float(np.max(np.diff(energy["total"]), initial=0.0))
        checks.append(at_most("energy_nonincreasing", max(increase, 0.0) / scale, tolerance))
    return checks


# ----------------------------------------------------------------------
# boundary density


def boundary_reference(
    rho_boundary: float,
    law: PressureLaw,
    alpha: float,
    epsilon: float,
    times: FloatArray,
    coefficient: Optional[float] = None,
    exponent: Optional[float] = None,
) -> FloatArray:
    """
    rho0(b) (1 + C (g - alpha)/eps rho0(b)^(g - alpha) t)^(-1/(g - alpha))

    C and g default to kappa and gamma of the law; the general-law lower
    bracket passes its own constant.
    """
    kappa = law.kappa if coefficient is None else coefficient
    gamma = law.gamma if exponent is None else exponent
    power = gamma - alpha
    if not power > 0.0:
        raise ParameterError("boundary decay needs gamma > alpha")
    growth = 1.0 + kappa * power / epsilon * rho_boundary**power * np.asarray(times, dtype=float)
    return rho_boundary * growth ** (-1.0 / power)


def bracket_constant(law: PressureLaw, rho_boundary: float) -> float:
    """max P(rho)/rho^gamma1 on (0, rho_boundary]"""
    if law.is_polytropic or rho_boundary <= law.rho_star_low:
        return float(law.kappa)
    grid = np.geomspace(rho_boundary * 1e-12, rho_boundary, 400)
    return float(np.max(np.asarray(law.pressure(grid)) / grid**law.gamma))


def boundary_density_check(
    trajectory: Trajectory,
    law: PressureLaw,
    alpha: float,
    epsilon: float,
    tolerance: float = 0.02,
    bracket_slack: float = 1e-6,
) -> Tuple[Series, List[CheckResult]]:
    """
    Boundary-cell densities against the closed-form decay (polytropic) or its bracket

    Returns:
        (series, checks): series columns rho_minus, rho_plus, reference_minus,
        reference_plus, b_minus, b_plus
    """
    times = trajectory.times
    densities = np.array([boundary_densities(state) for state in trajectory.states])
    start = densities[0]
    if law.is_polytropic:
        references = [boundary_reference(start[i], law, alpha, epsilon, times) for i in (0, 1)]
    else:
        references = [
            boundary_reference(
                start[i], law, alpha, epsilon, times, coefficient=bracket_constant(law, start[i])
            )
            for i in (0, 1)
        ]
    series = {
        "time": times,
        "rho_minus": densities[:, 0],
        "rho_plus": densities[:, 1],
        "reference_minus": references[0],
        "reference_plus": references[1],
        "b_minus": np.array([state.left_boundary for state in trajectory.states]),
        "b_plus": np.array([state.right_boundary for state in trajectory.states]),
    }

    upper = float(np.max(densities / start[None, :]))
    checks = [at_most("boundary_density_upper", upper, 1.0 + bracket_slack, "rho(t,b) <= rho0(b)")]
    if law.is_polytropic:
        relative = np.abs(densities - np.column_stack(references)) / np.column_stack(references)
        checks.append(
            at_most("boundary_density_closed_form", float(np.max(relative)), tolerance)
        )
    else:
        lower = float(np.min(densities / np.column_stack(references)))
        checks.append(at_least("boundary_density_lower", lower, 1.0 - bracket_slack))
    return series, checks


# ----------------------------------------------------------------------
# BD entropy


def bd_series(trajectory: Trajectory, law: PressureLaw) -> Series:
    """BD functional, its cumulative dissipation and the boundary contributions"""
    return {
        "time": trajectory.times,
        "bd_entropy": np.array([bd_entropy(state) for state in trajectory.states]),
        "bd_dissipation": np.array([a.bd_interior for a in trajectory.accumulators]),
        "boundary_trace": np.array([bd_boundary_trace(s, law) for s in trajectory.states]),
        "boundary_dissipation": np.array([a.bd_boundary for a in trajectory.accumulators]),
    }


def bd_checks(series: Series) -> List[CheckResult]:
    finite = all(np.all(np.isfinite(values)) for values in series.values())
    steps = np.diff(series["bd_dissipation"])
    worst_drop = float(-np.min(steps, initial=0.0))
    return [
        CheckResult("bd_entropy_finite", float(finite), 1.0, finite),
        at_most("bd_dissipation_nondecreasing", max(worst_drop, 0.0), 0.0),
    ]


# ----------------------------------------------------------------------
# windows


def check_window(trajectory: Trajectory, window: Window) -> None:
    for state in trajectory.states:
        if window.left <= state.left_boundary or window.right >= state.right_boundary:
            raise StructuralError(
                f"window [{window.left:.4g}, {window.right:.4g}] leaves the domain "
                f"[{state.left_boundary:.4g}, {state.right_boundary:.4g}] at t={state.time:.4g}"
            )


def window_integrability(
    trajectory: Trajectory, law: PressureLaw, window: Window, t_final: Optional[float] = None
) -> Tuple[float, float]:
    """
    Space-time integrals over K x [0, T]

    Returns:
        (int int rho^(gamma+1) or rho P(rho), int int rho|u|^3 + rho^(gamma+theta))
    """
    check_window(trajectory, window)
    times = trajectory.times
    keep = times <= (times[-1] if t_final is None else t_final) + 1e-14
    gamma, theta = (law.gamma, law.theta) if law.is_polytropic else (law.gamma2, law.theta2)
    density_terms = []
    velocity_terms = []
    for state in [s for s, k in zip(trajectory.states, keep) if k]:
        rho = state.cell_rho
        length = window.overlap(state.node_x[:-1], state.node_x[1:])
        if law.is_polytropic:
            density = rho ** (law.gamma + 1.0)
        else:
            density = rho * np.asarray(law.pressure(rho))
        cubes = 0.5 * (np.abs(state.node_u[:-1]) ** 3 + np.abs(state.node_u[1:]) ** 3)
        density_terms.append(float(np.sum(density * length)))
        velocity_terms.append(float(np.sum((rho * cubes + rho ** (gamma + theta)) * length)))
    return _time_integral(density_terms, times[keep]), _time_integral(velocity_terms, times[keep])


def budget_integrals(trajectory: Trajectory, law: PressureLaw, window: Window) -> Dict[str, float]:
    """
    Dissipation budgets over K x [0, T]

    viscous: eps int int rho^alpha u_x^2; bd: eps int int P'(rho) rho^(alpha-2) rho_x^2;
    fractional: eps^(4/3) int int (rho^alpha |u_x|)^(4/3).
    """
    check_window(trajectory, window)
    viscous, bd, fractional = [], [], []
    for state in trajectory.states:
        eps, alpha = state.epsilon, state.alpha
        rho = state.cell_rho
        length = window.overlap(state.node_x[:-1], state.node_x[1:])
        u_x = np.diff(state.node_u) / state.cell_widths
        viscous.append(float(eps * np.sum(rho**alpha * u_x**2 * length)))
        flux = (rho**alpha * np.abs(u_x)) ** (4.0 / 3.0)
        fractional.append(float(eps ** (4.0 / 3.0) * np.sum(flux * length)))
        if state.n_cells > 1:
            mean = 0.5 * (rho[1:] + rho[:-1])
            spacing = np.diff(state.cell_centers)
            inside = window.contains(state.node_x[1:-1])
            weight = np.asarray(law.dpressure(mean)) * mean ** (alpha - 2.0)
            bd.append(float(eps * np.sum((weight * np.diff(rho) ** 2 / spacing)[inside])))
        else:
            bd.append(0.0)
    times = trajectory.times
    return {
        "viscous": _time_integral(viscous, times),
        "bd": _time_integral(bd, times),
        "fractional": _time_integral(fractional, times),
    }


# ----------------------------------------------------------------------
# alignment identities


def alignment_identity_check(
    trajectory: Trajectory, cfg: NonlocalConfig, tolerance: float = 1e-10
) -> List[CheckResult]:
    """
    Momentum neutrality sum m V = 0 and -sum m u V = 1/2 sum sum w |du|^2 m m on every snapshot
    """
    if not cfg.alignment.enabled:
        return []
    neutrality = 0.0
    symmetrisation = 0.0
    for state in trajectory.states:
        masses = state.node_masses
        velocity, dissipation = alignment_pairs(state.node_x, state.node_u, masses, cfg.alignment)
        scale = max(float(np.dot(masses, np.abs(velocity))), 1.0)
        neutrality = max(neutrality, abs(float(np.dot(masses, velocity))) / scale)
        power = -float(np.dot(masses * state.node_u, velocity))
        symmetrisation = max(symmetrisation, abs(power - dissipation) / max(abs(dissipation), 1.0))
    stepwise = max(a.max_alignment_momentum for a in trajectory.accumulators)
    return [
        at_most("alignment_neutrality", neutrality, tolerance),
        at_most("alignment_neutrality_steps", stepwise, tolerance),
        at_most("alignment_symmetrisation", symmetrisation, tolerance),
    ]


# ----------------------------------------------------------------------
# convergence


@dataclass
class ConvergenceMetric:
    """Distances of (rho, m) between two trajectories on K at the shared output times"""
    times: FloatArray
    l1_rho: FloatArray
    l1_m: FloatArray
    lq_rho: FloatArray
    lq_m: FloatArray
    q: float

    @property
    def sup_l1(self) -> float:
        return float(max(np.max(self.l1_rho), np.max(self.l1_m))) if self.times.size else 0.0

    def to_dict(self) -> Dict[str, object]:
        return {
            "times": self.times.tolist(),
            "l1_rho": self.l1_rho.tolist(),
            "l1_m": self.l1_m.tolist(),
            "lq_rho": self.lq_rho.tolist(),
            "lq_m": self.lq_m.tolist(),
            "q": self.q,
            "sup_l1": self.sup_l1,
        }


def resample(state: MassGridState, grid: FloatArray) -> Tuple[FloatArray, FloatArray]:
    """Piecewise-linear (rho, m) on an Eulerian grid, zero outside the domain"""
    rho = node_density(state)
    rho_x = np.interp(grid, state.node_x, rho, left=0.0, right=0.0)
    m_x = np.interp(grid, state.node_x, rho * state.node_u, left=0.0, right=0.0)
    return rho_x, m_x


def convergence_metric(
    first: Trajectory,
    second: Trajectory,
    window: Window,
    times: Optional[Sequence[float]] = None,
    q: float = 2.0,
    points: int = 4096,
) -> ConvergenceMetric:
    """
    L1 and Lq distances of density and momentum on K

    Raises:
        StructuralError: if the trajectories have different output times
    """
    if first.times.shape != second.times.shape or not np.allclose(
        first.times, second.times, rtol=1e-12, atol=1e-14
    ):
        raise StructuralError("trajectories do not share output times")
    selected = np.arange(len(first)) if times is None else np.array(
        [int(np.argmin(np.abs(first.times - t))) for t in times]
    )
    grid = np.linspace(window.left, window.right, points)
    l1_rho, l1_m, lq_rho, lq_m = [], [], [], []
    for index in selected:
        rho_a, m_a = resample(first.states[index], grid)
        rho_b, m_b = resample(second.states[index], grid)
        for store, difference, power in (
            (l1_rho, rho_a - rho_b, 1.0),
            (l1_m, m_a - m_b, 1.0),
            (lq_rho, rho_a - rho_b, q),
            (lq_m, m_a - m_b, q),
        ):
            integral = integrate.trapezoid(np.abs(difference) ** power, grid)
            store.append(float(integral ** (1.0 / power)))
    return ConvergenceMetric(
        times=first.times[selected],
        l1_rho=np.asarray(l1_rho),
        l1_m=np.asarray(l1_m),
        lq_rho=np.asarray(lq_rho),
        lq_m=np.asarray(lq_m),
        q=q,
    )


def worst_ratio(distances: Sequence[float]) -> float:
    """
    Largest ratio of consecutive ladder distances

    A ladder is Cauchy-consistent when this stays below 1 + slack. 0/0 counts as 0.
    """
    values = [float(v) for v in distances]
    ratios = [
        later / earlier if earlier > 0.0 else (0.0 if later == 0.0 else float("inf"))
        for earlier, later in zip(values, values[1:])
    ]
    return max(ratios, default=0.0)


def fitted_rate(epsilons: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(epsilon)"""
    eps = np.asarray(epsilons, dtype=float)
    vals = np.asarray(values, dtype=float)
    mask = (eps > 0.0) & (vals > 0.0)
    if np.count_nonzero(mask) < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(eps[mask]), np.log(vals[mask]), 1)
    logger.debug(f"📊 fitted rate {slope:.3f} over {np.count_nonzero(mask)} points")
    return float(slope)


def uniform_spread(values: Sequence[float]) -> float:
    """(max - min)/max of a ladder of non-negative values"""
    vals = np.asarray(values, dtype=float)
    top = float(np.max(np.abs(vals))) if vals.size else 0.0
    return float((np.max(vals) - np.min(vals)) / top) if top > 0.0 else 0.0


def uniform_growth(values: Sequence[float]) -> float:
    """max(values)/values[0] - 1, floored at 0: growth over the first (coarsest) member"""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0 or not vals[0] > 0.0:
        return 0.0
    return max(float(np.max(vals)) / float(vals[0]) - 1.0, 0.0)
