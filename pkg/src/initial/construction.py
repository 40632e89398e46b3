#!/usr/bin/env python3
"""
Approximate Initial Data
Mollified, mass-normalised, boundary-compatible initial data on [-b, b]
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import numpy.typing as npt
from loguru import logger
from scipy import integrate

from src.errors import ParameterError, VacuumError
from src.forces.nonlocal_terms import point_mass_interaction_energy
from src.initial.profiles import Profile, RawInitialData
from src.pressure.laws import PressureLaw
from src.solver.state import MassGridState, graded_cell_masses, state_from_profile

FloatArray = npt.NDArray[np.float64]

MIN_KERNEL_POINTS = 64
COLLAR_POINTS = 513
TAIL_POINTS = 200


def check_viscosity_exponent(alpha: float) -> float:
    """Return beta = 2/(2 alpha - 1) after checking 2/3 < alpha <= 1"""
    if not 2.0 / 3.0 < alpha <= 1.0:
        raise ParameterError(f"viscosity exponent alpha must lie in (2/3, 1] (got {alpha})")
    return 2.0 / (2.0 * alpha - 1.0)


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon <= 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1] (got {epsilon})")


def mollifier(offsets: FloatArray, scale: float) -> FloatArray:
    """Standard bump exp(-1/(1-r^2)) at scale `scale`, normalised to unit discrete integral"""
    r = np.asarray(offsets, dtype=float) / scale
    inside = np.abs(r) < 1.0
    values = np.zeros_like(r)
    values[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    spacing = float(offsets[1] - offsets[0])
    return values / (values.sum() * spacing)


def cutoff_step(z: FloatArray) -> FloatArray:
    """Smooth monotone step: 0 for z <= 0, 1 for z >= 2"""
    z = np.asarray(z, dtype=float)

    def bump(t: FloatArray) -> FloatArray:
        positive = t > 0.0
        return np.where(positive, np.exp(-1.0 / np.where(positive, t, 1.0)), 0.0)

    left = bump(z)
    return left / (left + bump(2.0 - z))


@dataclass
class SampleGrid:
    """Fine uniform core around the data, coarse tails, fine boundary collars"""
    x: FloatArray
    core: FloatArray
    spacing: float
    halfwidth: float


def sample_grid(
    raw: RawInitialData, epsilon: float, halfwidth: float, resolution: int = 64
) -> SampleGrid:
    """
    Build the sampling grid for the construction

    Args:
        raw: Raw data (its support sizes the core)
        epsilon: Viscosity parameter; the mollifier scale is sqrt(epsilon)
        halfwidth: Domain half-width b
        resolution: Points per unit length in the core (raised to resolve the mollifier)
    """
    scale = np.sqrt(epsilon)
    spacing = min(1.0 / resolution, 2.0 * scale / MIN_KERNEL_POINTS)
    reach = max(abs(raw.support[0]), abs(raw.support[1])) + scale + 1.0
    core_end = min(halfwidth, np.ceil(reach / spacing) * spacing)
    n_core = int(round(core_end / spacing))
    core = np.arange(-n_core, n_core + 1) * spacing

    pieces = [core]
    collar_start = max(halfwidth - 1.0, core_end)
    if collar_start < halfwidth:
        collar = np.linspace(collar_start, halfwidth, COLLAR_POINTS)
        pieces.extend([collar, -collar])
        if collar_start > core_end:
            tail = np.geomspace(core_end, collar_start, TAIL_POINTS)
            pieces.extend([tail, -tail])
    x = np.unique(np.concatenate(pieces))
    x = x[(x >= -halfwidth) & (x <= halfwidth)]
    distinct = np.concatenate(([True], np.diff(x) > 1e-6 * spacing))
    x = x[distinct]
    return SampleGrid(x=x, core=core, spacing=spacing, halfwidth=halfwidth)


def _convolve_on_core(grid: SampleGrid, values: FloatArray, epsilon: float) -> FloatArray:
    """Trapezoid convolution with J_sqrt(eps) on the uniform core, extended by zero"""
    scale = np.sqrt(epsilon)
    half = int(np.ceil(scale / grid.spacing))
    kernel = mollifier(np.arange(-half, half + 1) * grid.spacing, scale)
    smoothed = np.convolve(values, kernel * grid.spacing, mode="same")
    return np.interp(grid.x, grid.core, smoothed, left=0.0, right=0.0)


def mollify_density(
    raw: RawInitialData,
    epsilon: float,
    alpha: float,
    b: float,
    grid: Optional[SampleGrid] = None,
) -> Profile:
    """
    ((rho0 1_{|x|<=b-1})^(alpha-1/2) * J + eps e^{-x^2})^beta on the sample grid

    Args:
        raw: Raw initial data
        epsilon: Viscosity parameter in (0, 1]
        alpha: Viscosity exponent in (2/3, 1]
        b: Domain half-width

    Returns:
        Strictly positive profile (up to floating-point underflow of the floor)
    """
    _check_epsilon(epsilon)
    beta = check_viscosity_exponent(alpha)
    grid = grid or sample_grid(raw, epsilon, b)
    core_density = np.where(np.abs(grid.core) <= b - 1.0, raw.density(grid.core), 0.0)
    smoothed = _convolve_on_core(grid, core_density ** (alpha - 0.5), epsilon)
    floor = epsilon * np.exp(-grid.x**2)
    return Profile(grid.x, (smoothed + floor) ** beta)


def normalize_mass(profile: Profile, mass: float, b: float) -> Profile:
    """Cut off to [-b, b] and rescale to total mass M"""
    keep = (profile.x >= -b) & (profile.x <= b)
    clipped = Profile(profile.x[keep], profile.values[keep])
    current = clipped.integral()
    if not current > 0.0:
        raise VacuumError("cannot normalise a profile with zero integral")
    return clipped.scaled(mass / current)


@dataclass
class VelocityConstruction:
    """Velocity before and after the boundary-collar correction"""
    u: Profile
    ubar: Profile
    smoothed_momentum: FloatArray


def build_velocity(
    raw: RawInitialData,
    rho0_eps: Profile,
    epsilon: float,
    b: float,
    law: PressureLaw,
    alpha: float,
    grid: Optional[SampleGrid] = None,
) -> VelocityConstruction:
    """
    Mollified velocity plus the stress-free collar correction at +-b

    Args:
        raw: Raw data supplying m0
        rho0_eps: Normalised density on the sample grid
        epsilon: Viscosity parameter
        b: Domain half-width
        law: Pressure law
        alpha: Viscosity exponent, mu(rho) = rho^alpha

    Returns:
        VelocityConstruction with u(+-b) = 0 and vanishing total stress at +-b
    """
    grid = grid or sample_grid(raw, epsilon, b)
    if not np.array_equal(grid.x, rho0_eps.x):
        raise ParameterError("density profile and sample grid differ")
    x = rho0_eps.x
    rho = rho0_eps.values

    core_weight = np.where(np.abs(grid.core) <= b - 2.0, raw.scaled_momentum(grid.core), 0.0)
    smoothed = _convolve_on_core(grid, core_weight, epsilon)
    needs_density = smoothed != 0.0
    if np.any(needs_density & (rho <= 0.0)):
        raise VacuumError("mollified momentum is supported where the density vanishes")
    ubar = np.where(needs_density, smoothed / np.sqrt(np.where(needs_density, rho, 1.0)), 0.0)

    positive = rho > 0.0
    pressure_over_mu = np.where(
        positive, np.asarray(law.pressure(rho)) / np.where(positive, rho, 1.0) ** alpha, 0.0
    )
    from_left = integrate.cumulative_trapezoid(pressure_over_mu, x, initial=0.0)
    to_right = from_left[-1] - from_left
    right_collar = cutoff_step(4.0 * (x - (b - 0.5))) * to_right
    left_collar = -cutoff_step(-4.0 * (x + (b - 0.5))) * from_left
    u = ubar - (right_collar + left_collar) / epsilon
    u[0] = u[-1] = 0.0
    return VelocityConstruction(u=Profile(x, u), ubar=Profile(x, ubar), smoothed_momentum=smoothed)


def gradient_energy(x: FloatArray, rho: FloatArray, epsilon: float, alpha: float) -> float:
    """eps^2 int rho^(2 alpha - 3) rho_x^2, written through (rho^(alpha - 1/2))_x"""
    root = np.maximum(rho, 0.0) ** (alpha - 0.5)
    slope = np.gradient(root, x)
    return float(epsilon**2 / (alpha - 0.5) ** 2 * integrate.trapezoid(slope**2, x))


def trapezoid_weights(x: FloatArray) -> FloatArray:
    widths = np.diff(x)
    weights = np.zeros_like(x)
    weights[:-1] += 0.5 * widths
    weights[1:] += 0.5 * widths
    return weights


def trim_to_support(
    rho: Profile, fields: Tuple[Profile, ...], edge_density: float, mass: float
) -> Tuple[Profile, Tuple[Profile, ...], float]:
    """
    Restrict the profiles to the samples where rho >= edge_density * max rho

    Everything between the outermost kept samples is retained and the density
    is rescaled back to `mass`.

    Args:
        rho: Normalised density
        fields: Profiles sampled on the same abscissae (velocities)
        edge_density: Relative density at the new free boundaries, in [0, 1)
        mass: Total mass M to restore

    Returns:
        (trimmed density, trimmed fields, fraction of M that was cut away)
    """
    if not 0.0 <= edge_density < 1.0:
        raise ParameterError(f"edge density must lie in [0, 1) (got {edge_density})")
    kept = np.flatnonzero(rho.values >= edge_density * float(np.max(rho.values)))
    lo, hi = int(kept[0]), int(kept[-1]) + 1
    if hi - lo < 3:
        raise VacuumError("fewer than three samples above the edge density")
    window = slice(lo, hi)
    cut = Profile(rho.x[window], rho.values[window])
    remaining = cut.integral()
    trimmed = tuple(Profile(f.x[window], f.values[window]) for f in fields)
    return cut.scaled(mass / remaining), trimmed, 1.0 - remaining / mass


@dataclass
class ApproxInitialData:
    """Constructed initial data and the functionals it was checked against"""
    epsilon: float
    p_exponent: float
    halfwidth: float
    alpha: float
    beta: float
    rho: Profile
    u: Profile
    ubar: Profile
    total_mass: float
    grid_spacing: float
    E0: float = 0.0
    E1: float = 0.0
    second_moment: float = 0.0
    interaction_energy: float = 0.0
    collar_size: float = 0.0
    boundary_density: float = 0.0
    boundary_stress_residual: float = 0.0
    kinetic_identity_gap: float = 0.0
    edge_density: float = 0.0
    trimmed_mass: float = 0.0

    @property
    def mass_error(self) -> float:
        return abs(self.rho.integral() - self.total_mass) / self.total_mass

    @property
    def extent(self) -> float:
        """Half-width of the sampled support handed to the solver (b when untrimmed)"""
        return float(max(-self.rho.x[0], self.rho.x[-1]))

    def to_state(
        self, n_cells: int, end_mass_ratio: float = 1.0, grading: float = 1.15
    ) -> MassGridState:
        """
        Discretise on N cells, graded toward the free boundaries when end_mass_ratio < 1
        """
        masses = graded_cell_masses(self.total_mass, n_cells, end_mass_ratio, grading)
        return state_from_profile(
            self.rho.x,
            self.rho.values,
            self.u.values,
            n_cells,
            self.epsilon,
            self.alpha,
            cell_masses=masses,
        )

    def summary(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "halfwidth": self.halfwidth,
            "extent": self.extent,
            "trimmed_mass": self.trimmed_mass,
            "beta": self.beta,
            "mass_error": self.mass_error,
            "E0": self.E0,
            "E1": self.E1,
            "E1_over_eps": self.E1 / self.epsilon,
            "second_moment": self.second_moment,
            "interaction_energy": self.interaction_energy,
            "collar_size": self.collar_size,
            "boundary_density": self.boundary_density,
            "boundary_stress_residual": self.boundary_stress_residual,
            "kinetic_identity_gap": self.kinetic_identity_gap,
        }

    def to_csv(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        table = np.column_stack([self.rho.x, self.rho.values, self.u.values, self.ubar.values])
        np.savetxt(path, table, delimiter=",", header="x,rho,u,ubar", comments="", fmt="%.17g")
        logger.debug(f"💾 Initial data written to {path}")
        return path


def initial_functionals(data: ApproxInitialData, law: PressureLaw) -> Tuple[float, float]:
    """
    Energy E0 and gradient functional E1 of constructed data

    Returns:
        (E0, E1) with E0 = int(rho u^2/2 + rho e(rho) + rho W*rho/2)
        and E1 = eps^2 int rho^(2a-3) rho_x^2
    """
    x = data.rho.x
    rho = data.rho.values
    u = data.u.values
    local = 0.5 * rho * u**2 + rho * np.asarray(law.internal_energy(rho))
    interaction = point_mass_interaction_energy(x, rho * trapezoid_weights(x)).signed
    e0 = float(integrate.trapezoid(local, x)) + interaction
    e1 = gradient_energy(x, rho, data.epsilon, data.alpha)
    return e0, e1


def boundary_stress_residual(
    x: FloatArray, rho: FloatArray, u: FloatArray, law: PressureLaw, epsilon: float, alpha: float
) -> float:
    """Largest relative one-sided residual of P - eps mu u_x at the two boundaries"""
    slopes = np.gradient(u, x, edge_order=2)
    residuals = []
    for outer in (0, -1):
        slope = slopes[outer]
        pressure = float(law.pressure(rho[outer]))
        stress = pressure - epsilon * rho[outer] ** alpha * slope
        residuals.append(abs(stress) / pressure if pressure > 0.0 else abs(stress))
    return float(max(residuals))


def build_initial_data(
    raw: RawInitialData,
    law: PressureLaw,
    epsilon: float,
    alpha: float,
    p_exponent: float,
    halfwidth: Optional[float] = None,
    resolution: int = 64,
    edge_density: float = 0.0,
) -> ApproxInitialData:
    """
    Run the whole construction for one epsilon

    Args:
        raw: Raw data (rho0, m0)
        law: Pressure law
        epsilon: Viscosity parameter
        alpha: Viscosity exponent
        p_exponent: b = eps^(-p) unless `halfwidth` is given
        halfwidth: Explicit domain half-width override
        resolution: Core points per unit length
        edge_density: When positive, the returned profiles are trimmed to
            rho >= edge_density * max rho (see trim_to_support); the collar and
            boundary-stress diagnostics still describe the full [-b, b] data

    Returns:
        ApproxInitialData with functionals and boundary checks filled in
    """
    _check_epsilon(epsilon)
    beta = check_viscosity_exponent(alpha)
    limit = law.gamma / (law.gamma - alpha)
    if p_exponent <= limit:
        logger.warning(f"⚠️ p={p_exponent} does not exceed gamma/(gamma-alpha)={limit:.4g}")
    target_b = float(halfwidth) if halfwidth is not None else float(epsilon ** (-p_exponent))
    if target_b <= 2.0:
        raise ParameterError(f"domain half-width must exceed 2 (got {target_b:.4g})")

    grid = sample_grid(raw, epsilon, target_b, resolution)
    b = float(np.round(target_b / grid.spacing) * grid.spacing)
    if b != target_b:
        grid = sample_grid(raw, epsilon, b, resolution)
    logger.info(f"⚙️ Building initial data: eps={epsilon:g}, b={b:.6g}, {grid.x.size} samples")

    mass = raw.total_mass
    rho = normalize_mass(mollify_density(raw, epsilon, alpha, b, grid), mass, b)
    velocity = build_velocity(raw, rho, epsilon, b, law, alpha, grid)

    x = rho.x
    kinetic_bar = float(integrate.trapezoid(rho.values * velocity.ubar.values**2, x))
    kinetic_smoothed = float(integrate.trapezoid(velocity.smoothed_momentum**2, x))
    collar_size = float(
        integrate.trapezoid(rho.values * (velocity.u.values - velocity.ubar.values) ** 2, x)
    )
    stress_residual = boundary_stress_residual(
        x, rho.values, velocity.u.values, law, epsilon, alpha
    )

    u, ubar = velocity.u, velocity.ubar
    trimmed_mass = 0.0
    if edge_density > 0.0:
        rho, (u, ubar), trimmed_mass = trim_to_support(rho, (u, ubar), edge_density, mass)
        x = rho.x
        logger.info(
            f"📋 Trimmed to [{x[0]:.4g}, {x[-1]:.4g}] at relative density {edge_density:g}, "
            f"cut mass fraction {trimmed_mass:.3g}"
        )

    data = ApproxInitialData(
        epsilon=epsilon,
        p_exponent=p_exponent,
        halfwidth=b,
        alpha=alpha,
        beta=beta,
        rho=rho,
        u=u,
        ubar=ubar,
        total_mass=mass,
        grid_spacing=grid.spacing,
        second_moment=float(integrate.trapezoid(x**2 * rho.values, x)),
        interaction_energy=point_mass_interaction_energy(
            x, rho.values * trapezoid_weights(x)
        ).signed,
        collar_size=collar_size,
        boundary_density=float(rho.values[-1]),
        boundary_stress_residual=stress_residual,
        kinetic_identity_gap=abs(kinetic_bar - kinetic_smoothed),
        edge_density=edge_density,
        trimmed_mass=trimmed_mass,
    )
    data.E0, data.E1 = initial_functionals(data, law)
    logger.success(
        f"✅ Initial data ready: M={mass:.6g}, E0={data.E0:.6g}, E1/eps={data.E1 / epsilon:.4g}"
    )
    return data
