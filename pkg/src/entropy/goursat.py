#!/usr/bin/env python3
"""
Goursat Entropy
Special entropy pair for general pressure laws: the solution of the entropy
equation inside the cone |u| <= k(rho) with the signed mechanical energy
prescribed on both characteristics
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import numpy.typing as npt
from loguru import logger
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import RegularGridInterpolator

from src.diagnostics.checks import CheckResult, at_most
from src.entropy.pairs import EntropyPair, PairKind, fitted_constant
from src.errors import GoursatInstabilityError, ParameterError
from src.pressure.laws import PressureLaw

FloatArray = npt.NDArray[np.float64]

GROWTH_LIMIT = 1e3


def signed_energy(law: PressureLaw, rho: FloatArray, u: FloatArray) -> FloatArray:
    """sign(u) (rho u^2/2 + rho e(rho)), the data and the exterior extension"""
    return np.sign(u) * (0.5 * rho * u**2 + rho * np.asarray(law.internal_energy(rho)))


def signed_flux(law: PressureLaw, rho: FloatArray, u: FloatArray) -> FloatArray:
    """sign(u) u (rho u^2/2 + rho e + P)"""
    energy = 0.5 * rho * u**2 + rho * np.asarray(law.internal_energy(rho))
    return np.sign(u) * u * (energy + np.asarray(law.pressure(rho)))


def local_exponents(law: PressureLaw, rho: FloatArray) -> Tuple[FloatArray, FloatArray]:
    """
    (gamma, theta) of the regime each density belongs to

    gamma1 up to rho_star_low, gamma2 from rho_star_high on, and the blend
    weight of the pressure law in between.
    """
    phi = np.asarray(law.low_density_weight(np.asarray(rho, dtype=float)))
    gamma = phi * law.gamma + (1.0 - phi) * law.gamma2
    return gamma, 0.5 * (gamma - 1.0)


@dataclass
class GoursatTable:
    """eta-hat and q-hat on the rectangular (s, u) grid, s = k(rho)"""
    s: FloatArray
    u: FloatArray
    rho: FloatArray
    eta: FloatArray
    flux: FloatArray
    eta_s: FloatArray
    eta_u: FloatArray
    spacing: float

    @property
    def resolution(self) -> int:
        return int(self.s.size - 1)

    def inside(self) -> npt.NDArray[np.bool_]:
        return np.abs(self.u)[None, :] <= self.s[:, None]

    def to_csv(self, path: Path) -> Path:
        """Long-format table rho, s, u, eta, q over the cone"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        mask = self.inside()
        s_grid, u_grid = np.meshgrid(self.s, self.u, indexing="ij")
        rho_grid = np.broadcast_to(self.rho[:, None], s_grid.shape)
        table = np.column_stack(
            [rho_grid[mask], s_grid[mask], u_grid[mask], self.eta[mask], self.flux[mask]]
        )
        np.savetxt(path, table, delimiter=",", header="rho,s,u,eta,q", comments="", fmt="%.17g")
        logger.info(f"💾 Goursat table written to {path}")
        return path


def _march(
    law: PressureLaw, s: FloatArray, rho: FloatArray, h: float, growth_limit: float
) -> FloatArray:
    """
    Leapfrog in s on the sublattice n + j even, which carries the boundary points (n, +-n)

    eta^{n+1}_j (1 + g h/2) = eta^n_{j+1} + eta^n_{j-1} - (1 - g h/2) eta^{n-1}_j
    """
    levels = s.size
    width = 2 * (levels - 1) + 1
    center = levels - 1
    offsets = np.arange(width) - center
    u = offsets * h
    eta = np.zeros((levels, width))

    def exact(n: int) -> FloatArray:
        return signed_energy(law, np.full(width, rho[n]), u)

    if levels > 1:
        eta[1] = exact(1)
        eta[1, center] = 0.0
    coefficient = np.zeros(levels)
    if levels > 2:
        coefficient[1:] = np.asarray(law.characteristic_coefficient(rho[1:]))

    for n in range(1, levels - 1):
        gh = coefficient[n] * h
        neighbours = np.zeros(width)
        neighbours[1:-1] = eta[n, 2:] + eta[n, :-2]
        if 1.0 + 0.5 * gh < 0.5:
            # backward difference in s through the same sublattice
            update = neighbours - eta[n - 1] - gh * (0.5 * neighbours - eta[n - 1])
        else:
            update = (neighbours - (1.0 - 0.5 * gh) * eta[n - 1]) / (1.0 + 0.5 * gh)
        interior = (np.abs(offsets) < n + 1) & ((offsets + n + 1) % 2 == 0)
        data = exact(n + 1)
        level = np.where(interior, update, data)
        eta[n + 1] = level

        if not np.all(np.isfinite(level[interior])):
            raise GoursatInstabilityError(
                f"non-finite values at s={s[n + 1]:.4g}; refine the u-grid"
            )
        scale = float(np.max(np.abs(data[np.abs(offsets) == n + 1]))) + 1e-300
        peak = float(np.max(np.abs(level[interior]), initial=0.0))
        change = level[interior] - eta[n - 1][interior]
        energy = float(h * np.sum((change / (2.0 * h)) ** 2))
        energy_scale = 2.0 * s[n + 1] * (scale / max(s[n + 1], h)) ** 2
        if peak > growth_limit * scale or energy > growth_limit**2 * energy_scale:
            raise GoursatInstabilityError(
                f"march grew to {peak:.3g} against boundary data {scale:.3g} at "
                f"s={s[n + 1]:.4g}; refine the u-grid"
            )
    return eta


def _fill_odd_sublattice(eta: FloatArray) -> None:
    """Interior points with n + j odd: mean of their four same-parity neighbours"""
    levels, width = eta.shape
    center = levels - 1
    offsets = np.arange(width) - center
    for n in range(1, levels):
        odd = (np.abs(offsets) < n) & ((offsets + n) % 2 == 1)
        index = np.nonzero(odd)[0]
        if index.size == 0:
            continue
        sideways = 0.5 * (eta[n, index - 1] + eta[n, index + 1])
        if n + 1 < levels:
            vertical = 0.5 * (eta[n - 1, index] + eta[n + 1, index])
            eta[n, index] = 0.5 * (sideways + vertical)
        else:
            eta[n, index] = sideways


def _recover_flux(
    law: PressureLaw,
    rho: FloatArray,
    u: FloatArray,
    eta: FloatArray,
    eta_s: FloatArray,
    eta_u: FloatArray,
) -> FloatArray:
    """Integrate q_u = rho eta_rho + u eta_u along u from u = -k, where q is the signed flux"""
    levels, width = eta.shape
    center = levels - 1
    flux = signed_flux(law, rho[:, None] * np.ones((1, width)), np.broadcast_to(u, eta.shape))
    for n in range(1, levels):
        cone = slice(center - n, center + n + 1)
        dk = float(law.dk(rho[n]))
        q_u = rho[n] * dk * eta_s[n, cone] + u[cone] * eta_u[n, cone]
        start = signed_flux(law, np.array([rho[n]]), np.array([u[center - n]]))[0]
        flux[n, cone] = start + cumulative_trapezoid(q_u, u[cone], initial=0.0)
    return flux


def build_goursat_table(
    law: PressureLaw,
    rho_max: float,
    grid_resolution: int = 256,
    growth_limit: float = GROWTH_LIMIT,
) -> GoursatTable:
    """
    Solve the Goursat problem on levels s_n = n h, h = k(rho_max)/resolution

    Raises:
        GoursatInstabilityError: if the march grows beyond growth_limit times the data
    """
    if not rho_max > 0.0:
        raise ParameterError("rho_max must be positive")
    if grid_resolution < 4:
        raise ParameterError("grid resolution must be at least 4")
    s_max = float(law.sound_integral_k(rho_max))
    h = s_max / grid_resolution
    s = np.arange(grid_resolution + 1) * h
    rho = np.zeros_like(s)
    rho[1:] = np.asarray(law.inverse_k(s[1:]))
    u = (np.arange(2 * grid_resolution + 1) - grid_resolution) * h

    logger.info(f"⚙️ Goursat march: {grid_resolution} levels, s_max={s_max:.4g}")
    eta = _march(law, s, rho, h, growth_limit)
    _fill_odd_sublattice(eta)
    eta_s = np.gradient(eta, h, axis=0)
    eta_u = np.gradient(eta, h, axis=1)
    flux = _recover_flux(law, rho, u, eta, eta_s, eta_u)
    return GoursatTable(
        s=s, u=u, rho=rho, eta=eta, flux=flux, eta_s=eta_s, eta_u=eta_u, spacing=h
    )


def goursat_hat(
    law: PressureLaw,
    rho_max: float = 4.0,
    grid_resolution: int = 256,
    table: Optional[GoursatTable] = None,
) -> EntropyPair:
    """
    eta-hat pair with bilinear interpolation inside the cone and exact values outside

    Args:
        law: Pressure law with k(rho) available
        rho_max: Largest density covered by the table
        grid_resolution: Number of s-levels (the u-grid has twice as many cells)
        table: Reuse an existing table

    Returns:
        EntropyPair of kind GOURSAT_HAT
    """
    table = table or build_goursat_table(law, rho_max, grid_resolution)
    grid = (table.s, table.u)
    options = dict(method="linear", bounds_error=False, fill_value=None)
    interpolators = {
        name: RegularGridInterpolator(grid, values, **options)
        for name, values in (
            ("eta", table.eta),
            ("flux", table.flux),
            ("eta_s", table.eta_s),
            ("eta_u", table.eta_u),
        )
    }
    s_max = float(table.s[-1])

    def lookup(name: str, rho: FloatArray, u: FloatArray) -> Tuple[FloatArray, FloatArray]:
        k = np.asarray(law.sound_integral_k(rho), dtype=float)
        inside = np.abs(u) < k
        if np.any(inside & (k > s_max * (1.0 + 1e-12))):
            raise ParameterError("density exceeds the Goursat table; raise rho_max")
        points = np.stack([np.minimum(k, s_max), u], axis=-1)
        return interpolators[name](points), inside

    def eta_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        values, inside = lookup("eta", rho, u)
        return np.where(inside, values, signed_energy(law, rho, u))

    def flux_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        values, inside = lookup("flux", rho, u)
        return np.where(inside, values, signed_flux(law, rho, u))

    def eta_m_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        values, inside = lookup("eta_u", rho, u)
        positive = rho > 0.0
        table_value = np.where(positive, values / np.where(positive, rho, 1.0), 0.0)
        return np.where(inside, table_value, np.sign(u) * u)

    def eta_rho_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        eta_s, inside = lookup("eta_s", rho, u)
        eta_u, _ = lookup("eta_u", rho, u)
        positive = rho > 0.0
        safe = np.where(positive, rho, 1.0)
        dk = np.where(positive, np.sqrt(np.asarray(law.dpressure(safe))) / safe, 0.0)
        table_value = np.where(positive, dk * eta_s - u * eta_u / safe, 0.0)
        p_over_rho = np.where(positive, np.asarray(law.pressure(safe)) / safe, 0.0)
        exact = np.sign(u) * (-0.5 * u**2 + np.asarray(law.internal_energy(rho)) + p_over_rho)
        return np.where(inside, table_value, exact)

    return EntropyPair(
        PairKind.GOURSAT_HAT,
        law,
        eta_fn,
        flux_fn,
        eta_m_fn,
        eta_rho_fn,
        quadrature_order=table.resolution,
        label="goursat_hat",
    )


# ----------------------------------------------------------------------
# checks


def pde_residual(law: PressureLaw, table: GoursatTable) -> float:
    """
    Scaled residual of eta_ss - eta_uu + g eta_s with stride-2 differences

    Evaluated on marched points with s >= s_max/10 and |u| <= s - 3h; the
    stride-2 stencil is independent of the marching diamond.
    """
    h = table.spacing
    levels, width = table.eta.shape
    center = levels - 1
    offsets = np.arange(width) - center
    residuals = []
    curvatures = []
    for n in range(2, levels - 2):
        if table.s[n] < 0.1 * table.s[-1]:
            continue
        g = float(law.characteristic_coefficient(table.rho[n]))
        mask = (np.abs(offsets) <= n - 3) & ((offsets + n) % 2 == 0)
        mask[:2] = mask[-2:] = False
        index = np.nonzero(mask)[0]
        if index.size == 0:
            continue
        eta = table.eta
        eta_ss = (eta[n + 2, index] - 2.0 * eta[n, index] + eta[n - 2, index]) / (4.0 * h**2)
        eta_uu = (eta[n, index + 2] - 2.0 * eta[n, index] + eta[n, index - 2]) / (4.0 * h**2)
        eta_s = (eta[n + 2, index] - eta[n - 2, index]) / (4.0 * h)
        residuals.append(eta_ss - eta_uu + g * eta_s)
        curvatures.append(eta_uu)
    if not residuals:
        return 0.0
    residual = np.concatenate(residuals)
    curvature = np.concatenate(curvatures)
    size = float(np.sqrt(np.mean(residual**2)))
    scale = float(np.sqrt(np.mean(curvature**2)))
    return size / scale if scale > 0.0 else size


def boundary_error(law: PressureLaw, table: GoursatTable) -> float:
    """Largest deviation from the data on u = +-k(rho)"""
    center = table.resolution
    worst = 0.0
    for n in range(1, table.resolution + 1):
        for j in (center - n, center + n):
            expected = signed_energy(law, np.array([table.rho[n]]), np.array([table.u[j]]))[0]
            worst = max(worst, abs(table.eta[n, j] - expected))
    return worst


def odd_symmetry_error(table: GoursatTable) -> float:
    return float(np.max(np.abs(table.eta + table.eta[:, ::-1])))


def bound_constants(law: PressureLaw, table: GoursatTable) -> Dict[str, float]:
    """
    Fitted constants of the size and cancellation estimates

    |eta| <= C (rho u^2 + rho^gamma) and |q - u eta| <= C (rho^gamma |u| + rho^(gamma+theta)),
    with the regime exponents of each density.
    """
    mask = table.inside() & (table.rho[:, None] > 0.0)
    rho = np.broadcast_to(table.rho[:, None], table.eta.shape)[mask]
    u = np.broadcast_to(table.u[None, :], table.eta.shape)[mask]
    gamma, theta = local_exponents(law, rho)
    eta = table.eta[mask]
    flux = table.flux[mask]
    return {
        "eta": fitted_constant(eta, rho * u**2 + rho**gamma),
        "cancellation": fitted_constant(
            flux - u * eta, rho**gamma * np.abs(u) + rho ** (gamma + theta)
        ),
    }


def goursat_checks(
    law: PressureLaw,
    rho_max: float = 4.0,
    grid_resolution: int = 512,
    residual_limit: float = 1e-3,
    drift_limit: float = 0.05,
    growth_limit: float = GROWTH_LIMIT,
) -> Tuple[GoursatTable, Dict[str, CheckResult]]:
    """Residual, boundary, symmetry and bound checks, with a half-resolution table for drift"""
    table = build_goursat_table(law, rho_max, grid_resolution, growth_limit)
    coarse = build_goursat_table(law, rho_max, grid_resolution // 2, growth_limit)
    scale = float(np.max(np.abs(table.eta))) or 1.0
    checks = {
        "goursat_residual": at_most("goursat_residual", pde_residual(law, table), residual_limit),
        "goursat_boundary": at_most("goursat_boundary", boundary_error(law, table) / scale, 1e-12),
        "goursat_odd_symmetry": at_most(
            "goursat_odd_symmetry", odd_symmetry_error(table) / scale, 1e-12
        ),
    }
    fine_bounds = bound_constants(law, table)
    coarse_bounds = bound_constants(law, coarse)
    for name, value in fine_bounds.items():
        drift = abs(value - coarse_bounds[name]) / max(abs(value), 1e-300)
        checks[f"goursat_{name}_drift"] = at_most(
            f"goursat_{name}_drift", drift, drift_limit, detail=f"C={value:.6g}"
        )
    return table, checks


if __name__ == "__main__":
    logger.info("🧪 Testing Goursat entropy...")
    law = PressureLaw(gamma=3.0)
    table = build_goursat_table(law, 2.0, 64)
    logger.info(f"residual: {pde_residual(law, table):.3g}")
    logger.info(f"odd symmetry: {odd_symmetry_error(table):.3g}")
