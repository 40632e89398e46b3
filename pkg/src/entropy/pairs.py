#!/usr/bin/env python3
"""
Entropy Pairs
Weak-entropy kernel, generated pairs, the mechanical pair and the special pair
built from the generator s|s|/2
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Tuple, Union

import numpy as np
import numpy.typing as npt
from loguru import logger
from scipy import special

from src.diagnostics.checks import CheckResult, at_most
from src.errors import ParameterError
from src.pressure.laws import PressureLaw

FloatArray = npt.NDArray[np.float64]
Scalar = Union[float, FloatArray]
Evaluator = Callable[[FloatArray, FloatArray], FloatArray]

RHO_EXCLUSION = 1e-8


class PairKind(str, Enum):
    GENERATED = "generated"
    MECHANICAL = "mechanical"
    SPECIAL_HASH = "special_hash"
    GOURSAT_HAT = "goursat_hat"


@dataclass
class PairValues:
    eta: FloatArray
    flux: FloatArray
    eta_m: FloatArray
    eta_rho: FloatArray


@dataclass(frozen=True)
class EntropyPair:
    """
    Entropy/entropy-flux pair with its gradient.

    The evaluators work in (rho, u); the public methods take the conservative
    variables (rho, m) with u = m/rho (u = 0 at vacuum). eta_m and eta_rho are
    the partial derivatives in (rho, m).
    """
    kind: PairKind
    law: PressureLaw
    eta_fn: Evaluator
    flux_fn: Evaluator
    eta_m_fn: Evaluator
    eta_rho_fn: Evaluator
    quadrature_order: int = 0
    label: str = ""

    @staticmethod
    def velocity(rho: Scalar, m: Scalar) -> Tuple[FloatArray, FloatArray]:
        rho_arr = np.asarray(rho, dtype=float)
        m_arr = np.asarray(m, dtype=float)
        if np.any(rho_arr < 0.0):
            raise ParameterError("density must be non-negative")
        positive = rho_arr > 0.0
        u = np.where(positive, m_arr / np.where(positive, rho_arr, 1.0), 0.0)
        return rho_arr, u

    def evaluate(self, rho: Scalar, u: Scalar) -> PairValues:
        """All four fields at (rho, u)"""
        rho_arr, u_arr = np.broadcast_arrays(
            np.asarray(rho, dtype=float), np.asarray(u, dtype=float)
        )
        return PairValues(
            eta=self.eta_fn(rho_arr, u_arr),
            flux=self.flux_fn(rho_arr, u_arr),
            eta_m=self.eta_m_fn(rho_arr, u_arr),
            eta_rho=self.eta_rho_fn(rho_arr, u_arr),
        )

    def eta(self, rho: Scalar, m: Scalar) -> FloatArray:
        return self.eta_fn(*np.broadcast_arrays(*self.velocity(rho, m)))

    def flux(self, rho: Scalar, m: Scalar) -> FloatArray:
        return self.flux_fn(*np.broadcast_arrays(*self.velocity(rho, m)))

    def eta_m(self, rho: Scalar, m: Scalar) -> FloatArray:
        return self.eta_m_fn(*np.broadcast_arrays(*self.velocity(rho, m)))

    def eta_rho(self, rho: Scalar, m: Scalar) -> FloatArray:
        return self.eta_rho_fn(*np.broadcast_arrays(*self.velocity(rho, m)))


def _require_polytropic(law: PressureLaw) -> None:
    if not law.is_polytropic:
        raise ParameterError("the weak-entropy kernel is only available for the polytropic law")


# ----------------------------------------------------------------------
# kernel and generators


def kernel_chi(law: PressureLaw, rho: Scalar, v: Scalar) -> Scalar:
    """
    [rho^(2 theta) - v^2]_+^b, zero on and outside the support edge

    Args:
        law: Polytropic law (fixes theta and b)
        rho: Density
        v: Offset s - u
    """
    _require_polytropic(law)
    rho_arr = np.asarray(rho, dtype=float)
    gap = rho_arr ** (2.0 * law.theta) - np.asarray(v, dtype=float) ** 2
    inside = gap > 0.0
    values = np.where(inside, np.where(inside, gap, 1.0) ** law.kernel_exponent, 0.0)
    return float(values) if np.ndim(values) == 0 else values


@dataclass(frozen=True)
class Generator:
    """Generator psi with its derivative"""
    name: str
    psi: Callable[[FloatArray], FloatArray]
    dpsi: Callable[[FloatArray], FloatArray]
    parameters: Dict[str, float] = field(default_factory=dict)


GENERATORS: Dict[str, Generator] = {
    "quadratic": Generator("quadratic", lambda s: 0.5 * s**2, lambda s: s),
    "linear": Generator("linear", lambda s: s, lambda s: np.ones_like(s)),
    "zero": Generator("zero", lambda s: np.zeros_like(s), lambda s: np.zeros_like(s)),
    "signed_quadratic": Generator(
        "signed_quadratic", lambda s: 0.5 * s * np.abs(s), lambda s: np.abs(s)
    ),
}


def get_generator(name: str) -> Generator:
    if name not in GENERATORS:
        raise ParameterError(f"unknown generator '{name}' (available: {', '.join(GENERATORS)})")
    return GENERATORS[name]


def jacobi_rule(law: PressureLaw, order: int) -> Tuple[FloatArray, FloatArray, float]:
    """Gauss-Jacobi nodes/weights for (1 - t^2)^b and their zeroth moment"""
    if order < 1:
        raise ParameterError("quadrature order must be positive")
    exponent = law.kernel_exponent
    nodes, weights = special.roots_jacobi(order, exponent, exponent)
    return nodes, weights, float(np.sum(weights))


def generate_pair(
    generator: Union[str, Generator], law: PressureLaw, quadrature_order: int = 64
) -> EntropyPair:
    """
    Entropy pair generated by psi through the normalised weak-entropy kernel

    eta = rho/I0 int (1-t^2)^b psi(u + k t) dt and
    q = rho/I0 int (1-t^2)^b (u + theta k t) psi(u + k t) dt with k = k(rho).

    Args:
        generator: Generator or preset name
        law: Polytropic law
        quadrature_order: Gauss-Jacobi points

    Returns:
        EntropyPair of kind GENERATED
    """
    _require_polytropic(law)
    gen = get_generator(generator) if isinstance(generator, str) else generator
    nodes, weights, norm = jacobi_rule(law, quadrature_order)
    theta = law.theta
    normalised = weights / norm

    def arguments(rho: FloatArray, u: FloatArray) -> Tuple[FloatArray, FloatArray]:
        k = np.asarray(law.sound_integral_k(rho))
        return u[..., None] + k[..., None] * nodes, k

    def eta_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        points, _ = arguments(rho, u)
        return rho * (gen.psi(points) @ normalised)

    def flux_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        points, k = arguments(rho, u)
        speed = u[..., None] + theta * k[..., None] * nodes
        return rho * ((speed * gen.psi(points)) @ normalised)

    def eta_m_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        points, _ = arguments(rho, u)
        return gen.dpsi(points) @ normalised

    def eta_rho_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        points, _ = arguments(rho, u)
        mean = gen.psi(points) @ normalised
        slope_u = gen.dpsi(points) @ normalised
        # rho k'(rho) = sqrt(P'(rho)) stays finite at vacuum
        rho_dk = np.sqrt(np.asarray(law.dpressure(rho)))
        slope_rho = (gen.dpsi(points) * nodes) @ normalised
        return mean + rho_dk * slope_rho - u * slope_u

    logger.debug(f"📋 Generated pair '{gen.name}' with {quadrature_order} Gauss-Jacobi points")
    return EntropyPair(
        PairKind.GENERATED,
        law,
        eta_fn,
        flux_fn,
        eta_m_fn,
        eta_rho_fn,
        quadrature_order=quadrature_order,
        label=gen.name,
    )


def mechanical_pair(law: PressureLaw) -> EntropyPair:
    """eta* = m^2/(2 rho) + rho e(rho) with q* = u (eta* + P)"""

    def eta_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        return 0.5 * rho * u**2 + rho * np.asarray(law.internal_energy(rho))

    def flux_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        return u * (eta_fn(rho, u) + np.asarray(law.pressure(rho)))

    def eta_m_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        return np.array(u, dtype=float, copy=True)

    def eta_rho_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        positive = rho > 0.0
        p_over_rho = np.where(
            positive, np.asarray(law.pressure(rho)) / np.where(positive, rho, 1.0), 0.0
        )
        return -0.5 * u**2 + np.asarray(law.internal_energy(rho)) + p_over_rho

    return EntropyPair(
        PairKind.MECHANICAL, law, eta_fn, flux_fn, eta_m_fn, eta_rho_fn, label="mechanical"
    )


# ----------------------------------------------------------------------
# special pair


def _half_moment(n: int, exponent: float) -> float:
    """int_0^1 s^n (1 - s^2)^b ds"""
    return 0.5 * float(special.beta(0.5 * (n + 1), exponent + 1.0))


def signed_moments(
    law: PressureLaw, rho: FloatArray, u: FloatArray, degree: int = 3
) -> Tuple[FloatArray, List[FloatArray]]:
    """
    S_n = int_{-1}^{1} s^n sign(u + k s)(1 - s^2)^b ds for n = 0..degree

    The sign changes at s0 = -u/k; the tails come from regularised
    incomplete beta functions of s0^2.
    """
    exponent = law.kernel_exponent
    k = np.asarray(law.sound_integral_k(rho), dtype=float)
    positive = k > 0.0
    kink = np.where(positive, -u / np.where(positive, k, 1.0), -np.sign(u))
    kink = np.clip(kink, -1.0, 1.0)
    squared = kink**2
    moments = []
    for n in range(degree + 1):
        half = _half_moment(n, exponent)
        incomplete = special.betainc(0.5 * (n + 1), exponent + 1.0, squared)
        sign = np.where(kink >= 0.0, -1.0, (-1.0) ** n)
        tail = half * (1.0 + sign * incomplete)
        full = 2.0 * half if n % 2 == 0 else 0.0
        moments.append(2.0 * tail - full)
    return k, moments


def special_pair_hash(law: PressureLaw) -> EntropyPair:
    """
    Pair generated by psi(s) = s|s|/2 with the raw kernel, in closed form

    eta# = rho/2 int (u+ks)|u+ks| w, q# = rho/2 int (u+theta ks)(u+ks)|u+ks| w,
    eta#_m = int |u+ks| w, eta#_rho = int (-u/2 + (theta+1/2) ks)|u+ks| w.
    """
    _require_polytropic(law)
    theta = law.theta

    def eta_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        k, (s0, s1, s2, _) = signed_moments(law, rho, u)
        return 0.5 * rho * (u**2 * s0 + 2.0 * u * k * s1 + k**2 * s2)

    def flux_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        k, (s0, s1, s2, s3) = signed_moments(law, rho, u)
        return (
            0.5
            * rho
            * (
                u**3 * s0
                + (2.0 + theta) * u**2 * k * s1
                + (1.0 + 2.0 * theta) * u * k**2 * s2
                + theta * k**3 * s3
            )
        )

    def eta_m_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        k, (s0, s1, _, _) = signed_moments(law, rho, u)
        return u * s0 + k * s1

    def eta_rho_fn(rho: FloatArray, u: FloatArray) -> FloatArray:
        k, (s0, s1, s2, _) = signed_moments(law, rho, u)
        return -0.5 * u**2 * s0 + theta * u * k * s1 + (theta + 0.5) * k**2 * s2

    return EntropyPair(
        PairKind.SPECIAL_HASH, law, eta_fn, flux_fn, eta_m_fn, eta_rho_fn, label="special_hash"
    )


# ----------------------------------------------------------------------
# checks


def sample_grid(
    resolution: int = 64, rho_range: Tuple[float, float] = (1e-4, 1e2), u_max: float = 1e2
) -> Tuple[FloatArray, FloatArray]:
    """Log-spaced densities and signed log-spaced velocities (including 0)"""
    rho = np.geomspace(rho_range[0], rho_range[1], resolution)
    magnitudes = np.geomspace(u_max * 1e-6, u_max, resolution)
    u = np.concatenate((-magnitudes[::-1], [0.0], magnitudes))
    return np.meshgrid(rho, u, indexing="ij")


def fitted_constant(values: FloatArray, reference: FloatArray) -> float:
    """max |values| / reference over points with reference > 0"""
    mask = (reference > 0.0) & np.isfinite(values)
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(values[mask]) / reference[mask]))


def cancellation_check(pair: EntropyPair, resolution: int = 64) -> float:
    """
    Empirical C with |q - u eta| <= C (rho^gamma |u| + rho^(gamma+theta))

    Returns:
        The fitted constant over a log-spaced (rho, u) grid with rho >= 1e-8
    """
    law = pair.law
    rho, u = sample_grid(resolution)
    rho = np.where(rho < RHO_EXCLUSION, RHO_EXCLUSION, rho)
    values = pair.evaluate(rho, u)
    reference = rho**law.gamma * np.abs(u) + rho ** (law.gamma + law.theta)
    return fitted_constant(values.flux - u * values.eta, reference)


@dataclass
class BoundFits:
    """Fitted constants of the special-pair estimates"""
    cancellation: float
    growth: float
    eta: float
    eta_m: float
    eta_rho: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "cancellation": self.cancellation,
            "growth": self.growth,
            "eta": self.eta,
            "eta_m": self.eta_m,
            "eta_rho": self.eta_rho,
        }


def special_pair_bounds(pair: EntropyPair, resolution: int = 64) -> BoundFits:
    """Fit every growth/size estimate of the special pair on one grid"""
    law = pair.law
    rho, u = sample_grid(resolution)
    values = pair.evaluate(rho, u)
    theta = law.theta
    growth_reference = rho * np.abs(u) ** 3 + rho ** (law.gamma + theta)
    positive_flux = values.flux > 0.0
    growth = float(np.max(growth_reference[positive_flux] / values.flux[positive_flux]))
    if not np.all(positive_flux):
        growth = np.inf
    return BoundFits(
        cancellation=cancellation_check(pair, resolution),
        growth=growth,
        eta=fitted_constant(values.eta, rho * u**2 + rho**law.gamma),
        eta_m=fitted_constant(values.eta_m, np.abs(u) + rho**theta),
        eta_rho=fitted_constant(values.eta_rho, u**2 + rho ** (2.0 * theta)),
    )


def refinement_drift(coarse: BoundFits, fine: BoundFits) -> Dict[str, float]:
    """Relative change of every fitted constant under grid refinement"""
    drift = {}
    for name, value in coarse.to_dict().items():
        refined = fine.to_dict()[name]
        drift[name] = abs(refined - value) / max(abs(refined), 1e-300)
    return drift


def compatibility_check(
    pair: EntropyPair,
    n_samples: int = 50,
    rho_range: Tuple[float, float] = (0.2, 3.0),
    u_range: Tuple[float, float] = (-2.0, 2.0),
    seed: int = 0,
    step: float = 1e-5,
) -> float:
    """
    Largest relative mismatch between finite-difference grad q and grad eta . grad F

    F(rho, m) = (m, m^2/rho + P), so q_rho = eta_m (P' - u^2) and
    q_m = eta_rho + 2 u eta_m.
    """
    rng = np.random.default_rng(seed)
    rho = rng.uniform(*rho_range, n_samples)
    u = rng.uniform(*u_range, n_samples)
    m = rho * u
    law = pair.law
    h_rho = step * rho
    h_m = step * np.maximum(np.abs(m), rho)
    q_rho = (pair.flux(rho + h_rho, m) - pair.flux(rho - h_rho, m)) / (2.0 * h_rho)
    q_m = (pair.flux(rho, m + h_m) - pair.flux(rho, m - h_m)) / (2.0 * h_m)
    eta_m = pair.eta_m(rho, m)
    eta_rho = pair.eta_rho(rho, m)
    predicted_rho = eta_m * (np.asarray(law.dpressure(rho)) - u**2)
    predicted_m = eta_rho + 2.0 * u * eta_m
    scale = np.abs(pair.flux(rho, m)) / rho + np.abs(predicted_rho) + np.abs(predicted_m) + 1e-12
    error = np.maximum(np.abs(q_rho - predicted_rho), np.abs(q_m - predicted_m)) / scale
    return float(np.max(error))


def mechanical_match(pair: EntropyPair, n_samples: int = 200, seed: int = 0) -> float:
    """Largest relative distance between a pair and the mechanical pair at random points"""
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.05, 5.0, n_samples)
    u = rng.uniform(-3.0, 3.0, n_samples)
    reference = mechanical_pair(pair.law).evaluate(rho, u)
    values = pair.evaluate(rho, u)
    worst = 0.0
    for name in ("eta", "flux", "eta_m", "eta_rho"):
        expected = getattr(reference, name)
        got = getattr(values, name)
        scale = np.maximum(np.abs(expected), 1.0)
        worst = max(worst, float(np.max(np.abs(got - expected) / scale)))
    return worst


def pair_checks(
    law: PressureLaw,
    resolution: int = 64,
    quadrature_order: int = 64,
    drift_limit: float = 0.05,
    seed: int = 0,
) -> Dict[str, CheckResult]:
    """Self-checks for the polytropic pairs; `seed` draws the random (rho, u) samples"""
    checks: Dict[str, CheckResult] = {}
    generated = generate_pair("quadratic", law, quadrature_order)
    checks["generated_matches_mechanical"] = at_most(
        "generated_matches_mechanical", mechanical_match(generated, seed=seed), 1e-8
    )
    special_pair = special_pair_hash(law)
    rho = np.geomspace(1e-3, 1e2, 50)
    checks["special_eta_at_rest"] = at_most(
        "special_eta_at_rest", float(np.max(np.abs(special_pair.evaluate(rho, 0.0).eta))), 1e-12
    )
    for name, candidate in (("mechanical", mechanical_pair(law)), ("special_hash", special_pair)):
        checks[f"compatibility_{name}"] = at_most(
            f"compatibility_{name}", compatibility_check(candidate, seed=seed), 1e-4
        )
    coarse = special_pair_bounds(special_pair, resolution)
    fine = special_pair_bounds(special_pair, 2 * resolution)
    for name, drift in refinement_drift(coarse, fine).items():
        checks[f"special_{name}_drift"] = at_most(
            f"special_{name}_drift",
            drift,
            drift_limit,
            detail=f"C={fine.to_dict()[name]:.6g}",
        )
    return checks


if __name__ == "__main__":
    logger.info("🧪 Testing entropy pairs...")
    law = PressureLaw(gamma=2.0)
    for check in pair_checks(law, resolution=32).values():
        status = "✅" if check.passed else "❌"
        logger.info(f"  {status} {check.name}: {check.value:.3g} (<= {check.threshold:g})")
