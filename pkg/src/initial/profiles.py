#!/usr/bin/env python3
"""
Raw Initial Profiles
Finite-mass, finite-energy density/momentum pairs: closed-form presets and sampled tables
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import numpy.typing as npt
from scipy import integrate

from src.errors import ConfigError, ParameterError

FloatArray = npt.NDArray[np.float64]
Field = Callable[[FloatArray], FloatArray]


@dataclass
class Profile:
    """Sampled field on increasing abscissae"""
    x: FloatArray
    values: FloatArray

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.x.shape != self.values.shape:
            raise ParameterError("profile abscissae and values differ in length")

    def integral(self) -> float:
        return float(integrate.trapezoid(self.values, self.x))

    def scaled(self, factor: float) -> "Profile":
        return Profile(self.x.copy(), self.values * factor)


@dataclass
class RawInitialData:
    """
    Raw data (rho0, m0) with rho0 vanishing outside `support`.

    Mass, second moment and kinetic energy are integrated once and cached.
    """
    rho0: Field
    m0: Field
    support: Tuple[float, float]
    name: str = "custom"
    parameters: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        low, high = self.support
        if not high > low:
            raise ParameterError("support interval must have positive length")

    def _integrate(self, integrand: Callable[[float], float]) -> float:
        low, high = self.support
        breaks = np.linspace(low, high, 33)
        return float(
            sum(
                integrate.quad(integrand, a, b, limit=200, epsabs=0.0, epsrel=1e-12)[0]
                for a, b in zip(breaks[:-1], breaks[1:])
            )
        )

    def density(self, x: FloatArray) -> FloatArray:
        x = np.asarray(x, dtype=float)
        low, high = self.support
        inside = (x >= low) & (x <= high)
        return np.where(inside, np.maximum(self.rho0(x), 0.0), 0.0)

    def momentum(self, x: FloatArray) -> FloatArray:
        x = np.asarray(x, dtype=float)
        low, high = self.support
        inside = (x >= low) & (x <= high)
        return np.where(inside, self.m0(x), 0.0)

    def scaled_momentum(self, x: FloatArray) -> FloatArray:
        """m0/sqrt(rho0), zero where rho0 vanishes"""
        rho = self.density(x)
        m = self.momentum(x)
        positive = rho > 0.0
        return np.where(positive, m / np.sqrt(np.where(positive, rho, 1.0)), 0.0)

    def effective_support(self, edge_density: float, samples: int = 4097) -> Tuple[float, float]:
        """Outermost points of the support where rho0 >= edge_density * max rho0"""
        low, high = self.support
        x = np.linspace(low, high, samples)
        rho = self.density(x)
        kept = np.flatnonzero(rho >= edge_density * float(np.max(rho)))
        if kept.size < 2:
            return self.support
        return float(x[kept[0]]), float(x[kept[-1]])

    @cached_property
    def total_mass(self) -> float:
        return self._integrate(lambda y: float(self.density(np.array(y))))

    @cached_property
    def second_moment(self) -> float:
        return self._integrate(lambda y: y * y * float(self.density(np.array(y))))

    @cached_property
    def kinetic_energy(self) -> float:
        """1/2 int m0^2/rho0"""
        return 0.5 * self._integrate(lambda y: float(self.scaled_momentum(np.array(y))) ** 2)

    def validate(self) -> None:
        if not (np.isfinite(self.total_mass) and self.total_mass > 0.0):
            raise ParameterError(
                f"initial mass must be positive and finite (got {self.total_mass})"
            )
        if not np.isfinite(self.second_moment):
            raise ParameterError("initial second moment must be finite")
        if not np.isfinite(self.kinetic_energy):
            raise ParameterError("initial kinetic energy must be finite")

    @classmethod
    def from_table(
        cls, x: FloatArray, rho: FloatArray, m: Optional[FloatArray] = None, name: str = "table"
    ) -> "RawInitialData":
        """Linear interpolation of sampled (rho0, m0); zero outside the sampled range"""
        xs = np.asarray(x, dtype=float)
        rhos = np.asarray(rho, dtype=float)
        ms = np.zeros_like(rhos) if m is None else np.asarray(m, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or np.any(np.diff(xs) <= 0.0):
            raise ParameterError("table abscissae must be strictly increasing")
        if rhos.shape != xs.shape or ms.shape != xs.shape:
            raise ParameterError("table columns differ in length")
        if np.any(rhos < 0.0):
            raise ParameterError("table density must be non-negative")
        return cls(
            rho0=lambda y: np.interp(y, xs, rhos, left=0.0, right=0.0),
            m0=lambda y: np.interp(y, xs, ms, left=0.0, right=0.0),
            support=(float(xs[0]), float(xs[-1])),
            name=name,
        )


# ----------------------------------------------------------------------
# velocity shapes


def _velocity_shape(kind: str, amplitude: float, scale: float) -> Field:
    if kind == "zero" or amplitude == 0.0:
        return lambda y: np.zeros_like(np.asarray(y, dtype=float))
    if kind == "linear":
        return lambda y: amplitude * np.asarray(y, dtype=float)
    if kind == "tanh":
        return lambda y: amplitude * np.tanh(np.asarray(y, dtype=float) / scale)
    if kind == "wave":
        return lambda y: amplitude * np.sin(np.pi * np.asarray(y, dtype=float) / scale)
    raise ConfigError(f"unknown velocity profile '{kind}' (zero, linear, tanh, wave)")


def _smooth_edge(t: FloatArray) -> FloatArray:
    t = np.clip(t, 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


# ----------------------------------------------------------------------
# presets


def gaussian_bump(
    mass: float = 1.0,
    center: float = 0.0,
    width: float = 0.5,
    velocity: str = "zero",
    velocity_amplitude: float = 0.0,
) -> RawInitialData:
    """Gaussian of the given mass, truncated at 8 widths"""
    height = mass / (np.sqrt(2.0 * np.pi) * width)
    rho0 = lambda y: height * np.exp(-0.5 * ((np.asarray(y) - center) / width) ** 2)  # noqa: E731
    shape = _velocity_shape(velocity, velocity_amplitude, max(width, 1e-12))
    return RawInitialData(
        rho0=rho0,
        m0=lambda y: rho0(y) * shape(y),
        support=(center - 8.0 * width, center + 8.0 * width),
        name="gaussian_bump",
        parameters={"mass": mass, "center": center, "width": width},
    )


def double_bump(
    mass: float = 1.0,
    separation: float = 2.0,
    width: float = 0.4,
    velocity: str = "zero",
    velocity_amplitude: float = 0.0,
) -> RawInitialData:
    """Two equal Gaussians at +-separation/2"""
    half = 0.5 * separation
    height = 0.5 * mass / (np.sqrt(2.0 * np.pi) * width)

    def rho0(y: FloatArray) -> FloatArray:
        y = np.asarray(y, dtype=float)
        return height * (
            np.exp(-0.5 * ((y - half) / width) ** 2) + np.exp(-0.5 * ((y + half) / width) ** 2)
        )

    shape = _velocity_shape(velocity, velocity_amplitude, max(half, 1e-12))
    return RawInitialData(
        rho0=rho0,
        m0=lambda y: rho0(y) * shape(y),
        support=(-half - 8.0 * width, half + 8.0 * width),
        name="double_bump",
        parameters={"mass": mass, "separation": separation, "width": width},
    )


def compact_plateau(
    mass: float = 1.0,
    halfwidth: float = 1.0,
    edge: float = 0.25,
    velocity: str = "zero",
    velocity_amplitude: float = 0.0,
) -> RawInitialData:
    """Flat top on [-halfwidth, halfwidth] with C^2 edges of length `edge`"""
    if edge <= 0.0 or halfwidth <= 0.0:
        raise ParameterError("plateau halfwidth and edge must be positive")
    height = mass / (2.0 * halfwidth + edge)

    def rho0(y: FloatArray) -> FloatArray:
        y = np.asarray(y, dtype=float)
        return height * _smooth_edge((halfwidth + edge - np.abs(y)) / edge)

    shape = _velocity_shape(velocity, velocity_amplitude, halfwidth + edge)
    return RawInitialData(
        rho0=rho0,
        m0=lambda y: rho0(y) * shape(y),
        support=(-halfwidth - edge, halfwidth + edge),
        name="compact_plateau",
        parameters={"mass": mass, "halfwidth": halfwidth, "edge": edge},
    )


PRESETS: Dict[str, Callable[..., RawInitialData]] = {
    "gaussian_bump": gaussian_bump,
    "double_bump": double_bump,
    "compact_plateau": compact_plateau,
}


def make_preset(name: str, **parameters: float) -> RawInitialData:
    if name not in PRESETS:
        raise ConfigError(f"unknown initial preset '{name}' (available: {', '.join(PRESETS)})")
    raw = PRESETS[name](**parameters)
    raw.validate()
    return raw
