#!/usr/bin/env python3
"""
Error Types
Exception hierarchy shared by the simulator, the diagnostics and the CLI
"""


class SimulationError(Exception):
    """Base class for every failure raised by the lab"""


class ConfigError(SimulationError):
    """Run configuration is malformed or violates a parameter constraint"""


class ParameterError(SimulationError, ValueError):
    """Invalid physical or numerical parameter (e.g. gamma <= 1, negative density)"""


class StructuralError(SimulationError):
    """Inconsistent discrete structure: unordered nodes, mismatched time axes, bad windows"""


class VacuumError(SimulationError):
    """A construction step needs strictly positive density but found vacuum"""


class CellInversionError(SimulationError):
    """A time step kept producing non-monotone node positions after all retries"""

    def __init__(self, time: float, dt: float, attempts: int):
        self.time = time
        self.dt = dt
        self.attempts = attempts
        super().__init__(
            f"cell inversion at t={time:.6g}: step rejected {attempts} times (last dt={dt:.3g})"
        )


class GoursatInstabilityError(SimulationError):
    """The characteristic march for the Goursat entropy grew without bound"""
