#!/usr/bin/env python3
"""
Configuration Loader
Loads, validates and manages the run configuration
"""

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from loguru import logger

from src.diagnostics.estimates import Window
from src.diagnostics.report import Tolerances
from src.errors import ConfigError, ParameterError
from src.forces.nonlocal_terms import AlignmentKernel, KernelKind, InteractionKind, NonlocalConfig
from src.initial.profiles import PRESETS, RawInitialData, make_preset
from src.pressure.laws import LawKind, PressureLaw
from src.solver.lagrangian import SolverConfig, ViscousScheme

LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL")


@dataclass
class PressureSection:
    """Pressure law"""
    kind: str = "polytropic"
    gamma: float = 2.0
    kappa: Optional[float] = None
    gamma2: Optional[float] = None
    kappa2: Optional[float] = None
    rho_star_low: float = 0.25
    rho_star_high: float = 4.0


@dataclass
class AlignmentSection:
    kind: str = "off"
    strength: float = 1.0
    width: float = 1.0
    table_x: List[float] = field(default_factory=list)
    table_values: List[float] = field(default_factory=list)
    cutoff: Optional[float] = None


@dataclass
class NonlocalSection:
    """Damping, alignment and interaction"""
    damping: float = 0.0
    alignment: AlignmentSection = field(default_factory=AlignmentSection)
    interaction: str = "off"


@dataclass
class InitialSection:
    """Initial-profile preset and its construction"""
    preset: str = "gaussian_bump"
    parameters: Dict[str, Any] = field(default_factory=dict)
    halfwidth: Optional[float] = None
    resolution: int = 64
    edge_density: float = 5e-2


@dataclass
class LadderSection:
    """Viscosity parameters: a single epsilon, an explicit list, or eps0 with halvings"""
    epsilon: float = 1e-2
    epsilons: List[float] = field(default_factory=list)
    epsilon0: Optional[float] = None
    halvings: int = 0
    alpha: float = 1.0
    p_exponent: float = 2.5

    def ladder(self) -> List[float]:
        if self.epsilons:
            return [float(eps) for eps in self.epsilons]
        if self.epsilon0 is not None:
            return [float(self.epsilon0) / 2**k for k in range(self.halvings + 1)]
        return [float(self.epsilon)]


@dataclass
class SolverSection:
    """Discretisation and time stepping"""
    n_cells: int = 256
    cfl: float = 0.5
    dt_max: float = 1e-2
    vacuum_floor: float = 1e-12
    viscous_scheme: str = "backward_euler"
    t_end: float = 1.0
    n_outputs: int = 10
    output_times: List[float] = field(default_factory=list)
    strang: bool = False
    freeze_geometry: bool = False
    exponential_damping: bool = True
    max_retries: int = 8
    log_every: int = 500
    max_steps: int = 5_000_000
    end_mass_ratio: float = 1e-3
    grading: float = 1.15


@dataclass
class DiagnosticsSection:
    """Window K, tolerances and resampling"""
    window: Optional[List[float]] = None
    energy_tolerance: float = 0.01
    boundary_tolerance: float = 0.02
    mass_tolerance: float = 1e-12
    alignment_tolerance: float = 1e-10
    second_moment_slack: float = 1e-3
    margin: float = 0.5
    cauchy_slack: float = 0.1
    uniform_spread: float = 0.1
    budget_rate: float = 0.2
    resample_points: int = 4096
    q_exponent: float = 2.0
    plots: bool = True


@dataclass
class EntropySection:
    """Entropy-pair self-checks and Goursat tables"""
    generator: str = "quadratic"
    quadrature_order: int = 64
    resolution: int = 64
    rho_max: float = 4.0
    grid_resolution: int = 512
    residual_limit: float = 1e-3
    drift_limit: float = 0.05
    growth_limit: float = 1e3
    dissipation_pair: str = "mechanical"


@dataclass
class OutputSection:
    directory: str = "results"
    workers: int = 4
    log_level: str = "INFO"
    seed: int = 0


@dataclass
class RunConfig:
    """Complete run configuration"""
    name: str = "run"
    pressure: PressureSection = field(default_factory=PressureSection)
    nonlocal_forces: NonlocalSection = field(default_factory=NonlocalSection)
    initial: InitialSection = field(default_factory=InitialSection)
    viscosity: LadderSection = field(default_factory=LadderSection)
    solver: SolverSection = field(default_factory=SolverSection)
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)
    entropy: EntropySection = field(default_factory=EntropySection)
    output: OutputSection = field(default_factory=OutputSection)

    # ------------------------------------------------------------------
    # runtime objects

    def pressure_law(self) -> PressureLaw:
        section = self.pressure
        try:
            return PressureLaw(
                kind=LawKind(section.kind),
                gamma=section.gamma,
                kappa=section.kappa,
                gamma2=section.gamma2,
                kappa2=section.kappa2,
                rho_star_low=section.rho_star_low,
                rho_star_high=section.rho_star_high,
            )
        except (ParameterError, ValueError) as e:
            raise ConfigError(f"pressure: {e}") from e

    def nonlocal_config(self) -> NonlocalConfig:
        section = self.nonlocal_forces
        kernel = section.alignment
        try:
            return NonlocalConfig(
                damping=section.damping,
                alignment=AlignmentKernel(
                    kind=KernelKind(kernel.kind),
                    strength=kernel.strength,
                    width=kernel.width,
                    table_x=tuple(kernel.table_x),
                    table_values=tuple(kernel.table_values),
                    cutoff=kernel.cutoff,
                ),
                interaction=InteractionKind(section.interaction),
            )
        except (ParameterError, ValueError) as e:
            raise ConfigError(f"nonlocal: {e}") from e

    def solver_config(self) -> SolverConfig:
        section = self.solver
        try:
            return SolverConfig(
                cfl=section.cfl,
                dt_max=section.dt_max,
                vacuum_floor=section.vacuum_floor,
                viscous_scheme=ViscousScheme(section.viscous_scheme),
                t_end=section.t_end,
                n_outputs=section.n_outputs,
                output_times=tuple(section.output_times),
                strang=section.strang,
                freeze_geometry=section.freeze_geometry,
                exponential_damping=section.exponential_damping,
                max_retries=section.max_retries,
                log_every=section.log_every,
                max_steps=section.max_steps,
                end_mass_ratio=section.end_mass_ratio,
                grading=section.grading,
            )
        except (ParameterError, ValueError) as e:
            raise ConfigError(f"solver: {e}") from e

    def raw_initial_data(self) -> RawInitialData:
        try:
            return make_preset(self.initial.preset, **self.initial.parameters)
        except (ParameterError, TypeError) as e:
            raise ConfigError(f"initial: {e}") from e

    def tolerances(self) -> Tolerances:
        """Flag thresholds; the margin flag is informational with a halfwidth override"""
        section = self.diagnostics
        return Tolerances(
            energy=section.energy_tolerance,
            boundary_density=section.boundary_tolerance,
            mass=section.mass_tolerance,
            alignment=section.alignment_tolerance,
            second_moment_slack=section.second_moment_slack,
            margin=section.margin,
            enforce_margin=self.initial.halfwidth is None,
        )

    def window(self) -> Optional[Window]:
        if self.diagnostics.window is None:
            return None
        left, right = self.diagnostics.window
        return Window(float(left), float(right))

    def p_limit(self) -> float:
        """gamma/(gamma - alpha) for the smaller adiabatic exponent of the law"""
        gamma = self.pressure.gamma
        if self.pressure.gamma2 is not None and self.pressure.kind != LawKind.POLYTROPIC.value:
            gamma = min(gamma, self.pressure.gamma2)
        alpha = self.viscosity.alpha
        return gamma / (gamma - alpha) if gamma > alpha else float("inf")

    # ------------------------------------------------------------------
    # validation

    def problems(self) -> List[str]:
        """Every validation failure, empty when the configuration is usable"""
        issues: List[str] = []
        alpha = self.viscosity.alpha
        if not 2.0 / 3.0 < alpha <= 1.0:
            issues.append(f"viscosity.alpha must lie in (2/3, 1] (got {alpha})")
        limit = self.p_limit()
        if not self.viscosity.p_exponent > limit:
            issues.append(
                f"viscosity.p_exponent={self.viscosity.p_exponent} must exceed "
                f"gamma/(gamma - alpha)={limit:.4g}: the free boundary expansion estimate "
                f"b(t) >= b/2 needs p > gamma/(gamma - alpha)"
            )
        ladder = self.viscosity.ladder()
        if not ladder or any(not eps > 0.0 for eps in ladder):
            issues.append("viscosity: every epsilon must be positive")
        if self.viscosity.halvings < 0:
            issues.append("viscosity.halvings must be non-negative")
        if self.initial.preset not in PRESETS:
            issues.append(
                f"initial.preset '{self.initial.preset}' unknown (available: {', '.join(PRESETS)})"
            )
        if self.initial.halfwidth is not None and not self.initial.halfwidth > 2.0:
            issues.append("initial.halfwidth must exceed 2")
        if not 0.0 <= self.initial.edge_density < 1.0:
            issues.append("initial.edge_density must lie in [0, 1)")
        if self.solver.n_cells < 2:
            issues.append("solver.n_cells must be at least 2")
        if self.output.workers < 1:
            issues.append("output.workers must be at least 1")
        if self.output.log_level.upper() not in LOG_LEVELS:
            issues.append(
                f"output.log_level '{self.output.log_level}' unknown "
                f"(available: {', '.join(LOG_LEVELS)})"
            )
        if self.diagnostics.window is not None and len(self.diagnostics.window) != 2:
            issues.append("diagnostics.window must be [left, right]")
        for build in (self.pressure_law, self.nonlocal_config, self.solver_config):
            try:
                build()
            except ConfigError as e:
                issues.append(str(e))
        if self.diagnostics.window is not None and len(self.diagnostics.window) == 2:
            try:
                self.window()
            except ParameterError as e:
                issues.append(f"diagnostics: {e}")
        return issues

    def validate(self) -> None:
        issues = self.problems()
        if issues:
            raise ConfigError("invalid configuration:\n  - " + "\n  - ".join(issues))

    def require_ladder(self, minimum: int = 3) -> List[float]:
        ladder = self.viscosity.ladder()
        if len(ladder) < minimum:
            raise ConfigError(
                f"a sweep needs at least {minimum} epsilon values (got {len(ladder)})"
            )
        return ladder

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["nonlocal"] = data.pop("nonlocal_forces")
        return data


_SECTIONS = {
    "pressure": PressureSection,
    "initial": InitialSection,
    "viscosity": LadderSection,
    "solver": SolverSection,
    "diagnostics": DiagnosticsSection,
    "entropy": EntropySection,
    "output": OutputSection,
}


class ConfigLoader:
    """Configuration loader and manager"""

    def __init__(self, config_path: Optional[Path] = None, validate: bool = True):
        """
        Initialize configuration loader

        Args:
            config_path: Path to a YAML (or .json) configuration file (optional)
            validate: Raise ConfigError for an unusable configuration
        """
        self.config_path = Path(config_path) if config_path is not None else None
        self.config = RunConfig()

        self._load_config()
        self._load_env_overrides()
        if validate:
            self.config.validate()

        logger.info(f"⚙️ Configuration loaded: {self.config.name}")
        logger.debug(f"🔧 Law: {self.config.pressure.kind}, gamma={self.config.pressure.gamma}")
        logger.debug(f"🔧 Ladder: {self.config.viscosity.ladder()}")

    def _load_config(self) -> None:
        """Load configuration from file"""
        if self.config_path is None:
            logger.info("📋 Using default configuration")
            return
        if not self.config_path.exists():
            raise ConfigError(f"configuration file not found: {self.config_path}")

        logger.info(f"📋 Loading config from: {self.config_path}")
        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                if self.config_path.suffix.lower() == ".json":
                    config_data = json.load(f)
                else:
                    config_data = yaml.safe_load(f)
        except (OSError, yaml.YAMLError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot parse {self.config_path}: {e}") from e

        if config_data is None:
            config_data = {}
        if not isinstance(config_data, dict):
            raise ConfigError(f"{self.config_path} must contain a mapping of sections")
        self._apply_config_data(config_data)
        logger.success("✅ Configuration file loaded")

    @staticmethod
    def _fill(target: Any, data: Any, section: str) -> None:
        """Copy known keys of one section onto its dataclass"""
        if data is None:
            return
        if not isinstance(data, dict):
            raise ConfigError(f"section '{section}' must be a mapping")
        for key, value in data.items():
            if not hasattr(target, key):
                raise ConfigError(f"unknown key '{section}.{key}'")
            setattr(target, key, data.get(key, getattr(target, key)))

    def _apply_config_data(self, config_data: Dict[str, Any]) -> None:
        """Apply configuration data to config object"""
        known = set(_SECTIONS) | {"name", "nonlocal"}
        unknown = sorted(set(config_data) - known)
        if unknown:
            raise ConfigError(f"unknown sections: {', '.join(unknown)}")

        self.config.name = str(config_data.get("name", self.config.name))
        for name in _SECTIONS:
            self._fill(getattr(self.config, name), config_data.get(name), name)

        nonlocal_data = config_data.get("nonlocal")
        if nonlocal_data is not None:
            if not isinstance(nonlocal_data, dict):
                raise ConfigError("section 'nonlocal' must be a mapping")
            alignment = dict(nonlocal_data).get("alignment")
            rest = {k: v for k, v in nonlocal_data.items() if k != "alignment"}
            self._fill(self.config.nonlocal_forces, rest, "nonlocal")
            self._fill(self.config.nonlocal_forces.alignment, alignment, "nonlocal.alignment")

    def _load_env_overrides(self) -> None:
        """Load environment variable overrides"""
        workers = os.getenv("NLNS_WORKERS")
        if workers:
            try:
                self.config.output.workers = int(workers)
                logger.debug(f"🔧 Worker override: {self.config.output.workers}")
            except ValueError:
                logger.warning(f"⚠️ Invalid worker count in NLNS_WORKERS: {workers}")

        output_dir = os.getenv("NLNS_OUTPUT_DIR")
        if output_dir:
            self.config.output.directory = output_dir
            logger.debug(f"🔧 Output directory override: {output_dir}")

        log_level = os.getenv("NLNS_LOG_LEVEL")
        if log_level:
            self.config.output.log_level = log_level.upper()
            logger.debug(f"📝 Log level override: {self.config.output.log_level}")

    def save_config(self, path: Optional[Path] = None) -> Path:
        """Save current configuration to file"""
        save_path = Path(path or self.config_path or Path("config.yml"))
        data = self.config.to_dict()
        with open(save_path, "w", encoding="utf-8") as f:
            if save_path.suffix.lower() == ".json":
                json.dump(data, f, indent=2, sort_keys=True)
            else:
                yaml.safe_dump(data, f, default_flow_style=False, sort_keys=False)
        logger.success(f"✅ Configuration saved to: {save_path}")
        return save_path

    def get_config_summary(self) -> str:
        """Get human-readable configuration summary"""
        cfg = self.config
        alignment = cfg.nonlocal_forces.alignment
        lines = [
            f"📋 Configuration Summary: {cfg.name}",
            "=" * 30,
            f"Pressure law: {cfg.pressure.kind} (gamma={cfg.pressure.gamma})",
            f"Viscosity: alpha={cfg.viscosity.alpha}, p={cfg.viscosity.p_exponent}",
            f"Epsilon ladder: {', '.join(f'{eps:g}' for eps in cfg.viscosity.ladder())}",
            f"Damping: {cfg.nonlocal_forces.damping}",
            f"Alignment: {alignment.kind} (strength={alignment.strength})",
            f"Interaction: {cfg.nonlocal_forces.interaction}",
            f"Initial data: {cfg.initial.preset} {cfg.initial.parameters or ''}".rstrip(),
            f"Cells: {cfg.solver.n_cells}, t_end={cfg.solver.t_end}, cfl={cfg.solver.cfl}",
            f"Output: {cfg.output.directory} ({cfg.output.workers} workers)",
        ]
        return "\n".join(lines)

    @property
    def pressure(self) -> PressureSection:
        return self.config.pressure

    @property
    def solver(self) -> SolverSection:
        return self.config.solver

    @property
    def output(self) -> OutputSection:
        return self.config.output


if __name__ == "__main__":
    logger.info("🧪 Testing Configuration Loader...")
    loader = ConfigLoader()
    print(loader.get_config_summary())
    logger.success("✅ Configuration loader test completed")
