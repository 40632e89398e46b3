#!/usr/bin/env python3
"""
Entropy Suite
Self-checks of the entropy pairs and export of the Goursat table
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
from loguru import logger

from src.config.loader import RunConfig
from src.diagnostics.checks import CheckResult, at_most, failed
from src.entropy.goursat import bound_constants, goursat_checks
from src.entropy.pairs import (
    compatibility_check,
    generate_pair,
    pair_checks,
    special_pair_bounds,
    special_pair_hash,
)
from src.errors import ConfigError, ParameterError


@dataclass
class EntropyReport:
    law: Dict[str, Any]
    flags: Dict[str, CheckResult] = field(default_factory=dict)
    constants: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not failed(self.flags.values())

    def to_json(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = {
            "law": self.law,
            "passed": self.passed,
            "constants": self.constants,
            "flags": {name: check.to_dict() for name, check in self.flags.items()},
        }
        with open(path, "w") as f:
            json.dump(data, f, indent=2, sort_keys=True)
        logger.info(f"💾 Entropy report written to {path}")
        return path


def run_entropy(config: RunConfig, directory: Optional[Path] = None) -> EntropyReport:
    """
    Build the pairs of the configured law and check them

    Polytropic laws get the generated, mechanical and special-pair checks;
    every law gets the Goursat residual, boundary, symmetry and bound checks.

    Args:
        config: Validated configuration
        directory: Output directory for entropy_report.json and goursat_table.csv

    Returns:
        EntropyReport
    """
    section = config.entropy
    law = config.pressure_law()
    report = EntropyReport(law=law.to_dict())
    logger.info(f"🧪 Entropy checks for the {law.kind.value} law")

    if law.is_polytropic:
        report.flags.update(
            pair_checks(
                law,
                section.resolution,
                section.quadrature_order,
                section.drift_limit,
                seed=config.output.seed,
            )
        )
        bounds = special_pair_bounds(special_pair_hash(law), section.resolution)
        report.constants.update({f"special_{k}": v for k, v in bounds.to_dict().items()})
        try:
            generated = generate_pair(section.generator, law, section.quadrature_order)
        except ParameterError as e:
            raise ConfigError(f"entropy: {e}") from e
        rho = np.geomspace(1e-3, 1e2, 40)
        u = np.linspace(-3.0, 3.0, 41)
        values = generated.evaluate(rho[:, None], u[None, :])
        size = float(np.max(np.abs(values.eta)))
        report.constants[f"generator_{section.generator}_max_eta"] = size
        if size > 0.0:
            mismatch = compatibility_check(generated, seed=config.output.seed)
            report.flags["generator_compatibility"] = at_most(
                "generator_compatibility", mismatch, 1e-4
            )
    else:
        logger.info("📋 General law: kernel pairs skipped, Goursat pair only")

    table, checks = goursat_checks(
        law,
        section.rho_max,
        section.grid_resolution,
        section.residual_limit,
        section.drift_limit,
        section.growth_limit,
    )
    report.flags.update(checks)
    report.constants.update({f"goursat_{k}": v for k, v in bound_constants(law, table).items()})

    if directory is not None:
        directory = Path(directory)
        table.to_csv(directory / "goursat_table.csv")
        report.to_json(directory / "entropy_report.json")
    for check in report.flags.values():
        status = "✅" if check.passed else "❌"
        logger.info(f"  {status} {check.name}: {check.value:.3g} (threshold {check.threshold:g})")
    return report

