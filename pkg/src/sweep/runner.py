#!/usr/bin/env python3
"""
Run Orchestration
Single simulations and parallel epsilon ladders: initial data, solver,
diagnostics and artifacts
"""

import asyncio
import json
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from loguru import logger

from src.config.loader import RunConfig
from src.diagnostics.checks import CheckResult, at_least, at_most, failed
from src.diagnostics.estimates import (
    ConvergenceMetric,
    Window,
    convergence_metric,
    default_window,
    fitted_rate,
    uniform_growth,
    uniform_spread,
    worst_ratio,
)
from src.diagnostics.report import DiagnosticsReport, analyze
from src.entropy.dissipation import dissipation_residual
from src.entropy.goursat import goursat_hat
from src.entropy.pairs import EntropyPair, mechanical_pair, special_pair_hash
from src.errors import SimulationError
from src.initial.construction import ApproxInitialData, build_initial_data
from src.pressure.laws import PressureLaw
from src.solver.lagrangian import run
from src.solver.trajectory import Trajectory


@dataclass
class RunResult:
    """Artifacts of one simulation"""
    label: str
    epsilon: float
    report: DiagnosticsReport
    trajectory: Trajectory
    initial: Dict[str, float]
    directory: Optional[Path] = None

    @property
    def passed(self) -> bool:
        return self.report.passed


def run_label(epsilon: float) -> str:
    return f"eps_{epsilon:.6g}"


def analysis_window(config: RunConfig) -> Window:
    """Configured K, else the central half of the raw support above the edge density"""
    window = config.window()
    if window is not None:
        return window
    support = config.raw_initial_data().effective_support(config.initial.edge_density)
    return default_window(support)


def entropy_pair_for(
    config: RunConfig, law: PressureLaw, trajectory: Trajectory
) -> Optional[EntropyPair]:
    name = config.entropy.dissipation_pair
    if name == "none":
        return None
    if name == "special_hash" and law.is_polytropic:
        return special_pair_hash(law)
    if name in ("special_hash", "goursat_hat"):
        peak = max(float(np.max(state.cell_rho)) for state in trajectory.states)
        rho_max = max(config.entropy.rho_max, 1.05 * peak)
        return goursat_hat(law, rho_max, config.entropy.resolution)
    return mechanical_pair(law)


def build_initial(config: RunConfig, law: PressureLaw, epsilon: float) -> ApproxInitialData:
    return build_initial_data(
        config.raw_initial_data(),
        law,
        epsilon,
        config.viscosity.alpha,
        config.viscosity.p_exponent,
        halfwidth=config.initial.halfwidth,
        resolution=config.initial.resolution,
        edge_density=config.initial.edge_density,
    )


def run_single(
    config: RunConfig,
    epsilon: float,
    directory: Optional[Path] = None,
    plots: Optional[bool] = None,
) -> RunResult:
    """
    Construct initial data, integrate, analyse and (optionally) write artifacts

    Args:
        config: Validated run configuration
        epsilon: Viscosity parameter of this run
        directory: Run directory; nothing is written when None
        plots: Override diagnostics.plots

    Returns:
        RunResult with the report and trajectory
    """
    label = run_label(epsilon)
    law = config.pressure_law()
    forces = config.nonlocal_config()
    data = build_initial(config, law, epsilon)
    trajectory = run(
        data, law, forces, config.solver_config(), n_cells=config.solver.n_cells, label=label
    )

    window = analysis_window(config)
    initial_energy = data.E0 if forces.interaction_enabled else data.E0 - data.interaction_energy
    report = analyze(trajectory, law, forces, config.tolerances(), window, initial_energy)
    report.metadata["initial"] = data.summary()
    report.add(at_most("initial_mass", data.mass_error, 1e-10))

    pair = entropy_pair_for(config, law, trajectory) if len(trajectory) > 1 else None
    if pair is not None:
        dissipation = dissipation_residual(trajectory, pair, forces, window)
        report.metadata["entropy_dissipation"] = {"pair": pair.label, **dissipation.summary()}

    result = RunResult(label, epsilon, report, trajectory, data.summary(), directory)
    if directory is not None:
        write_run(result, data, config.diagnostics.plots if plots is None else plots)
    return result


def write_run(result: RunResult, data: ApproxInitialData, plots: bool) -> None:
    """Run directory layout: report.json, series/, snapshots/, plots/, initial.csv"""
    directory = Path(result.directory or ".")
    directory.mkdir(parents=True, exist_ok=True)
    result.trajectory.write(directory)
    result.report.write_series(directory / "series")
    result.report.to_json(directory / "report.json")
    data.to_csv(directory / "initial.csv")
    if plots:
        from src.diagnostics.plots import plot_boundary_trace, plot_energy_budget

        plot_energy_budget(result.report, directory / "plots" / "energy_budget.svg")
        plot_boundary_trace(result.report, directory / "plots" / "boundary_density.svg")


# ----------------------------------------------------------------------
# sweeps


@dataclass
class SweepReport:
    """Ladder-level distances, uniformity checks and the member summaries"""
    epsilons: List[float]
    distances: List[Dict[str, Any]] = field(default_factory=list)
    members: List[Dict[str, Any]] = field(default_factory=list)
    flags: Dict[str, CheckResult] = field(default_factory=dict)
    error: Optional[str] = None

    def add(self, check: CheckResult) -> None:
        self.flags[check.name] = check

    @property
    def passed(self) -> bool:
        return self.error is None and not failed(self.flags.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilons": self.epsilons,
            "passed": self.passed,
            "error": self.error,
            "distances": self.distances,
            "members": self.members,
            "flags": {name: check.to_dict() for name, check in self.flags.items()},
        }

    def to_json(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
        logger.info(f"💾 Sweep report written to {path}")
        return path

    def write_ladder(self, path: Path) -> Path:
        """Initial-data ladder and per-member functionals as CSV"""
        columns = [
            "epsilon",
            "E0",
            "E1_over_eps",
            "second_moment",
            "interaction_energy",
            "collar_size",
            "boundary_stress_residual",
            "density_integral",
            "velocity_integral",
            "bd_entropy_max",
            "fractional_budget",
            "passed",
        ]
        rows = [[float(member.get(name, np.nan)) for name in columns] for member in self.members]
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(
            path,
            np.asarray(rows).reshape(len(rows), len(columns)),
            delimiter=",",
            header=",".join(columns),
            comments="",
            fmt="%.17g",
        )
        return path


class SweepAborted(SimulationError):
    """A ladder member failed; carries the partial report"""

    def __init__(self, report: SweepReport):
        super().__init__(f"sweep aborted: {report.error}")
        self.report = report


def member_summary(result: RunResult) -> Dict[str, Any]:
    report = result.report
    return {
        "label": result.label,
        "epsilon": result.epsilon,
        "E0": result.initial["E0"],
        "E1_over_eps": result.initial["E1_over_eps"],
        "second_moment": result.initial["second_moment"],
        "interaction_energy": result.initial["interaction_energy"],
        "collar_size": result.initial["collar_size"],
        "boundary_stress_residual": result.initial["boundary_stress_residual"],
        "density_integral": report.integrability["density"],
        "velocity_integral": report.integrability["velocity"],
        "bd_entropy_max": float(np.max(report.series["bd_entropy"]["bd_entropy"])),
        "fractional_budget": report.budgets["fractional"],
        "passed": report.passed,
        "failed": [check.name for check in report.failed_checks],
    }


def ladder_report(config: RunConfig, results: List[RunResult]) -> SweepReport:
    """
    Distances between consecutive members and the uniformity checks of the ladder

    Members are ordered by decreasing epsilon.
    """
    section = config.diagnostics
    ordered = sorted(results, key=lambda r: -r.epsilon)
    report = SweepReport(epsilons=[r.epsilon for r in ordered])
    report.members = [member_summary(result) for result in ordered]
    window = analysis_window(config)

    metrics: List[ConvergenceMetric] = []
    for coarse, fine in zip(ordered, ordered[1:]):
        metric = convergence_metric(
            coarse.trajectory,
            fine.trajectory,
            window,
            q=section.q_exponent,
            points=section.resample_points,
        )
        metrics.append(metric)
        report.distances.append({"from": coarse.epsilon, "to": fine.epsilon, **metric.to_dict()})

    sup_distances = [metric.sup_l1 for metric in metrics]
    report.add(
        at_most(
            "cauchy_consistency",
            worst_ratio(sup_distances),
            1.0 + section.cauchy_slack,
            detail="largest ratio of consecutive L1(K) distances",
        )
    )

    for name in ("density_integral", "velocity_integral"):
        spread = uniform_spread([member[name] for member in report.members])
        report.add(at_most(f"uniform_{name}", spread, section.uniform_spread))
    # BD entropy scales like eps^2 at t = 0, so only growth along the ladder is a blowup trend
    growth = uniform_growth([member["bd_entropy_max"] for member in report.members])
    report.add(
        at_most(
            "uniform_bd_entropy_max",
            growth,
            section.uniform_spread,
            detail="max over the ladder relative to the largest epsilon, minus 1",
        )
    )

    epsilons = [member["epsilon"] for member in report.members]
    if len(set(epsilons)) >= 2:
        rate = fitted_rate(epsilons, [member["fractional_budget"] for member in report.members])
        report.add(at_least("fractional_budget_rate", rate, section.budget_rate))

    smallest = ordered[-1].report.flags.get("free_boundary_margin")
    if smallest is not None:
        report.add(
            CheckResult(
                "margin_smallest_epsilon",
                smallest.value,
                smallest.threshold,
                smallest.passed,
                smallest.detail,
            )
        )

    for name in ("second_moment", "interaction_energy"):
        values = [member[name] for member in report.members]
        steps = [abs(b - a) for a, b in zip(values, values[1:])]
        report.add(
            at_most(f"initial_{name}_converges", worst_ratio(steps), 1.0 + section.cauchy_slack)
        )
    return report


def _executor(workers: int) -> Executor:
    if workers > 1:
        return ProcessPoolExecutor(max_workers=workers)
    return ThreadPoolExecutor(max_workers=1)


async def run_sweep_async(
    config: RunConfig, directory: Optional[Path] = None, workers: Optional[int] = None
) -> SweepReport:
    """
    Run every ladder member concurrently and join before the ladder report

    A member failure aborts the sweep; the partial report names the error.

    Args:
        config: Validated configuration with at least three ladder entries
        directory: Sweep directory (member runs go to one sub-directory each)
        workers: Worker count (config.output.workers when omitted)

    Returns:
        SweepReport
    """
    ladder = config.require_ladder(3)
    workers = workers or config.output.workers
    logger.info(f"⚙️ Sweep over {len(ladder)} epsilons with {workers} workers")

    loop = asyncio.get_running_loop()
    with _executor(workers) as pool:
        futures = [
            loop.run_in_executor(
                pool,
                run_single,
                config,
                epsilon,
                None if directory is None else Path(directory) / run_label(epsilon),
            )
            for epsilon in ladder
        ]
        outcomes = await asyncio.gather(*futures, return_exceptions=True)

    results = [outcome for outcome in outcomes if isinstance(outcome, RunResult)]
    errors = [outcome for outcome in outcomes if isinstance(outcome, BaseException)]
    if errors:
        report = SweepReport(epsilons=ladder, members=[member_summary(r) for r in results])
        report.error = f"{type(errors[0]).__name__}: {errors[0]}"
        logger.error(f"❌ Sweep aborted: {report.error}")
        if directory is not None:
            report.to_json(Path(directory) / "sweep_report.json")
        raise SweepAborted(report) from errors[0]

    report = ladder_report(config, results)
    if directory is not None:
        directory = Path(directory)
        report.to_json(directory / "sweep_report.json")
        report.write_ladder(directory / "ladder.csv")
        if config.diagnostics.plots and report.distances:
            from src.diagnostics.plots import plot_convergence_ladder

            plot_convergence_ladder(
                [row["to"] for row in report.distances],
                [row["sup_l1"] for row in report.distances],
                directory / "plots" / "convergence_ladder.svg",
            )
    status = "✅" if report.passed else "❌"
    logger.info(f"{status} Sweep finished: {len(report.flags)} ladder checks")
    return report


def run_sweep(
    config: RunConfig, directory: Optional[Path] = None, workers: Optional[int] = None
) -> SweepReport:
    return asyncio.run(run_sweep_async(config, directory, workers))
