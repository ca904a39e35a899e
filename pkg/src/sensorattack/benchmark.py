"""Three-inertia benchmark runs with the preset attacks."""
from __future__ import annotations

from dataclasses import dataclass

from .attacks import AttackModel, CleanIntervalTruth, clean_intervals, scenario_library
from .sysmodel import LtiSystem, Trajectory, benchmark_input, discretize_zoh, simulate, three_inertia

__all__ = ["BenchmarkRun", "run_benchmark", "SYSTEM_PRESETS"]

SYSTEM_PRESETS = {"three_inertia": three_inertia}


@dataclass(frozen=True)
class BenchmarkRun:
    system: LtiSystem
    attack: AttackModel
    trajectory: Trajectory
    clean: list[CleanIntervalTruth]
    seed: int

    @property
    def data(self):
        return self.trajectory.dataset()


def run_benchmark(
    attack: str | AttackModel = "none",
    N: int = 500,
    seed: int = 0,
    x0=None,
    **params,
) -> BenchmarkRun:
    """Simulate the discretised three-inertia plant under the benchmark input.

    ``params`` override the physical constants and ``sample_period`` of
    :func:`~sensorattack.sysmodel.three_inertia`.
    """
    cs = three_inertia(**params)
    sys = discretize_zoh(cs)
    model = scenario_library(cs.sample_period)[attack] if isinstance(attack, str) else attack
    u = benchmark_input(N, cs.sample_period, seed)
    traj = simulate(sys, x0, u, model)
    return BenchmarkRun(sys, model, traj, clean_intervals(model, N), seed)
