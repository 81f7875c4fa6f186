"""Adaptive P1 finite elements with newest-vertex bisection."""

from ._afem import (
    AssemblyError,
    ConfigError,
    Mesh,
    MeshError,
    SolverError,
    brute_force_doerfler,
    fit_rate,
    mark_binning,
    mark_greedy,
    problem_names,
    run,
    run_config,
    verify,
)

__all__ = [
    "AssemblyError",
    "ConfigError",
    "Mesh",
    "MeshError",
    "SolverError",
    "brute_force_doerfler",
    "fit_rate",
    "mark_binning",
    "mark_greedy",
    "problem_names",
    "run",
    "run_config",
    "verify",
]
