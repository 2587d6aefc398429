"""Principal eigenpairs and limit measures of advection-diffusion operators on tori."""

from ._conclab import (
    AssemblyError,
    ParseError,
    PredictorError,
    Scenario,
    ScenarioError,
    SolverError,
    TrigExpr,
    __version__,
    assemble,
    builtin_names,
    builtin_scenario,
    cycle_density,
    dense_operator,
    eigen_sweep,
    extrapolate,
    predict,
    pressures,
    principal_eigenpair,
    run_cli,
    scenario_from_json,
    torus_density,
    validate,
)

__all__ = [
    "AssemblyError",
    "ParseError",
    "PredictorError",
    "Scenario",
    "ScenarioError",
    "SolverError",
    "TrigExpr",
    "__version__",
    "assemble",
    "builtin_names",
    "builtin_scenario",
    "cycle_density",
    "dense_operator",
    "eigen_sweep",
    "extrapolate",
    "predict",
    "pressures",
    "principal_eigenpair",
    "run_cli",
    "scenario_from_json",
    "torus_density",
    "validate",
]
