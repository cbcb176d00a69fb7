"""Repeated routing games with public Bayesian learning.

Thin Python layer over the C++ core. Results that the C++ side reports as
JSON documents come back as plain dicts and lists.
"""

from ._bayesroute import (
    ConfigError,
    Scenario,
    SolverError,
    __version__,
    average_cost,
    bayes_update,
    builtin_scenario_names,
    check_complete_learning_conditions,
    check_rest_point,
    complete_info_equilibrium,
    distinguishable_states,
    enumerate_rest_points,
    is_series_parallel,
    load_scenario,
    monte_carlo,
    run,
    scenario_from_dict,
    solve_wardrop,
)

__all__ = [
    "ConfigError",
    "Scenario",
    "SolverError",
    "__version__",
    "average_cost",
    "bayes_update",
    "builtin_scenario_names",
    "check_complete_learning_conditions",
    "check_rest_point",
    "complete_info_equilibrium",
    "distinguishable_states",
    "enumerate_rest_points",
    "is_series_parallel",
    "load_scenario",
    "monte_carlo",
    "run",
    "scenario_from_dict",
    "solve_wardrop",
]
