"""Orchestrated general equilibrium: an LLM-agent economy solved by tatonnement.

Agents are production sets in a finite-dimensional trajectory subspace, the
orchestrator is a consumer routing work over DAG paths, and prices clear the
market through a damped fixed-point iteration.
"""
from .analysis import (
    bewley_sweep,
    contraction_bound,
    estimate_contraction,
    iterations_to_accuracy,
    pareto_check,
    supporting_prices,
)
from .dsge import ShockSpec, TaylorRule, impulse_response, linearize, policy_experiment, simulate_shocks, taylor_update
from .equilibrium import (
    Economy,
    EconomyState,
    TatonnementConfig,
    excess_demand,
    phi_step,
    solve,
    verify_equilibrium,
    walras_residual,
)
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"
