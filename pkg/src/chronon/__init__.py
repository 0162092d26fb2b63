"""Finite-dimensional quantum clocks: Gaussian clock states, their evolution,
analytic error bounds and clock-driven control of small systems."""

__version__ = "0.1.0"

from .bounds import BoundReport, bound_commutator, bound_epsilon_c, bound_epsilon_v
from .clock_core import Basis, ClockParams, ClockState, gaussian_state, theta_state, window
from .control import SystemSpec, clock_disturbance, joint_evolution, run_control
from .potentials import ConstantPotential, CosinePotential, PeriodicPotential
from .propagator import EvolutionSpec, Method, evolve, reference_state

__all__ = [
    "__version__",
    "Basis",
    "BoundReport",
    "ClockParams",
    "ClockState",
    "ConstantPotential",
    "CosinePotential",
    "EvolutionSpec",
    "Method",
    "PeriodicPotential",
    "SystemSpec",
    "bound_commutator",
    "bound_epsilon_c",
    "bound_epsilon_v",
    "clock_disturbance",
    "evolve",
    "gaussian_state",
    "joint_evolution",
    "reference_state",
    "run_control",
    "theta_state",
    "window",
]
