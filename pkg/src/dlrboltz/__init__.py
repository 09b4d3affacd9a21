"""Dynamical low-rank solvers for the Boltzmann and BGK equations in one space dimension."""

from .collision import CollisionOperator, KernelModes, build_kernel_modes
from .errors import ConfigError, ContractError, DomainError, IntegrationError
from .grid import SpatialGrid, VelocityGrid
from .lowrank import LowRankState, evaluate_full, from_full, truncate
from .moments import MacroFields, compute_moments_full, compute_moments_lowrank, maxwellian
from .solver import Augmentation, Method, SolverConfig, StepReport, make_stepper

__all__ = [
    "Augmentation",
    "CollisionOperator",
    "ConfigError",
    "ContractError",
    "DomainError",
    "IntegrationError",
    "KernelModes",
    "LowRankState",
    "MacroFields",
    "Method",
    "SolverConfig",
    "SpatialGrid",
    "StepReport",
    "VelocityGrid",
    "build_kernel_modes",
    "compute_moments_full",
    "compute_moments_lowrank",
    "evaluate_full",
    "from_full",
    "make_stepper",
    "maxwellian",
    "truncate",
]
