"""Age-of-information scheduling for wirelessly powered short-packet clusters."""
from .errors import (AoiSchedError, ConfigError, ConstraintBrokenByRounding, DegenerateSnr, DivergentAoI, GridTooLarge,
                     Infeasible, InfeasibleSaturated, InvalidDuration, InvalidGeometry, InvalidParams, InvalidSchedule,
                     NoFixedPoint, RoundingOverflow)
from .linkmodel import Device, SystemParams, make_device, make_devices
from .optimizer import AllocationPolicy, SolveReport, SolverOptions, solve_minmax, solve_single
from .cluster import TimeSchedule, algorithm1, cluster_capacity, reconstruct_schedule, validate_schedule
from .simkernel import GridSpec, SimConfig, exhaustive_search, ibl_baseline, simulate

__version__ = "0.1.0"

__all__ = [
    "AoiSchedError", "ConfigError", "ConstraintBrokenByRounding", "DegenerateSnr", "DivergentAoI", "GridTooLarge",
    "Infeasible", "InfeasibleSaturated", "InvalidDuration", "InvalidGeometry", "InvalidParams", "InvalidSchedule",
    "NoFixedPoint", "RoundingOverflow",
    "Device", "SystemParams", "make_device", "make_devices",
    "AllocationPolicy", "SolveReport", "SolverOptions", "solve_minmax", "solve_single",
    "TimeSchedule", "algorithm1", "cluster_capacity", "reconstruct_schedule", "validate_schedule",
    "GridSpec", "SimConfig", "exhaustive_search", "ibl_baseline", "simulate",
]
