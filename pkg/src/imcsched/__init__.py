"""Copy-minimising scheduler for multi-array SIMD in-memory computing."""

from .energy import EnergyParams, energy_of
from .memory import (
    CapacityError,
    Compute,
    Copy,
    InsufficientCapacity,
    MemLayout,
    MemoryState,
    RowRef,
    init_state,
)
from .scheduler import ScheduleResult, SchedulerConfig, schedule, schedule_once
from .xmg import Netlist, parse_netlist, random_netlist, simulate_netlist, write_netlist

__all__ = [
    "CapacityError",
    "Compute",
    "Copy",
    "EnergyParams",
    "InsufficientCapacity",
    "MemLayout",
    "MemoryState",
    "Netlist",
    "RowRef",
    "ScheduleResult",
    "SchedulerConfig",
    "energy_of",
    "init_state",
    "parse_netlist",
    "random_netlist",
    "schedule",
    "schedule_once",
    "simulate_netlist",
    "write_netlist",
]
