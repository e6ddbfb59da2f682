"""Per-instruction energy accounting."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .memory import Copy

COPY_TO_COMPUTE_RATIO = 1.87


@dataclass(frozen=True)
class EnergyParams:
    e_compute: float = 1.0
    e_copy: float = COPY_TO_COMPUTE_RATIO

    def __post_init__(self):
        if self.e_compute <= 0 or self.e_copy <= 0:
            raise ValueError("instruction energies must be positive")

    def energy(self, computes: int, copies: int) -> float:
        return computes * self.e_compute + copies * self.e_copy


def count_instructions(instructions) -> tuple[int, int]:
    """(computes, copies)"""
    copies = sum(1 for ins in instructions if isinstance(ins, Copy))
    return len(instructions) - copies, copies


def energy_of(instructions, params: EnergyParams | None = None) -> float:
    computes, copies = count_instructions(instructions)
    return (params or EnergyParams()).energy(computes, copies)


def load_energy_table(path) -> dict[int, EnergyParams]:
    """Read ``{"<rows>": {"e_compute": .., "e_copy": ..}, ...}``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return {int(k): EnergyParams(**v) for k, v in doc.items()}


def params_for(table: dict[int, EnergyParams] | None, rows_per_array: int) -> EnergyParams:
    if table and rows_per_array in table:
        return table[rows_per_array]
    return EnergyParams()
