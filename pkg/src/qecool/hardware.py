"""SFQ cost model for one decoder Unit: bill of materials, power and capacity.

Only Unit power enters the capacity figure; the Controller, Row Masters
and Boundary Units are left out of the per-qubit accounting.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .lattice import ConfigError

FLUX_QUANTUM_WB = 2.068e-15


@dataclass(frozen=True)
class CellSpec:
    name: str
    jj_count: int
    bias_current_mA: float
    area_um2: float
    latency_ps: float

    def __post_init__(self) -> None:
        if min(self.jj_count, self.bias_current_mA, self.area_um2, self.latency_ps) <= 0:
            raise ConfigError(f"cell {self.name!r}: all figures must be positive")


@dataclass(frozen=True)
class UnitBudget:
    total_jjs: int
    total_bias_mA: float
    total_area_mm2: float
    critical_path_ps: float


# designed 7-bit-Reg Unit
PUBLISHED_UNIT = UnitBudget(total_jjs=3177, total_bias_mA=336.0, total_area_mm2=1.274, critical_path_ps=215.0)


@dataclass(frozen=True)
class PowerParams:
    supply_mV: float = 2.5
    freq_Hz: float = 2e9
    flux_quantum_Wb: float = FLUX_QUANTUM_WB
    budget_W: float = 1.0

    def check_frequency(self, budget: UnitBudget) -> None:
        fmax = max_frequency(budget)
        if self.freq_Hz > fmax:
            raise ConfigError(f"{self.freq_Hz:.3g} Hz exceeds the {fmax:.3g} Hz limit of the critical path")


_ALIASES = {
    "1:2 switch": "switch_1to2",
    "switch": "switch_1to2",
    "destructive readout": "dro",
    "nondestructive readout": "ndro",
    "resettable dro": "rd",
    "dual-output dro": "d2",
}


def load_cell_library(path: str | Path | None = None) -> dict[str, CellSpec]:
    """Read a ``name,jjs,bias_mA,area_um2,latency_ps`` table; defaults to the bundled cells."""
    if path is None:
        text = resources.files("qecool").joinpath("data/cells.csv").read_text()
    else:
        text = Path(path).read_text()
    lib = {}
    for row in csv.DictReader(line for line in text.splitlines() if line.strip() and not line.startswith("#")):
        cell = CellSpec(
            name=row["name"].strip(),
            jj_count=int(row["jjs"]),
            bias_current_mA=float(row["bias_mA"]),
            area_um2=float(row["area_um2"]),
            latency_ps=float(row["latency_ps"]),
        )
        lib[cell.name] = cell
    return lib


def _resolve(cell: CellSpec | str, library: Mapping[str, CellSpec]) -> CellSpec:
    if isinstance(cell, CellSpec):
        return cell
    key = _ALIASES.get(cell.strip().lower(), cell.strip().lower())
    try:
        return library[key]
    except KeyError:
        raise ConfigError(f"unknown cell {cell!r}") from None


def aggregate_bom(
    cells: Iterable[tuple[CellSpec | str, int]],
    library: Mapping[str, CellSpec] | None = None,
    critical_path_ps: float | None = None,
) -> UnitBudget:
    """Weighted sums over a bill of materials.

    The critical path defaults to the slowest listed cell.
    """
    lib = load_cell_library() if library is None else library
    jjs, bias, area, slowest = 0, 0.0, 0.0, 0.0
    for cell, count in cells:
        if count < 0:
            raise ConfigError(f"negative count for {cell!r}")
        spec = _resolve(cell, lib)
        jjs += spec.jj_count * count
        bias += spec.bias_current_mA * count
        area += spec.area_um2 * count
        if count:
            slowest = max(slowest, spec.latency_ps)
    path = slowest if critical_path_ps is None else critical_path_ps
    return UnitBudget(jjs, bias, area * 1e-6, path)


def rsfq_power(budget: UnitBudget, params: PowerParams = PowerParams()) -> float:
    """Static power in watts: bias current times supply voltage."""
    return budget.total_bias_mA * 1e-3 * params.supply_mV * 1e-3


def ersfq_power(budget: UnitBudget, params: PowerParams = PowerParams()) -> float:
    """Dynamic power in watts: I * f * flux quantum * 2."""
    if params.freq_Hz <= 0:
        raise ConfigError("frequency must be positive")
    return budget.total_bias_mA * 1e-3 * params.freq_Hz * params.flux_quantum_Wb * 2


def max_frequency(budget: UnitBudget) -> float:
    if budget.critical_path_ps <= 0:
        raise ConfigError("critical path must be positive")
    return 1.0 / (budget.critical_path_ps * 1e-12)


def units_per_logical_qubit(d: int) -> int:
    return 2 * d * (d - 1)


def protectable_qubits(d: int, p_unit_W: float, budget_W: float, units_per_logical: int | None = None) -> int:
    """Logical qubits whose decoder Units fit in the power budget."""
    if d < 3:
        raise ConfigError("d must be >= 3")
    if p_unit_W <= 0:
        raise ConfigError("Unit power must be positive")
    if budget_W < 0:
        raise ConfigError("budget must be non-negative")
    units = units_per_logical_qubit(d) if units_per_logical is None else units_per_logical
    # guard exact quotients (e.g. 4996.0000) against rounding just below an integer
    return int(math.floor(budget_W / (units * p_unit_W) * (1 + 1e-12)))


def hardware_report(
    d: int = 9,
    freq_Hz: float = 2e9,
    budget_W: float = 1.0,
    unit: UnitBudget = PUBLISHED_UNIT,
    supply_mV: float = 2.5,
) -> dict:
    """Power, clock limit and capacity of a QECOOL decoder built from ``unit``.

    Capacity uses the per-Unit power as quoted, rounded to 0.01 uW.
    """
    params = PowerParams(supply_mV=supply_mV, freq_Hz=freq_Hz, budget_W=budget_W)
    ersfq = ersfq_power(unit, params)
    quoted = round(ersfq * 1e6, 2) * 1e-6
    return {
        "d": d,
        "freq_Hz": freq_Hz,
        "budget_W": budget_W,
        "unit_jjs": unit.total_jjs,
        "unit_bias_mA": unit.total_bias_mA,
        "unit_area_mm2": unit.total_area_mm2,
        "critical_path_ps": unit.critical_path_ps,
        "max_frequency_Hz": max_frequency(unit),
        "rsfq_power_W": rsfq_power(unit, params),
        "ersfq_power_W": ersfq,
        "ersfq_power_uW_quoted": round(ersfq * 1e6, 2),
        "units_per_logical_qubit": units_per_logical_qubit(d),
        "protectable_qubits": protectable_qubits(d, quoted, budget_W),
        "within_clock_limit": freq_Hz <= max_frequency(unit),
    }
