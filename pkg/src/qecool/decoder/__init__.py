"""QECOOL decoder: Units on a ``d x (d-1)`` grid driven by one Controller.

Two interchangeable engines run the same protocol. ``engine="fast"`` (the
default) is compiled and resolves token steps in closed form;
``engine="lockstep"`` moves every message one hop per cycle and can emit a
per-cycle trace.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..lattice import Lattice, SyndromeHistory
from .config import DecoderConfig, Mode
from .kernel import (
    KIND_EAST,
    KIND_PAIR,
    KIND_WEST,
    STATUS_OK,
    STATUS_OVERFLOW,
    decode_kernel,
)
from .lockstep import (
    ControllerState,
    DecoderState,
    Message,
    MsgKind,
    Overflow,
    UnitAction,
    UnitState,
    match_depth_scan,
    push_measurement,
    restart_unit,
    route_spike,
    run_decode_pass,
    run_trial,
)

__all__ = [
    "ControllerState",
    "CycleStats",
    "DecodeResult",
    "DecoderConfig",
    "DecoderState",
    "Message",
    "Mode",
    "MsgKind",
    "Outcome",
    "Overflow",
    "UnitAction",
    "UnitState",
    "decode_grid",
    "decode_trial",
    "match_depth_scan",
    "push_measurement",
    "restart_unit",
    "route_spike",
    "run_decode_pass",
]


class Outcome(str, enum.Enum):
    SUCCESS = "success"
    OVERFLOW = "overflow"
    STUCK = "stuck"


@dataclass
class CycleStats:
    """Per-layer execution cycles (one entry per Pop)."""

    counts: np.ndarray

    @property
    def n(self) -> int:
        return int(self.counts.size)

    @property
    def max(self) -> int:
        return int(self.counts.max()) if self.counts.size else 0

    @property
    def mean(self) -> float:
        return float(self.counts.mean()) if self.counts.size else 0.0

    @property
    def std(self) -> float:
        return float(self.counts.std()) if self.counts.size else 0.0


@dataclass
class DecodeResult:
    correction: np.ndarray  # data-qubit flip mask, lattice ordering
    cycles: CycleStats
    outcome: Outcome
    # rows of (t1, r1, c1, kind, t2, r2, c2); kind 0 pair, 1 west, 2 east
    matches: np.ndarray
    drain: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    total_cycles: int = 0

    @property
    def success(self) -> bool:
        return self.outcome is Outcome.SUCCESS

    def steady_cycles(self) -> CycleStats:
        """Per-layer cycles excluding the end-of-trial flush in online mode."""
        return CycleStats(self.cycles.counts[~self.drain])

    def weight(self) -> int:
        """Total space-time Manhattan weight of the decoder's matching."""
        # boundary records carry the virtual column -1 (west) or n_cols (east)
        m = self.matches
        if m.size == 0:
            return 0
        return int((np.abs(m[:, 0] - m[:, 4]) + np.abs(m[:, 1] - m[:, 5]) + np.abs(m[:, 2] - m[:, 6])).sum())


def _mask_from(lattice: Lattice, corr_h: np.ndarray, corr_v: np.ndarray) -> np.ndarray:
    return np.concatenate([corr_h.reshape(-1), corr_v.reshape(-1)]).astype(np.uint8)


def decode_grid(
    lattice: Lattice,
    grid: np.ndarray,
    cfg: DecoderConfig,
    engine: str = "fast",
    trace: Optional[Callable[[str], None]] = None,
) -> DecodeResult:
    """Decode a ``(layer, row, col)`` detection-event grid."""
    if cfg.d != lattice.d:
        raise ValueError(f"decoder distance {cfg.d} != lattice distance {lattice.d}")
    grid = np.ascontiguousarray(grid, dtype=np.uint8)
    n_layers = grid.shape[0]
    cap = cfg.capacity(n_layers)
    if engine == "lockstep" or trace is not None:
        state = DecoderState(cfg, capacity=cap, trace=trace)
        status = run_trial(state, grid)
        rows = [
            (m.t1, m.r1, m.c1, {"pair": KIND_PAIR, "west": KIND_WEST, "east": KIND_EAST}[m.kind], m.t2, m.r2, m.c2)
            for m in state.matches
        ]
        matches = np.array(rows, dtype=np.int64).reshape(-1, 7)
        return DecodeResult(
            correction=_mask_from(lattice, state.corr_h, state.corr_v),
            cycles=CycleStats(np.array(state.layer_cycles, dtype=np.int64)),
            outcome={"ok": Outcome.SUCCESS, "overflow": Outcome.OVERFLOW}.get(status, Outcome.STUCK),
            matches=matches,
            drain=np.array(state.layer_drain, dtype=bool),
            total_cycles=state.active,
        )
    if engine != "fast":
        raise ValueError(f"unknown engine {engine!r}")

    d = lattice.d
    corr_h = np.zeros((d, d), dtype=np.uint8)
    corr_v = np.zeros((d - 1, d - 1), dtype=np.uint8)
    matches = np.zeros((int(grid.sum()) + 1, 8), dtype=np.int64)
    layer_cycles = np.zeros(n_layers + 1, dtype=np.int64)
    layer_drain = np.zeros(n_layers + 1, dtype=np.bool_)
    status, n_match, n_rec, total = decode_kernel(
        grid,
        cfg.mode is Mode.ONLINE,
        cfg.n_depth,
        cfg.th_v,
        cfg.n_limit,
        cfg.timeout_base,
        cfg.timeout_per_hop,
        cfg.boundary_spike_delay,
        cap,
        float(cfg.budget_cycles),
        corr_h,
        corr_v,
        matches,
        layer_cycles,
        layer_drain,
    )
    outcome = {STATUS_OK: Outcome.SUCCESS, STATUS_OVERFLOW: Outcome.OVERFLOW}.get(status, Outcome.STUCK)
    return DecodeResult(
        correction=_mask_from(lattice, corr_h, corr_v),
        cycles=CycleStats(layer_cycles[:n_rec].copy()),
        outcome=outcome,
        matches=matches[:n_match, :7].copy(),
        drain=layer_drain[:n_rec].copy(),
        total_cycles=int(total),
    )


def decode_trial(
    lattice: Lattice,
    syndromes: SyndromeHistory,
    cfg: DecoderConfig,
    engine: str = "fast",
    trace: Optional[Callable[[str], None]] = None,
) -> DecodeResult:
    return decode_grid(lattice, syndromes.event_grid(), cfg, engine=engine, trace=trace)
