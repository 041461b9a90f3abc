"""Cycle-by-cycle simulation of Units, Row Masters, Boundary Units and the Controller.

This engine moves every Spike and Syndrome message one grid hop per cycle
and keeps the per-Unit registers (``reg``, ``flag_token``, ``dir``)
explicitly. It is slow and exists for tracing and as the reference the
compiled engine in :mod:`qecool.decoder.kernel` is checked against.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np

from ..lattice import DIRECTION_NAMES, EAST, NORTH, SOUTH, WEST
from .config import DecoderConfig, Mode

OWN = -1
OPPOSITE = {NORTH: SOUTH, SOUTH: NORTH, EAST: WEST, WEST: EAST}
STEP = {NORTH: (-1, 0), SOUTH: (1, 0), EAST: (0, 1), WEST: (0, -1)}


class Overflow(Exception):
    """A Push found a Unit whose Reg was already full."""


class MsgKind(str, enum.Enum):
    TOKEN = "Token"
    SPIKE = "Spike"
    SYNDROME = "Syndrome"
    PUSH = "Push"
    POP = "Pop"
    RESTART = "Restart"
    REQUEST_SPIKE = "RequestSpike"
    FINISH = "Finish"
    CORRECT = "Correct"
    TIMEOUT = "Timeout"
    SKIP = "RowSkip"


@dataclass
class Message:
    kind: MsgKind
    src: object
    dst: object
    direction: Optional[int] = None
    cycle: int = 0

    def line(self) -> str:
        extra = "" if self.direction is None else f" {DIRECTION_NAMES[self.direction]}"
        return f"{self.cycle} {self.kind.value} {_locus(self.src)} {_locus(self.dst)}{extra}"


def _locus(x) -> str:
    if isinstance(x, tuple):
        return f"U{x[0]},{x[1]}"
    return str(x)


@dataclass
class UnitState:
    row: int
    col: int
    reg: list = field(default_factory=list)
    hold_token: bool = False
    flag_token: bool = False
    dir: Optional[int] = None
    base: int = 0

    @property
    def m(self) -> int:
        return len(self.reg)

    def first_bit(self, start: int) -> Optional[int]:
        for t in range(start, len(self.reg)):
            if self.reg[t]:
                return t
        return None


class Role(enum.Enum):
    FINISH = "finish"
    SINK = "sink"
    SPIKE = "spike"
    RELAY = "relay"


@dataclass(frozen=True)
class UnitAction:
    role: Role
    spike_delay: Optional[int] = None  # SPIKE: cycles after the request
    vertical_delay: Optional[int] = None  # SINK: own later bit, if any


@dataclass
class ControllerState:
    current_row: int = 0
    c: int = 1
    b: int = 0
    skipped_rows: list = field(default_factory=list)
    shift: bool = False


def route_spike(unit_row: int, current_row: int, flag_token: bool) -> int:
    """Direction a Unit sends (or forwards) a Spike toward the current sink."""
    if unit_row == current_row:
        return EAST if flag_token else WEST
    return SOUTH if flag_token else NORTH


def match_depth_scan(unit: UnitState, b: int) -> UnitAction:
    """Reg positions ``b..m-1`` are scanned oldest first, one position per cycle.

    A non-sink Unit spikes for the first set position ``t`` at cycle
    ``t - b``; a sink whose own later position ``t > b`` is set matches
    vertically at cycle ``t - b``.
    """
    if unit.hold_token:
        t = unit.first_bit(b + 1)
        return UnitAction(Role.SINK, vertical_delay=None if t is None else t - b)
    t = unit.first_bit(b)
    if t is None:
        return UnitAction(Role.RELAY)
    return UnitAction(Role.SPIKE, spike_delay=t - b)


def restart_unit(unit: UnitState, b: int, token_present: bool) -> UnitAction:
    unit.base = b
    unit.dir = None
    unit.hold_token = token_present
    if token_present:
        unit.flag_token = True
        if b >= unit.m or not unit.reg[b]:
            return UnitAction(Role.FINISH)
    return match_depth_scan(unit, b)


@dataclass
class MatchRecord:
    t1: int
    r1: int
    c1: int
    kind: str  # "pair", "west", "east"
    t2: int
    r2: int
    c2: int


class DecoderState:
    """Units plus Controller for one logical-qubit sector."""

    def __init__(self, cfg: DecoderConfig, capacity: Optional[int] = None, trace: Optional[Callable[[str], None]] = None):
        self.cfg = cfg
        self.d = cfg.d
        self.n_rows = cfg.d
        self.n_cols = cfg.d - 1
        self.capacity = cfg.reg_depth if capacity is None else capacity
        self.units = [[UnitState(r, c) for c in range(self.n_cols)] for r in range(self.n_rows)]
        self.controller = ControllerState()
        self.gate = cfg.th_v
        self.corr_h = np.zeros((self.d, self.d), dtype=np.uint8)
        self.corr_v = np.zeros((self.d - 1, self.d - 1), dtype=np.uint8)
        self.matches: list[MatchRecord] = []
        self.layer_cycles: list[int] = []
        self.layer_drain: list[bool] = []
        self.draining = False
        self.clock = 0
        self.active = 0
        self._last_pop = 0
        self.pops = 0
        self._trace = trace

    # -- helpers ---------------------------------------------------------

    @property
    def m(self) -> int:
        return self.units[0][0].m

    def unit(self, r: int, c: int) -> UnitState:
        return self.units[r][c]

    def all_units(self) -> Iterator[UnitState]:
        for row in self.units:
            yield from row

    def reg_array(self) -> np.ndarray:
        out = np.zeros((self.m, self.n_rows, self.n_cols), dtype=np.uint8)
        for u in self.all_units():
            out[:, u.row, u.col] = u.reg
        return out

    def _emit(self, kind: MsgKind, src, dst, direction=None, at: Optional[int] = None) -> None:
        if self._trace is not None:
            self._trace(Message(kind, src, dst, direction, self.clock if at is None else at).line())

    def _spend(self, cycles: int) -> None:
        self.clock += cycles
        self.active += cycles

    # -- Push / Pop ------------------------------------------------------

    def push(self, bits: np.ndarray) -> None:
        bits = np.asarray(bits, dtype=np.uint8).reshape(self.n_rows, self.n_cols)
        if self.m >= self.capacity:
            raise Overflow(f"Reg overflow: {self.m} of {self.capacity} slots in use")
        self._emit(MsgKind.PUSH, "Controller", "all")
        for u in self.all_units():
            u.reg.append(int(bits[u.row, u.col]))

    def pop(self) -> None:
        self._emit(MsgKind.POP, "Controller", "all")
        for u in self.all_units():
            u.reg.pop(0)
        self.pops += 1
        self._spend(1)
        self.layer_cycles.append(self.active - self._last_pop)
        self.layer_drain.append(self.draining)
        self._last_pop = self.active

    def oldest_clear(self) -> bool:
        return all(u.reg[0] == 0 for u in self.all_units())

    def row_has_bits(self, i: int) -> bool:
        return any(any(u.reg) for u in self.units[i])

    # -- one token step ------------------------------------------------

    def _neighbor(self, r: int, c: int, direction: int):
        dr, dc = STEP[direction]
        rr, cc = r + dr, c + dc
        if cc < 0:
            return "W-boundary"
        if cc >= self.n_cols:
            return "E-boundary"
        if not 0 <= rr < self.n_rows:
            raise AssertionError(f"spike routed off the grid from ({r},{c})")
        return (rr, cc)

    def _flip_toward(self, r: int, c: int, direction: int) -> None:
        if direction == NORTH:
            self.corr_v[r - 1, c] ^= 1
        elif direction == SOUTH:
            self.corr_v[r, c] ^= 1
        elif direction == WEST:
            self.corr_h[r, c] ^= 1
        else:
            self.corr_h[r, c + 1] ^= 1

    def token_step(self, i: int, j: int, b: int, hop_limit: int) -> int:
        """Give the Token to Unit (i, j) at base depth b; returns cycles until Finish/timeout."""
        c0 = self.clock
        ctl = self.controller
        self._emit(MsgKind.TOKEN, "Controller", (i, j))
        self._emit(MsgKind.RESTART, "Controller", "all")
        actions = {}
        for u in self.all_units():
            actions[(u.row, u.col)] = restart_unit(u, b, token_present=(u.row == i and u.col == j))
        sink = self.units[i][j]
        sink_action = actions[(i, j)]
        if sink_action.role is Role.FINISH:
            sink.hold_token = False
            self._emit(MsgKind.FINISH, (i, j), "Controller", at=c0)
            return 1
        self._emit(MsgKind.REQUEST_SPIKE, (i, j), "all", at=c0)

        emit_at = defaultdict(list)
        for pos, act in actions.items():
            if act.role is Role.SPIKE:
                emit_at[act.spike_delay].append(pos)
        pending = defaultdict(list)  # cycle -> [(node, port)]
        bdelay = self.cfg.boundary_spike_delay
        accepted = None  # (cycle, port or "vertical")
        for tau in range(0, hop_limit + 1):
            if tau == bdelay:
                for r in range(self.n_rows):
                    pending[tau + 1].append(((r, 0), WEST))
                    pending[tau + 1].append(((r, self.n_cols - 1), EAST))
                self._emit(MsgKind.SPIKE, "W-boundary", "edge", at=c0 + tau)
                self._emit(MsgKind.SPIKE, "E-boundary", "edge", at=c0 + tau)
            inputs = defaultdict(list)
            for node, port in pending.pop(tau, ()):
                inputs[node].append(port)
            own_now = set(emit_at.get(tau, ()))
            if tau >= 1 and (i, j) in inputs:
                port = min(inputs[(i, j)])
                accepted = (tau, port)
            elif tau >= 1 and sink_action.vertical_delay == tau:
                accepted = (tau, "vertical")
            for node in sorted(set(inputs) | own_now):
                if node == (i, j):
                    continue
                u = self.units[node[0]][node[1]]
                if u.dir is not None:
                    continue  # already sent its first spike; later ones lose the race
                u.dir = OWN if node in own_now else min(inputs[node])
                out = route_spike(u.row, ctl.current_row, u.flag_token)
                nxt = self._neighbor(u.row, u.col, out)
                if not isinstance(nxt, tuple):
                    raise AssertionError(f"spike from {node} left the grid toward {nxt}")
                pending[tau + 1].append((nxt, OPPOSITE[out]))
                self._emit(MsgKind.SPIKE, node, nxt, out, at=c0 + tau)
            if accepted is not None:
                break

        if accepted is None:
            sink.hold_token = False
            self._emit(MsgKind.TIMEOUT, "Controller", (i, j), at=c0 + self.cfg.timeout(hop_limit))
            return self.cfg.timeout(hop_limit)

        tau, port = accepted
        sink.reg[b] = 0
        if port == "vertical":
            t2 = b + tau
            sink.reg[t2] = 0
            self.matches.append(MatchRecord(b + self.pops, i, j, "pair", t2 + self.pops, i, j))
            self._emit(MsgKind.FINISH, (i, j), "Controller", at=c0 + tau + 1)
            sink.hold_token = False
            return 2 + tau

        # Syndrome signal retraces the winning spike one hop per cycle
        self._emit(MsgKind.CORRECT, (i, j), "data", port, at=c0 + tau)
        r, c, p, path = i, j, port, 0
        while True:
            self._flip_toward(r, c, p)
            nxt = self._neighbor(r, c, p)
            path += 1
            self._emit(MsgKind.SYNDROME, (r, c), nxt, p, at=c0 + tau + path)
            if not isinstance(nxt, tuple):
                kind = "west" if nxt == "W-boundary" else "east"
                self.matches.append(
                    MatchRecord(b + self.pops, i, j, kind, b + self.pops, r, -1 if kind == "west" else self.n_cols)
                )
                break
            r, c = nxt
            u = self.units[r][c]
            if u.dir == OWN:
                t2 = u.first_bit(b)
                u.reg[t2] = 0
                self.matches.append(MatchRecord(b + self.pops, i, j, "pair", t2 + self.pops, r, c))
                break
            if u.dir is None:
                raise AssertionError(f"syndrome reached ({r},{c}) with no saved direction")
            p = u.dir
        self._emit(MsgKind.FINISH, "origin", "Controller", at=c0 + tau + path + 1)
        sink.hold_token = False
        return 2 + tau + path

    # -- Controller ------------------------------------------------------

    def controller_steps(self) -> Iterator[int]:
        """One activation of the Controller, from ``start_loop`` until it goes idle.

        Yields the cost of each atomic step (row skip, token step, Pop)
        after charging it to the clock.
        """
        ctl = self.controller
        cfg = self.cfg
        while True:
            popped = False
            for hop in range(1, cfg.n_limit + 1):
                ctl.c = hop
                b = 0
                while b < cfg.n_depth and b < self.m:
                    ctl.b = b
                    if self.m - b > self.gate:
                        ctl.skipped_rows = []
                        for i in range(self.n_rows):
                            ctl.current_row = i
                            if not self.row_has_bits(i):
                                ctl.skipped_rows.append(i)
                                for u in self.units[i]:
                                    u.flag_token = True
                                self._emit(MsgKind.SKIP, f"RowMaster{i}", f"RowMaster{i + 1}")
                                self._spend(1)
                                yield 1
                                continue
                            for j in range(self.n_cols):
                                cost = self.token_step(i, j, b, hop)
                                self._spend(cost)
                                yield cost
                        # sendResetFlag
                        for u in self.all_units():
                            u.flag_token = False
                            u.dir = None
                        ctl.shift = self.oldest_clear()
                        if ctl.shift:
                            self.pop()
                            popped = True
                            yield 1
                            break
                    b += 1
                if popped:
                    break
            if not popped:
                return


def push_measurement(state: DecoderState, events_row: np.ndarray) -> DecoderState:
    """Append one detection bit per Unit; raises :class:`Overflow` if a Reg is full."""
    state.push(events_row)
    return state


def run_decode_pass(state: DecoderState) -> tuple[DecoderState, int]:
    """Run the Controller until it idles; returns the cycles it consumed."""
    start = state.active
    for _ in state.controller_steps():
        pass
    return state, state.active - start


def run_trial(state: DecoderState, grid: np.ndarray) -> str:
    """Feed a whole ``(layer, row, col)`` event grid; returns "ok", "overflow" or "stuck"."""
    cfg = state.cfg
    n_layers = grid.shape[0]
    try:
        if cfg.mode is not Mode.ONLINE:
            for t in range(n_layers):
                state.push(grid[t])
            run_decode_pass(state)
            return "ok" if state.m == 0 else "stuck"
        budget = cfg.budget_cycles
        pushed = 0
        if n_layers:
            state.push(grid[0])
            pushed = 1
        while True:
            for _ in state.controller_steps():
                while pushed < n_layers and state.clock >= pushed * budget:
                    state.push(grid[pushed])
                    pushed += 1
            if pushed < n_layers:
                state.clock = max(state.clock, math.ceil(pushed * budget))
                while pushed < n_layers and state.clock >= pushed * budget:
                    state.push(grid[pushed])
                    pushed += 1
                continue
            if state.m == 0:
                return "ok"
            if not state.draining:
                state.draining = True
                state.gate = -1
                continue
            return "stuck"
    except Overflow:
        return "overflow"
