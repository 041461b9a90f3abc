"""Planar surface-code slice for the X-error sector.

Ancillas sit on a ``d x (d-1)`` grid. Ancilla ``(r, c)`` checks the horizontal
data qubits ``H(r, c)`` and ``H(r, c+1)`` to its west and east, and the
vertical data qubits ``V(r-1, c)`` / ``V(r, c)`` to its north and south when
those exist. The west and east edges are open (rough) boundaries, so
``H(r, 0)`` and ``H(r, d-1)`` touch a single ancilla, and a west-to-east row
of ``H`` qubits is a logical operator.

Noise is phenomenological: every round each data qubit flips with
``p_data`` before the ancillas are read, and each readout flips with
``p_meas``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

MASK64 = (1 << 64) - 1

# unit-grid directions, in the decoder's fixed spike priority order
NORTH, EAST, SOUTH, WEST = 0, 1, 2, 3
DIRECTIONS = (NORTH, EAST, SOUTH, WEST)
DIRECTION_NAMES = ("N", "E", "S", "W")


class ConfigError(ValueError):
    """Invalid lattice, decoder or experiment parameters."""


class CorrectionIndexError(IndexError):
    """A correction addressed a data qubit that does not exist (decoder bug)."""


class IncompleteDecodingError(RuntimeError):
    """The residual error still has a non-trivial syndrome."""


@dataclass(frozen=True)
class LatticeConfig:
    d: int
    p_data: float = 0.0
    p_meas: float = 0.0
    n_rounds: int = 1
    final_round_perfect: bool = True

    def __post_init__(self) -> None:
        if not isinstance(self.d, (int, np.integer)) or self.d < 3 or self.d % 2 == 0:
            raise ConfigError(f"code distance must be an odd integer >= 3, got {self.d!r}")
        for name in ("p_data", "p_meas"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {p!r}")
        if self.n_rounds < 1:
            raise ConfigError(f"n_rounds must be >= 1, got {self.n_rounds!r}")

    @classmethod
    def phenomenological(cls, d: int, p: float, n_rounds: int | None = None) -> "LatticeConfig":
        """Equal data/measurement error rates, ``d`` noisy rounds plus a perfect one."""
        return cls(d=d, p_data=p, p_meas=p, n_rounds=d if n_rounds is None else n_rounds)

    @classmethod
    def perfect_measurement(cls, d: int, p: float) -> "LatticeConfig":
        """One round of data errors read out without measurement noise (2-D decoding)."""
        return cls(d=d, p_data=p, p_meas=0.0, n_rounds=1, final_round_perfect=False)

    @property
    def n_rows(self) -> int:
        return self.d

    @property
    def n_cols(self) -> int:
        return self.d - 1

    @property
    def n_layers(self) -> int:
        return self.n_rounds + (1 if self.final_round_perfect else 0)


class DataQubitIndex(NamedTuple):
    kind: str  # "H" or "V"
    r: int
    i: int

    def __repr__(self) -> str:
        return f"{self.kind}({self.r},{self.i})"


def H(r: int, i: int) -> DataQubitIndex:
    return DataQubitIndex("H", r, i)


def V(r: int, i: int) -> DataQubitIndex:
    return DataQubitIndex("V", r, i)


class Lattice:
    """Index maps and the ancilla/data-qubit incidence matrix for one code distance.

    Data qubits are numbered ``H(r, i) -> r*d + i`` followed by
    ``V(r, i) -> d*d + r*(d-1) + i``; ancilla ``(r, c)`` is ``r*(d-1) + c``.
    """

    def __init__(self, d: int):
        if not isinstance(d, (int, np.integer)) or d < 3 or d % 2 == 0:
            raise ConfigError(f"code distance must be an odd integer >= 3, got {d!r}")
        self.d = int(d)
        self.n_rows = self.d
        self.n_cols = self.d - 1
        self.n_h = self.d * self.d
        self.n_v = (self.d - 1) * (self.d - 1)
        self.n_data = self.n_h + self.n_v
        self.n_anc = self.n_rows * self.n_cols

        checks = np.zeros((self.n_anc, self.n_data), dtype=np.uint8)
        for r in range(self.n_rows):
            for c in range(self.n_cols):
                a = self.ancilla_index(r, c)
                for q in self.neighbors(r, c):
                    checks[a, self.qubit_index(q)] = 1
        self.checks = checks
        self.checks.setflags(write=False)
        # logical cut: the west-most column of horizontal qubits
        self.cut = np.zeros(self.n_data, dtype=np.uint8)
        for r in range(self.d):
            self.cut[self.qubit_index(H(r, 0))] = 1
        self.cut.setflags(write=False)

    def __repr__(self) -> str:
        return f"Lattice(d={self.d})"

    def ancilla_index(self, r: int, c: int) -> int:
        if not (0 <= r < self.n_rows and 0 <= c < self.n_cols):
            raise IndexError(f"ancilla ({r},{c}) outside {self.n_rows}x{self.n_cols} grid")
        return r * self.n_cols + c

    def ancilla(self, a: int) -> tuple[int, int]:
        return divmod(int(a), self.n_cols)

    def is_valid(self, q: DataQubitIndex) -> bool:
        if q.kind == "H":
            return 0 <= q.r < self.d and 0 <= q.i < self.d
        if q.kind == "V":
            return 0 <= q.r < self.d - 1 and 0 <= q.i < self.d - 1
        return False

    def qubit_index(self, q: DataQubitIndex) -> int:
        if not self.is_valid(q):
            raise CorrectionIndexError(f"no data qubit {q!r} at d={self.d}")
        if q.kind == "H":
            return q.r * self.d + q.i
        return self.n_h + q.r * (self.d - 1) + q.i

    def qubit(self, k: int) -> DataQubitIndex:
        k = int(k)
        if not 0 <= k < self.n_data:
            raise CorrectionIndexError(f"data qubit index {k} out of range")
        if k < self.n_h:
            return H(*divmod(k, self.d))
        return V(*divmod(k - self.n_h, self.d - 1))

    def neighbors(self, r: int, c: int) -> tuple[DataQubitIndex, ...]:
        """Data qubits checked by ancilla ``(r, c)``: west, east, then north/south."""
        self.ancilla_index(r, c)
        out = [H(r, c), H(r, c + 1)]
        if r > 0:
            out.append(V(r - 1, c))
        if r < self.d - 1:
            out.append(V(r, c))
        return tuple(out)

    def qubit_toward(self, r: int, c: int, direction: int) -> DataQubitIndex:
        """Data qubit crossed when stepping from ancilla ``(r, c)`` in ``direction``."""
        if direction == NORTH:
            return V(r - 1, c)
        if direction == SOUTH:
            return V(r, c)
        if direction == WEST:
            return H(r, c)
        if direction == EAST:
            return H(r, c + 1)
        raise ValueError(f"bad direction {direction!r}")

    def plaquette(self, r: int, c: int) -> tuple[DataQubitIndex, ...]:
        """X stabilizer between unit rows ``r``, ``r+1`` and unit columns ``c-1``, ``c``.

        ``c`` ranges over ``[0, d)``; the edge plaquettes ``c = 0`` and
        ``c = d-1`` close through the west/east boundary and have weight 3.
        """
        if not (0 <= r < self.d - 1 and 0 <= c < self.d):
            raise IndexError(f"plaquette ({r},{c}) out of range")
        out = [H(r, c), H(r + 1, c)]
        if c > 0:
            out.append(V(r, c - 1))
        if c < self.d - 1:
            out.append(V(r, c))
        return tuple(out)

    def mask(self, qubits: Iterable[DataQubitIndex]) -> np.ndarray:
        """Correction mask (flip parity per data qubit) from a collection of indices."""
        m = np.zeros(self.n_data, dtype=np.uint8)
        for q in qubits:
            m[self.qubit_index(q)] ^= 1
        return m

    def qubits(self, mask: np.ndarray) -> list[DataQubitIndex]:
        return [self.qubit(k) for k in np.flatnonzero(mask)]

    def syndrome(self, state: np.ndarray) -> np.ndarray:
        """Perfect-measurement parity of each ancilla for a data-error state."""
        return (self.checks.astype(np.int64) @ np.asarray(state, dtype=np.int64) % 2).astype(np.uint8)


def build_lattice(cfg: Union[LatticeConfig, int]) -> Lattice:
    d = cfg.d if isinstance(cfg, LatticeConfig) else cfg
    return Lattice(d)


@dataclass
class ErrorHistory:
    """Per-round fresh flips; the cumulative data error is their running XOR."""

    data_flips: np.ndarray  # (n_layers, n_data) uint8
    meas_flips: np.ndarray  # (n_layers, n_anc) uint8

    @property
    def n_layers(self) -> int:
        return self.data_flips.shape[0]

    def cumulative(self) -> np.ndarray:
        return np.bitwise_xor.accumulate(self.data_flips, axis=0)

    def final_state(self) -> np.ndarray:
        return np.bitwise_xor.reduce(self.data_flips, axis=0)


@dataclass
class SyndromeHistory:
    raw: np.ndarray  # (n_layers, n_anc) uint8
    events: np.ndarray  # (n_layers, n_anc) uint8
    n_rows: int
    n_cols: int

    @property
    def n_layers(self) -> int:
        return self.raw.shape[0]

    def event_grid(self) -> np.ndarray:
        """Detection events reshaped to ``(layer, row, col)``."""
        return self.events.reshape(self.n_layers, self.n_rows, self.n_cols)

    def event_list(self) -> list[tuple[int, int, int]]:
        """Detection events as ``(r, c, t)`` sorted by time, then raster order."""
        t, r, c = np.nonzero(self.event_grid())
        return [(int(ri), int(ci), int(ti)) for ti, ri, ci in zip(t, r, c)]


SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


def trial_seed(master_seed: int, k: int) -> np.random.SeedSequence:
    """Seed for trial ``k``: hashed from the master seed and trial index."""
    return np.random.SeedSequence([int(master_seed) & MASK64, int(k) & MASK64])


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(int(seed) & MASK64)


def sample_errors(lattice: Lattice, cfg: LatticeConfig, rng_seed: SeedLike) -> ErrorHistory:
    if cfg.d != lattice.d:
        raise ConfigError(f"config distance {cfg.d} does not match lattice distance {lattice.d}")
    rng = make_rng(rng_seed)
    n_layers = cfg.n_layers
    data = (rng.random((n_layers, lattice.n_data)) < cfg.p_data).astype(np.uint8)
    meas = (rng.random((n_layers, lattice.n_anc)) < cfg.p_meas).astype(np.uint8)
    if cfg.final_round_perfect:
        meas[-1] = 0
    return ErrorHistory(data, meas)


def measure_rounds(lattice: Lattice, errors: ErrorHistory, literal: bool = False) -> SyndromeHistory:
    """Raw ancilla outcomes per round and the detection events derived from them.

    With ``literal=True`` the stored value chains on the previous *stored*
    value (``events[t] = events[t-1] ^ raw[t]``) instead of the previous raw
    outcome.
    """
    cum = errors.cumulative().astype(np.int64)
    raw = ((cum @ lattice.checks.T.astype(np.int64)) % 2).astype(np.uint8) ^ errors.meas_flips
    events = np.empty_like(raw)
    if raw.shape[0]:
        events[0] = raw[0]
    if literal:
        for t in range(1, raw.shape[0]):
            events[t] = events[t - 1] ^ raw[t]
    else:
        events[1:] = raw[1:] ^ raw[:-1]
    return SyndromeHistory(raw, events, lattice.n_rows, lattice.n_cols)


CorrectionLike = Union[np.ndarray, Iterable[DataQubitIndex]]


def _as_mask(lattice: Lattice | None, n_data: int, corr: CorrectionLike) -> np.ndarray:
    if isinstance(corr, np.ndarray):
        if corr.shape != (n_data,):
            raise CorrectionIndexError(f"correction mask shape {corr.shape} != ({n_data},)")
        return corr.astype(np.uint8) & 1
    if lattice is None:
        raise TypeError("a lattice is needed to apply index-based corrections")
    return lattice.mask(corr)


def apply_correction(
    errors_final: np.ndarray, corr: CorrectionLike, lattice: Lattice | None = None
) -> np.ndarray:
    """Residual error ``errors_final XOR corr``; ``corr`` is a mask or qubit indices."""
    errors_final = np.asarray(errors_final, dtype=np.uint8)
    return errors_final ^ _as_mask(lattice, errors_final.shape[0], corr)


def failure_kind(lattice: Lattice, residual: np.ndarray) -> str | None:
    """``None`` on success, ``"incomplete"`` if the syndrome is not cleared, else ``"logical"``."""
    residual = np.asarray(residual, dtype=np.uint8)
    if lattice.syndrome(residual).any():
        return "incomplete"
    if int(residual @ lattice.cut) % 2:
        return "logical"
    return None


def logical_failure(lattice: Lattice, residual: np.ndarray) -> bool:
    kind = failure_kind(lattice, residual)
    if kind == "incomplete":
        raise IncompleteDecodingError("residual error leaves a non-zero syndrome")
    return kind == "logical"


def events_to_grid(events: Sequence[tuple[int, int, int]], d: int, n_layers: int) -> np.ndarray:
    """Inverse of :meth:`SyndromeHistory.event_list`."""
    grid = np.zeros((n_layers, d, d - 1), dtype=np.uint8)
    for r, c, t in events:
        grid[t, r, c] ^= 1
    return grid
