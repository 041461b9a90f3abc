from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from ..lattice import ConfigError


class Mode(str, enum.Enum):
    TWO_D = "2d"
    BATCH = "batch"
    ONLINE = "online"

    @classmethod
    def parse(cls, value: "Mode | str") -> "Mode":
        if isinstance(value, Mode):
            return value
        aliases = {"twod": "2d", "2-d": "2d", "batch3d": "batch", "online3d": "online"}
        key = str(value).lower()
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ConfigError(f"unknown decoder mode {value!r}") from None


@dataclass(frozen=True)
class DecoderConfig:
    """Controller and Unit parameters of one QECOOL decoder instance.

    Use :meth:`for_mode` to get the per-mode defaults: ``n_depth=1, th_v=-1``
    for 2-D decoding, ``n_depth=d, th_v=-1`` for batch decoding and
    ``n_depth=reg_depth, th_v=3`` for online decoding.
    """

    mode: Mode
    d: int
    reg_depth: int = 7
    th_v: int = 3
    n_depth: int = 7
    n_limit: int = 0
    timeout_base: int = 2
    timeout_per_hop: int = 2
    boundary_spike_delay: int = 1
    clock_hz: float = 2e9
    meas_interval_s: float = 1e-6

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if self.d < 3 or self.d % 2 == 0:
            raise ConfigError(f"code distance must be an odd integer >= 3, got {self.d!r}")
        if self.reg_depth < 1:
            raise ConfigError("reg_depth must be >= 1")
        if self.th_v >= 0 and self.reg_depth < self.th_v + 1:
            raise ConfigError(f"reg_depth={self.reg_depth} cannot hold th_v+1={self.th_v + 1} layers")
        if self.n_depth < 1:
            raise ConfigError("n_depth must be >= 1")
        if self.n_limit < 1:
            raise ConfigError("n_limit must be >= 1")
        # a matched token step takes 2 + 2*hops cycles; the timeout must not cut it short
        if self.timeout_base < 2 or self.timeout_per_hop < 2:
            raise ConfigError("timeout_base and timeout_per_hop must both be >= 2")
        if self.boundary_spike_delay < 0:
            raise ConfigError("boundary_spike_delay must be >= 0")
        if self.mode is Mode.ONLINE and (self.clock_hz <= 0 or self.meas_interval_s <= 0):
            raise ConfigError("online decoding needs positive clock_hz and meas_interval_s")

    @classmethod
    def for_mode(cls, mode: Mode | str, d: int, **overrides) -> "DecoderConfig":
        mode = Mode.parse(mode)
        reg_depth = overrides.pop("reg_depth", None) or 7
        if mode is Mode.TWO_D:
            base = dict(th_v=-1, n_depth=1)
        elif mode is Mode.BATCH:
            base = dict(th_v=-1, n_depth=d)
        else:
            base = dict(th_v=3, n_depth=reg_depth)
        base["n_limit"] = 2 * d + reg_depth
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(mode=mode, d=d, reg_depth=reg_depth, **base)

    def with_(self, **changes) -> "DecoderConfig":
        return replace(self, **changes)

    @property
    def budget_cycles(self) -> float:
        """Decoder cycles available between two measurement rounds."""
        return self.clock_hz * self.meas_interval_s

    def timeout(self, hop_limit: int) -> int:
        return self.timeout_base + self.timeout_per_hop * hop_limit

    def capacity(self, n_layers: int) -> int:
        """Reg slots per Unit; batch/2-D decoding holds the whole trial."""
        if self.mode is Mode.ONLINE:
            return self.reg_depth
        return max(self.reg_depth, n_layers)
