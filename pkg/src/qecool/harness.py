"""Monte-Carlo experiments: logical error rates, thresholds, cycle statistics.

Trials are split into fixed chunks that a process pool evaluates
independently. Trial ``k`` of a point always uses ``trial_seed(seed, k)``
and workers return integer tallies only, so results do not depend on the
pool size or on completion order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import binomtest

from .decoder import DecoderConfig, Mode, Outcome, decode_grid
from .lattice import (
    ConfigError,
    LatticeConfig,
    Lattice,
    apply_correction,
    build_lattice,
    events_to_grid,
    failure_kind,
    measure_rounds,
    sample_errors,
    trial_seed,
)
from .matching import OracleOverflow, exact_min_weight_matching

CSV_COLUMNS = (
    "d",
    "p",
    "mode",
    "trials",
    "logical_failures",
    "overflow_failures",
    "p_l",
    "p_l_lo",
    "p_l_hi",
    "cycles_max",
    "cycles_mean",
    "cycles_std",
)

CHUNK = 500


def default_trials(p: float) -> int:
    return 100_000 if p >= 0.005 else 1_000_000


@dataclass(frozen=True)
class ExperimentSpec:
    mode: Mode | str = Mode.BATCH
    ds: tuple = (5, 7, 9)
    ps: tuple = (0.01,)
    trials: Optional[int] = None  # None: default_trials(p)
    seed: int = 0
    clock_hz: float = 2e9
    meas_interval_s: float = 1e-6
    reg_depth: int = 7
    th_v: Optional[int] = None
    n_rounds: Optional[int] = None  # noisy rounds; None means d
    workers: int = 1
    max_seconds: Optional[float] = None
    out: Optional[str] = None
    fmt: str = "csv"

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        object.__setattr__(self, "ds", tuple(int(d) for d in self.ds))
        object.__setattr__(self, "ps", tuple(float(p) for p in self.ps))
        if self.trials is not None and self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for p in self.ps:
            if not 0.0 <= p < 1.0:
                raise ConfigError(f"p must lie in [0, 1), got {p}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"unknown format {self.fmt!r}")

    def decoder_config(self, d: int) -> DecoderConfig:
        return DecoderConfig.for_mode(
            self.mode,
            d,
            reg_depth=self.reg_depth,
            th_v=self.th_v if self.mode is Mode.ONLINE else None,
            clock_hz=self.clock_hz,
            meas_interval_s=self.meas_interval_s,
        )

    def lattice_config(self, d: int, p: float) -> LatticeConfig:
        if self.mode is Mode.TWO_D:
            return LatticeConfig.perfect_measurement(d, p)
        return LatticeConfig.phenomenological(d, p, self.n_rounds)

    def trials_for(self, p: float) -> int:
        return default_trials(p) if self.trials is None else self.trials


@dataclass
class ResultRow:
    d: int
    p: float
    mode: str
    trials: int
    logical_failures: int
    overflow_failures: int
    incomplete_failures: int = 0
    p_l: float = 0.0
    p_l_lo: float = 0.0
    p_l_hi: float = 0.0
    cycles_max: int = 0
    cycles_mean: float = 0.0
    cycles_std: float = 0.0
    layers: int = 0
    matches: int = 0
    long_vertical_matches: int = 0

    @property
    def failures(self) -> int:
        return self.logical_failures + self.overflow_failures + self.incomplete_failures

    @property
    def vertical_span_fraction(self) -> float:
        return self.long_vertical_matches / self.matches if self.matches else 0.0

    def csv_record(self) -> dict:
        rec = {k: getattr(self, k) for k in CSV_COLUMNS}
        # the fixed schema has no separate column for uncleared syndromes
        rec["logical_failures"] = self.logical_failures + self.incomplete_failures
        return rec


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    ci = binomtest(k, n).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


# --- worker side -------------------------------------------------------------

_TALLY = ("trials", "logical", "overflow", "incomplete", "layers", "cyc_sum", "cyc_sq", "cyc_max", "matches", "long")


def _run_chunk(task: tuple) -> dict:
    spec, d, p, k0, k1 = task
    lattice = build_lattice(d)
    lcfg = spec.lattice_config(d, p)
    dcfg = spec.decoder_config(d)
    tally = dict.fromkeys(_TALLY, 0)
    for k in range(k0, k1):
        errors = sample_errors(lattice, lcfg, trial_seed(spec.seed, k))
        syn = measure_rounds(lattice, errors)
        res = decode_grid(lattice, syn.event_grid(), dcfg)
        tally["trials"] += 1
        cyc = res.steady_cycles().counts if dcfg.mode is Mode.ONLINE else res.cycles.counts
        tally["layers"] += int(cyc.size)
        if cyc.size:
            tally["cyc_sum"] += int(cyc.sum())
            tally["cyc_sq"] += int((cyc * cyc).sum())
            tally["cyc_max"] = max(tally["cyc_max"], int(cyc.max()))
        if res.outcome is Outcome.OVERFLOW:
            tally["overflow"] += 1
            continue
        if res.outcome is Outcome.STUCK:
            tally["incomplete"] += 1
            continue
        m = res.matches
        tally["matches"] += int(m.shape[0])
        if m.size:
            tally["long"] += int(((m[:, 3] == 0) & (np.abs(m[:, 0] - m[:, 4]) >= 3)).sum())
        kind = failure_kind(lattice, apply_correction(errors.final_state(), res.correction))
        if kind == "logical":
            tally["logical"] += 1
        elif kind == "incomplete":
            tally["incomplete"] += 1
    return tally


def _merge(into: dict, part: dict) -> None:
    for key, v in part.items():
        into[key] = max(into[key], v) if key == "cyc_max" else into[key] + v


def _row(spec: ExperimentSpec, d: int, p: float, t: dict) -> ResultRow:
    n = t["trials"]
    fails = t["logical"] + t["overflow"] + t["incomplete"]
    lo, hi = wilson_interval(fails, n)
    layers = t["layers"]
    mean = t["cyc_sum"] / layers if layers else 0.0
    var = (t["cyc_sq"] * layers - t["cyc_sum"] ** 2) / layers**2 if layers else 0.0
    return ResultRow(
        d=d,
        p=p,
        mode=spec.mode.value,
        trials=n,
        logical_failures=t["logical"],
        overflow_failures=t["overflow"],
        incomplete_failures=t["incomplete"],
        p_l=fails / n if n else 0.0,
        p_l_lo=lo,
        p_l_hi=hi,
        cycles_max=t["cyc_max"],
        cycles_mean=mean,
        cycles_std=math.sqrt(max(var, 0.0)),
        layers=layers,
        matches=t["matches"],
        long_vertical_matches=t["long"],
    )


def run_monte_carlo(spec: ExperimentSpec) -> list[ResultRow]:
    """One row per ``(d, p)``: sample, measure, decode, correct, score."""
    start = time.monotonic()
    rows = []
    pool = ProcessPoolExecutor(max_workers=spec.workers) if spec.workers > 1 else None
    try:
        for d in spec.ds:
            for p in spec.ps:
                n = spec.trials_for(p)
                tasks = [(spec, d, p, k, min(k + CHUNK, n)) for k in range(0, n, CHUNK)]
                tally = dict.fromkeys(_TALLY, 0)
                batch = spec.workers
                for i in range(0, len(tasks), batch):
                    if spec.max_seconds is not None and time.monotonic() - start > spec.max_seconds and tally["trials"]:
                        break
                    group = tasks[i : i + batch]
                    parts = pool.map(_run_chunk, group) if pool else map(_run_chunk, group)
                    for part in parts:
                        _merge(tally, part)
                rows.append(_row(spec, d, p, tally))
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


# --- analyses ----------------------------------------------------------------


@dataclass
class ThresholdEstimate:
    p_th: Optional[float]
    lo: Optional[float]
    hi: Optional[float]
    crossings: list = field(default_factory=list)  # (d1, d2, p_cross)
    status: str = "ok"

    @property
    def found(self) -> bool:
        return self.status == "ok"


def _pair_crossing(a: dict, b: dict) -> Optional[float]:
    """Crossing of two log-log curves by linear interpolation between bracketing points."""
    ps = sorted(p for p in set(a) & set(b) if a[p] > 0 and b[p] > 0)
    diffs = [math.log(b[p]) - math.log(a[p]) for p in ps]
    found = []
    for k in range(len(ps) - 1):
        d0, d1 = diffs[k], diffs[k + 1]
        if d0 < 0 <= d1 or (d0 <= 0 < d1):
            x0, x1 = math.log(ps[k]), math.log(ps[k + 1])
            x = x0 - d0 * (x1 - x0) / (d1 - d0) if d1 != d0 else x0
            found.append(math.exp(x))
    if not found:
        return None
    return statistics.median(found)


def threshold_estimate(rows: Sequence[ResultRow]) -> ThresholdEstimate:
    """Median of pairwise crossings of ``log p_L`` vs ``log p`` across distances.

    For each pair ``d1 < d2`` the crossing is where the larger code stops
    beating the smaller one. The band is the min/max of the pairwise values.
    """
    curves: dict[int, dict[float, float]] = {}
    for r in rows:
        curves.setdefault(r.d, {})[r.p] = r.p_l
    ds = sorted(curves)
    if len(ds) < 2:
        return ThresholdEstimate(None, None, None, status="need at least two distances")
    crossings = []
    for i in range(len(ds)):
        for j in range(i + 1, len(ds)):
            x = _pair_crossing(curves[ds[i]], curves[ds[j]])
            if x is not None:
                crossings.append((ds[i], ds[j], x))
    if not crossings:
        return ThresholdEstimate(None, None, None, status="no crossing")
    vals = [x for _, _, x in crossings]
    return ThresholdEstimate(statistics.median(vals), min(vals), max(vals), crossings)


def vertical_span_fraction(spec: ExperimentSpec) -> list[ResultRow]:
    """Batch runs; each row's ``vertical_span_fraction`` is pairs with ``|dt| >= 3`` over all matches."""
    return run_monte_carlo(replace(spec, mode=Mode.BATCH))


def cycle_stats_experiment(spec: ExperimentSpec) -> list[ResultRow]:
    """Online runs; per-layer cycle stats exclude the end-of-trial flush."""
    return run_monte_carlo(replace(spec, mode=Mode.ONLINE))


@dataclass
class OracleReport:
    trials: int = 0
    checked: int = 0
    skipped: int = 0  # too many events for the exact matcher
    cleared: int = 0
    not_cleared: int = 0
    ratios: list = field(default_factory=list)
    below_oracle: int = 0

    @property
    def clear_rate(self) -> float:
        n = self.cleared + self.not_cleared
        return self.cleared / n if n else 1.0

    @property
    def mean_ratio(self) -> float:
        return float(np.mean(self.ratios)) if self.ratios else 1.0

    @property
    def min_ratio(self) -> float:
        return float(np.min(self.ratios)) if self.ratios else 1.0

    def summary(self) -> dict:
        return {
            "trials": self.trials,
            "checked": self.checked,
            "skipped_oracle_overflow": self.skipped,
            "syndrome_clear_rate": self.clear_rate,
            "mean_weight_ratio": self.mean_ratio,
            "min_weight_ratio": self.min_ratio,
            "below_oracle": self.below_oracle,
        }


def _score(report: OracleReport, lattice: Lattice, events, grid, errors_final, dcfg) -> None:
    res = decode_grid(lattice, grid, dcfg)
    report.trials += 1
    if not res.success:
        report.not_cleared += 1
        return
    residual = apply_correction(errors_final, res.correction)
    if lattice.syndrome(residual).any():
        report.not_cleared += 1
    else:
        report.cleared += 1
    try:
        exact = exact_min_weight_matching(events, lattice.d)
    except OracleOverflow:
        report.skipped += 1
        return
    report.checked += 1
    w = res.weight()
    if w < exact.weight:
        report.below_oracle += 1
    report.ratios.append(w / exact.weight if exact.weight else (1.0 if w == 0 else math.inf))


def oracle_check(spec: ExperimentSpec, d: Optional[int] = None, p: Optional[float] = None) -> OracleReport:
    """Decoder matching weight against the exact matcher on random batch trials."""
    d = spec.ds[0] if d is None else d
    p = spec.ps[0] if p is None else p
    lattice = build_lattice(d)
    lcfg = LatticeConfig.phenomenological(d, p, spec.n_rounds)
    dcfg = DecoderConfig.for_mode(Mode.BATCH, d)
    report = OracleReport()
    for k in range(spec.trials_for(p)):
        errors = sample_errors(lattice, lcfg, trial_seed(spec.seed, k))
        syn = measure_rounds(lattice, errors)
        _score(report, lattice, syn.event_list(), syn.event_grid(), errors.final_state(), dcfg)
    return report


def isolated_pair_instance(d: int, n_layers: int, rng: np.random.Generator, max_pairs: int = 4):
    """Random event pairs at unit distance, each far from boundaries and from each other.

    Every event sits two or more hops from a boundary and three or more from
    any event outside its pair, so the minimum weight is one per pair.
    """
    if d < 5:
        raise ValueError("isolated pairs need d >= 5")
    events: list[tuple[int, int, int]] = []
    for _ in range(20 * max_pairs):
        if len(events) >= 2 * max_pairs:
            break
        kind = int(rng.integers(0, 3))
        t = int(rng.integers(0, n_layers))
        if kind == 0:
            r, c = int(rng.integers(0, d)), int(rng.integers(1, d - 3))
            pair = [(r, c, t), (r, c + 1, t)]
        elif kind == 1 and n_layers > 1:
            r, c = int(rng.integers(0, d)), int(rng.integers(1, d - 2))
            t = min(t, n_layers - 2)
            pair = [(r, c, t), (r, c, t + 1)]
        else:
            r, c = int(rng.integers(0, d - 1)), int(rng.integers(1, d - 2))
            pair = [(r, c, t), (r + 1, c, t)]
        if any(abs(a[0] - e[0]) + abs(a[1] - e[1]) + abs(a[2] - e[2]) < 3 for a in pair for e in events):
            continue
        events.extend(pair)
    return sorted(events, key=lambda e: (e[2], e[0], e[1]))


def isolated_pair_check(d: int, n_layers: int, instances: int, seed: int = 0) -> OracleReport:
    lattice = build_lattice(d)
    dcfg = DecoderConfig.for_mode(Mode.BATCH, d)
    rng = np.random.default_rng(seed)
    report = OracleReport()
    for _ in range(instances):
        events = isolated_pair_instance(d, n_layers, rng)
        grid = events_to_grid(events, d, n_layers)
        res = decode_grid(lattice, grid, dcfg)
        report.trials += 1
        report.cleared += int(res.success)
        report.not_cleared += int(not res.success)
        exact = exact_min_weight_matching(events, d)
        report.checked += 1
        w = res.weight()
        report.below_oracle += int(w < exact.weight)
        report.ratios.append(w / exact.weight if exact.weight else 1.0)
    return report


def single_error_audit(d: int = 3) -> dict:
    """Decode every weight-1 data error, in 2-D and at every round of a batch trial.

    Returns counts of cases, uncleared syndromes and logical failures.
    """
    lattice = build_lattice(d)
    out = {"cases": 0, "not_cleared": 0, "logical": 0}

    def run(errors_flips, meas_flips, mode):
        from .lattice import ErrorHistory

        errors = ErrorHistory(errors_flips, meas_flips)
        syn = measure_rounds(lattice, errors)
        res = decode_grid(lattice, syn.event_grid(), DecoderConfig.for_mode(mode, d))
        kind = failure_kind(lattice, apply_correction(errors.final_state(), res.correction)) if res.success else "incomplete"
        out["cases"] += 1
        out["not_cleared"] += int(kind == "incomplete")
        out["logical"] += int(kind == "logical")

    n_layers = d + 1
    for q in range(lattice.n_data):
        flips = np.zeros((1, lattice.n_data), dtype=np.uint8)
        flips[0, q] = 1
        run(flips, np.zeros((1, lattice.n_anc), dtype=np.uint8), Mode.TWO_D)
        for t in range(n_layers):
            flips = np.zeros((n_layers, lattice.n_data), dtype=np.uint8)
            flips[t, q] = 1
            run(flips, np.zeros((n_layers, lattice.n_anc), dtype=np.uint8), Mode.BATCH)
    for a in range(lattice.n_anc):
        for t in range(n_layers - 1):
            meas = np.zeros((n_layers, lattice.n_anc), dtype=np.uint8)
            meas[t, a] = 1
            run(np.zeros((n_layers, lattice.n_data), dtype=np.uint8), meas, Mode.BATCH)
    return out


# --- output ------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(round(v, 12))
    return str(v)


def rows_to_csv(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        rec = r.csv_record()
        w.writerow([_fmt(rec[k]) for k in CSV_COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: Iterable[ResultRow]) -> str:
    recs = []
    for r in rows:
        rec = asdict(r)
        rec["vertical_span_fraction"] = r.vertical_span_fraction
        recs.append({k: (round(v, 12) if isinstance(v, float) else v) for k, v in rec.items()})
    return json.dumps(recs, indent=2, sort_keys=False) + "\n"


def render(rows: Sequence[ResultRow], fmt: str = "csv") -> str:
    return rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
