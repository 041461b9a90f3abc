"""Acceptance suite: one PASS/FAIL line per criterion.

Every Monte-Carlo run uses master seed 11. Runtime on one core is a few
minutes; the big scans are cached per module so several criteria can
share them.
"""

from dataclasses import replace

import numpy as np
import pytest

from qecool.harness import (
    ExperimentSpec,
    cycle_stats_experiment,
    isolated_pair_check,
    oracle_check,
    render,
    run_monte_carlo,
    single_error_audit,
    threshold_estimate,
    vertical_span_fraction,
)
from qecool.hardware import PUBLISHED_UNIT, PowerParams, ersfq_power, protectable_qubits, rsfq_power
from qecool.matching import brute_force_matching, exact_min_weight_matching

pytestmark = pytest.mark.slow

SEED = 11
BATCH_PS = (0.005, 0.0075, 0.01, 0.0125, 0.015, 0.02, 0.025, 0.03)
_cache: dict = {}


def cached(key, fn):
    if key not in _cache:
        _cache[key] = fn()
    return _cache[key]


def batch_rows():
    spec = ExperimentSpec(mode="batch", ds=(5, 7, 9), ps=BATCH_PS, trials=10_000, seed=SEED)
    return cached("batch", lambda: run_monte_carlo(spec))


def by_point(rows):
    return {(r.d, r.p): r for r in rows}


def describe(est):
    if not est.found:
        return est.status
    pairs = ", ".join(f"({a},{b}) {x:.4f}" for a, b, x in est.crossings)
    return f"p_th = {est.p_th:.4f} [pairwise {est.lo:.4f} .. {est.hi:.4f}; {pairs}]"


def test_ac1_power_golden_numbers(verdict):
    p_e = ersfq_power(PUBLISHED_UNIT, PowerParams(freq_Hz=2e9))
    p_r = rsfq_power(PUBLISHED_UNIT, PowerParams(supply_mV=2.5))
    n = protectable_qubits(9, 2.78e-6, 1.0)
    ok = abs(p_e - 2.78e-6) <= 0.01e-6 and p_r == pytest.approx(840e-6, rel=1e-12) and n == 2498
    assert verdict("AC1", ok, f"ERSFQ {p_e * 1e6:.4f} uW, RSFQ {p_r * 1e6:.4f} uW, qubits {n}")


def test_ac2_two_dimensional_threshold(verdict):
    ps = tuple(round(0.02 + 0.01 * k, 2) for k in range(8))
    spec = ExperimentSpec(mode="2d", ds=(5, 7, 9, 11, 13), ps=ps, trials=10_000, seed=SEED)
    est = threshold_estimate(run_monte_carlo(spec))
    ok = est.found and 0.05 <= est.p_th <= 0.07
    assert verdict("AC2", ok, f"{describe(est)}; band [0.05, 0.07]")


def test_ac3_batch_threshold(verdict):
    est = threshold_estimate(batch_rows())
    ok = est.found and 0.010 <= est.p_th <= 0.020
    assert verdict("AC3", ok, f"{describe(est)}; band [0.010, 0.020]")


def test_ac4_online_threshold(verdict):
    # all distances decode the same 15-round window so curves compare at equal exposure
    ps = (0.004, 0.006, 0.008, 0.01, 0.012, 0.014)
    spec = ExperimentSpec(mode="online", ds=(5, 7, 9), ps=ps, trials=10_000, seed=SEED, n_rounds=15)
    rows = run_monte_carlo(spec)
    worst = max(r.overflow_failures / r.trials for r in rows)
    est = threshold_estimate(rows)
    ok = worst < 0.01 and est.found and 0.006 <= est.p_th <= 0.014
    assert verdict("AC4", ok, f"{describe(est)}; band [0.006, 0.014]; max overflow share {worst:.4f}")


def test_ac4_low_clock_degradation(verdict):
    spec = ExperimentSpec(mode="online", ds=(5, 13), ps=(0.005,), trials=2_000, seed=SEED, clock_hz=2e8)
    lo, hi = run_monte_carlo(spec)
    ok = hi.p_l > lo.p_l and hi.overflow_failures > hi.logical_failures + hi.incomplete_failures
    detail = (
        f"200 MHz, p=0.005: p_L(5) {lo.p_l:.4f}, p_L(13) {hi.p_l:.4f} "
        f"({hi.overflow_failures} of {hi.failures} failures from overflow)"
    )
    assert verdict("AC4-clock", ok, detail)


def test_ac5_ordering(verdict):
    low = run_monte_carlo(ExperimentSpec(mode="batch", ds=(5, 7, 9), ps=(0.005,), trials=50_000, seed=SEED))
    high = [by_point(batch_rows())[(d, 0.03)] for d in (5, 7, 9)]
    a = [r.p_l for r in low]
    b = [r.p_l for r in high]
    ok = a[2] < a[1] < a[0] and b[0] < b[1] < b[2]
    detail = f"p=0.005 p_L(5,7,9) = {a[0]:.5f} {a[1]:.5f} {a[2]:.5f}; p=0.03 = {b[0]:.4f} {b[1]:.4f} {b[2]:.4f}"
    assert verdict("AC5", ok, detail)


def test_ac6_cycle_statistics(verdict):
    ds, ps = (5, 7, 9, 11, 13), (0.001, 0.005, 0.01)
    spec = ExperimentSpec(mode="online", ds=ds, ps=ps, trials=1_000, seed=SEED)
    m = {(r.d, r.p): r.cycles_mean for r in cycle_stats_experiment(spec)}
    small, big = m[(5, 0.001)], m[(13, 0.01)]
    mono_d = all(m[(ds[i], p)] < m[(ds[i + 1], p)] for p in ps for i in range(len(ds) - 1))
    mono_p = all(m[(d, ps[i])] < m[(d, ps[i + 1])] for d in ds for i in range(len(ps) - 1))
    within_us = big / 2e9 < 1e-6
    ok = 3.0 <= small <= 12.2 and 168 <= big <= 674 and mono_d and mono_p and within_us
    detail = (
        f"mean(5, 0.001) {small:.2f} in [3.0, 12.2]; mean(13, 0.01) {big:.1f} in [168, 674]; "
        f"monotone in d {mono_d}, in p {mono_p}; {big / 2e9 * 1e9:.1f} ns per layer at 2 GHz"
    )
    assert verdict("AC6", ok, detail)


def test_ac7_vertical_span(verdict):
    ps = (0.001, 0.0025, 0.005, 0.01, 0.02, 0.03)
    rows = vertical_span_fraction(ExperimentSpec(mode="batch", ds=(5, 7, 9), ps=ps, trials=3_000, seed=SEED))
    f = {(r.d, r.p): r.vertical_span_fraction for r in rows}
    worst_low = max(v for (d, p), v in f.items() if p <= 0.005)
    mono = all(f[(d, ps[i])] <= f[(d, ps[i + 1])] for d in (5, 7, 9) for i in range(len(ps) - 1))
    ok = worst_low < 0.01 and mono
    assert verdict("AC7", ok, f"max fraction at p <= 0.005: {worst_low:.2e}; non-decreasing in p: {mono}")


def test_ac8a_exact_matches_brute_force(verdict):
    rng = np.random.default_rng(SEED)
    bad = 0
    for _ in range(1_000):
        d = int(rng.choice([3, 5, 7, 9]))
        n = int(rng.integers(0, 9))
        cells = set()
        while len(cells) < n:
            cells.add((int(rng.integers(0, d)), int(rng.integers(0, d - 1)), int(rng.integers(0, d + 1))))
        bad += exact_min_weight_matching(cells, d).weight != brute_force_matching(cells, d).weight
    assert verdict("AC8a", bad == 0, f"{bad} disagreements over 1000 instances with <= 8 events")


def test_ac8b_decoder_against_oracle(verdict):
    rep = oracle_check(ExperimentSpec(mode="batch", ds=(5,), ps=(0.01,), trials=1_000, seed=SEED))
    iso = [isolated_pair_check(d, d + 1, 500, seed=SEED + d) for d in (5, 7, 9)]
    iso_ok = all(r.ratios and min(r.ratios) == max(r.ratios) == 1.0 for r in iso)
    ok = rep.below_oracle == 0 and rep.min_ratio >= 1.0 and rep.checked > 900 and iso_ok
    detail = (
        f"{rep.checked} trials checked ({rep.skipped} skipped), min ratio {rep.min_ratio:.3f}, "
        f"mean {rep.mean_ratio:.3f}; isolated pairs ratio 1.0: {iso_ok}"
    )
    assert verdict("AC8b", ok, detail)


def test_ac8c_syndromes_cleared(verdict):
    rep = oracle_check(ExperimentSpec(mode="batch", ds=(5, 7), ps=(0.01,), trials=1_000, seed=SEED), d=7)
    leftovers = sum(r.incomplete_failures for r in batch_rows())
    ok = rep.clear_rate == 1.0 and leftovers == 0
    detail = f"clear rate {rep.clear_rate:.4f} on 1000 d=7 trials; uncleared in batch scan: {leftovers}"
    assert verdict("AC8c", ok, detail)


def test_ac8d_single_error_audit(verdict):
    out = single_error_audit(3)
    ok = out["not_cleared"] == 0 and out["logical"] == 0
    assert verdict("AC8d", ok, f"{out['cases']} single-fault cases on d=3: {out}")


def test_ac9_determinism(verdict):
    spec = ExperimentSpec(mode="online", ds=(5, 7), ps=(0.01, 0.02), trials=1_500, seed=SEED)
    a = render(run_monte_carlo(spec))
    b = render(run_monte_carlo(spec))
    c = render(run_monte_carlo(replace(spec, workers=3)))
    ok = a == b == c
    assert verdict("AC9", ok, f"repeat identical {a == b}; 1 vs 3 workers identical {a == c}")
