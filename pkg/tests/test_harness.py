import json
import math

import numpy as np
import pytest

from qecool.harness import (
    CSV_COLUMNS,
    ExperimentSpec,
    ResultRow,
    cycle_stats_experiment,
    default_trials,
    isolated_pair_check,
    isolated_pair_instance,
    oracle_check,
    render,
    run_monte_carlo,
    single_error_audit,
    threshold_estimate,
    vertical_span_fraction,
    wilson_interval,
)
from qecool.lattice import ConfigError


def row(d, p, p_l):
    return ResultRow(d=d, p=p, mode="batch", trials=1000, logical_failures=int(p_l * 1000), overflow_failures=0, p_l=p_l)


def test_spec_validation():
    with pytest.raises(ConfigError):
        ExperimentSpec(ps=(0.0,), trials=0)
    with pytest.raises(ConfigError):
        ExperimentSpec(ps=(1.5,))
    assert default_trials(0.01) == 100_000 and default_trials(0.001) == 1_000_000
    spec = ExperimentSpec(mode="2d", ds=(5,), ps=(0.05,))
    assert spec.lattice_config(5, 0.05).n_layers == 1
    assert spec.decoder_config(5).th_v == -1


def test_p_zero_exact():
    for mode in ("2d", "batch", "online"):
        (r,) = run_monte_carlo(ExperimentSpec(mode=mode, ds=(5,), ps=(0.0,), trials=50))
        assert r.p_l == 0.0 and r.failures == 0 and r.p_l_lo == 0.0
        assert r.matches == 0 and r.vertical_span_fraction == 0.0


def test_row_invariants():
    rows = run_monte_carlo(ExperimentSpec(mode="batch", ds=(3, 5), ps=(0.02, 0.05), trials=400, seed=3))
    assert [(r.d, r.p) for r in rows] == [(3, 0.02), (3, 0.05), (5, 0.02), (5, 0.05)]
    for r in rows:
        assert r.failures <= r.trials == 400
        assert r.p_l == r.failures / r.trials
        assert r.p_l_lo <= r.p_l <= r.p_l_hi
        assert r.cycles_max >= r.cycles_mean >= 0


def test_wilson():
    lo, hi = wilson_interval(10, 100)
    assert lo == pytest.approx(0.05522, abs=1e-4) and hi == pytest.approx(0.17436, abs=1e-4)
    assert wilson_interval(0, 100)[0] == 0.0
    w1 = np.subtract(*wilson_interval(100, 1000)[::-1])
    w2 = np.subtract(*wilson_interval(1000, 10000)[::-1])
    assert w1 / w2 == pytest.approx(math.sqrt(10), rel=0.05)


def test_csv_schema_and_determinism():
    spec = ExperimentSpec(mode="online", ds=(5,), ps=(0.01, 0.02), trials=1200, seed=9)
    a = render(run_monte_carlo(spec))
    assert a.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert a.splitlines()[0] == "d,p,mode,trials,logical_failures,overflow_failures,p_l,p_l_lo,p_l_hi,cycles_max,cycles_mean,cycles_std"
    assert render(run_monte_carlo(spec)) == a
    from dataclasses import replace

    assert render(run_monte_carlo(replace(spec, workers=3))) == a
    other = render(run_monte_carlo(replace(spec, seed=10)))
    assert other != a


def test_json_output():
    rows = run_monte_carlo(ExperimentSpec(mode="batch", ds=(5,), ps=(0.01,), trials=100))
    (rec,) = json.loads(render(rows, "json"))
    assert set(CSV_COLUMNS) <= set(rec) and "incomplete_failures" in rec


def test_max_seconds_stops_early():
    spec = ExperimentSpec(mode="batch", ds=(5,), ps=(0.01,), trials=100_000, max_seconds=0.0)
    (r,) = run_monte_carlo(spec)
    assert 0 < r.trials < 100_000


def test_threshold_crossing():
    # p_L ~ (p / 0.01)^((d+1)/2) scaled, crossing at exactly 0.01
    ps = [0.005, 0.0075, 0.01, 0.0125, 0.015]
    rows = [row(d, p, 0.1 * (p / 0.01) ** ((d + 1) / 2)) for d in (5, 7, 9) for p in ps]
    est = threshold_estimate(rows)
    assert est.found and est.p_th == pytest.approx(0.01, rel=1e-6)
    assert len(est.crossings) == 3


def test_threshold_no_crossing():
    rows = [row(d, p, p / d) for d in (5, 7) for p in (0.01, 0.02, 0.03)]
    est = threshold_estimate(rows)
    assert not est.found and est.status == "no crossing" and est.p_th is None
    assert threshold_estimate(rows[:3]).status == "need at least two distances"


def test_vertical_span_and_cycles():
    spec = ExperimentSpec(mode="2d", ds=(5,), ps=(0.02,), trials=200)
    (v,) = vertical_span_fraction(spec)
    assert v.mode == "batch" and v.matches > 0 and 0 <= v.vertical_span_fraction < 0.05
    (c,) = cycle_stats_experiment(spec)
    assert c.mode == "online" and c.layers > 0 and c.cycles_mean > 0


def test_oracle_check_small():
    rep = oracle_check(ExperimentSpec(ds=(5,), ps=(0.01,), trials=60, seed=1))
    assert rep.trials == 60 and rep.clear_rate == 1.0
    assert rep.below_oracle == 0 and rep.min_ratio >= 1.0
    assert set(rep.summary()) >= {"syndrome_clear_rate", "mean_weight_ratio", "skipped_oracle_overflow"}


def test_isolated_pairs():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        isolated_pair_instance(3, 4, rng)
    evs = isolated_pair_instance(9, 10, rng)
    assert len(evs) % 2 == 0 and len(evs) >= 2
    for d in (5, 9):
        rep = isolated_pair_check(d, d + 1, 100, seed=d)
        assert rep.clear_rate == 1.0 and rep.ratios and set(rep.ratios) == {1.0}


def test_single_error_audit():
    out = single_error_audit(3)
    assert out["cases"] > 13 and out["not_cleared"] == 0 and out["logical"] == 0
