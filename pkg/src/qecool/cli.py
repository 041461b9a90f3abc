"""Command-line entry point: ``qecool <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .decoder import Mode, decode_grid
from .harness import (
    ExperimentSpec,
    cycle_stats_experiment,
    oracle_check,
    render,
    run_monte_carlo,
    single_error_audit,
    threshold_estimate,
    vertical_span_fraction,
)
from .hardware import hardware_report
from .lattice import ConfigError, build_lattice, measure_rounds, sample_errors, trial_seed

# built-in values for flags left unset on the command line and in the config file
DEFAULTS = {
    "d": None,  # 5 for simulations, 9 for hardware
    "p": [0.01],
    "mode": "batch",
    "trials": None,
    "seed": 0,
    "clock_hz": 2e9,
    "meas_interval_ns": 1000.0,
    "reg_depth": 7,
    "th_v": None,
    "format": "csv",
    "out": None,
    "max_seconds": None,
    "workers": 1,
    "rounds": None,
    "budget_w": 1.0,
}

_CASTS = {
    "d": int,
    "p": float,
    "trials": int,
    "seed": int,
    "clock_hz": float,
    "meas_interval_ns": float,
    "reg_depth": int,
    "th_v": int,
    "max_seconds": float,
    "workers": int,
    "rounds": int,
    "budget_w": float,
}
_LISTS = {"d", "p"}


def _split_list(values, cast):
    out = []
    for v in values:
        out.extend(cast(x) for x in str(v).replace(",", " ").split())
    return out


def read_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; keys use flag names."""
    conf = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split(sep, 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        cast = _CASTS.get(key, str)
        conf[key] = _split_list([value], cast) if key in _LISTS else cast(value)
    return conf


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="file of key = value lines; flags override it")
    p.add_argument("--d", action="append", help="code distance (repeatable, or comma list)")
    p.add_argument("--p", action="append", help="physical error rate (repeatable, or comma list)")
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--clock-hz", type=float)
    p.add_argument("--meas-interval-ns", type=float)
    p.add_argument("--reg-depth", type=int)
    p.add_argument("--th-v", type=int)
    p.add_argument("--rounds", type=int, help="noisy rounds per trial (default d)")
    p.add_argument("--workers", type=int)
    p.add_argument("--max-seconds", type=float, help="wall-clock cap; stops adding trials once exceeded")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--out", help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qecool", description="QECOOL decoder simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "logical error rate per (d, p)",
        "threshold": "logical error rates plus the crossing estimate",
        "cycles": "per-layer execution cycles in online mode",
        "vertical-span": "fraction of matchings spanning three or more rounds (batch)",
        "oracle-check": "decoder matching weight against the exact matcher",
        "hardware": "SFQ power, clock limit and protectable qubits",
        "trace": "per-cycle message trace of one trial",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text, description=text)
        _common(sp)
        if name == "hardware":
            sp.add_argument("--budget-w", type=float, help="refrigerator power budget in watts")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge built-in defaults, the config file and explicit flags, in that order."""
    opts = dict(DEFAULTS)
    if args.config:
        opts.update(read_config_file(args.config))
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is None:
            continue
        opts[key] = _split_list(v, _CASTS[key]) if key in _LISTS else v
    return opts


def spec_from(opts: dict, mode: Optional[str] = None) -> ExperimentSpec:
    return ExperimentSpec(
        mode=mode or opts["mode"],
        ds=tuple(opts["d"] or [5]),
        ps=tuple(opts["p"]),
        trials=opts["trials"],
        seed=opts["seed"],
        clock_hz=opts["clock_hz"],
        meas_interval_s=opts["meas_interval_ns"] * 1e-9,
        reg_depth=opts["reg_depth"],
        th_v=opts["th_v"],
        n_rounds=opts["rounds"],
        workers=opts["workers"],
        max_seconds=opts["max_seconds"],
        out=opts["out"],
        fmt=opts["format"],
    )


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv_or_json(table: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(table, indent=2) + "\n"
    if not table:
        return ""
    cols = list(table[0])
    lines = [",".join(cols)] + [",".join(str(row[c]) for c in cols) for row in table]
    return "\n".join(lines) + "\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        opts = resolve(args)
        return _dispatch(args.command, opts)
    except (ConfigError, ValueError) as exc:
        print(f"qecool: error: {exc}", file=sys.stderr)
        return 2


def _dispatch(cmd: str, opts: dict) -> int:
    fmt, out = opts["format"], opts["out"]
    if cmd in ("simulate", "cycles", "threshold"):
        spec = spec_from(opts, mode="online" if cmd == "cycles" else None)
        rows = cycle_stats_experiment(spec) if cmd == "cycles" else run_monte_carlo(spec)
        if cmd != "threshold":
            _emit(render(rows, fmt), out)
            return 0
        est = threshold_estimate(rows)
        if fmt == "json":
            doc = {
                "rows": json.loads(render(rows, "json")),
                "threshold": {
                    "status": est.status,
                    "p_th": est.p_th,
                    "lo": est.lo,
                    "hi": est.hi,
                    "crossings": [list(c) for c in est.crossings],
                },
            }
            _emit(json.dumps(doc, indent=2) + "\n", out)
        else:
            _emit(render(rows, "csv"), out)
        if est.found:
            print(f"p_th = {est.p_th:.5g} (pairwise range {est.lo:.5g} .. {est.hi:.5g})", file=sys.stderr)
        else:
            print(f"p_th: {est.status}", file=sys.stderr)
        return 0
    if cmd == "vertical-span":
        rows = vertical_span_fraction(spec_from(opts))
        table = [
            {
                "d": r.d,
                "p": r.p,
                "trials": r.trials,
                "matches": r.matches,
                "long_vertical_matches": r.long_vertical_matches,
                "fraction": round(r.vertical_span_fraction, 12),
            }
            for r in rows
        ]
        _emit(_csv_or_json(table, fmt), out)
        return 0
    if cmd == "oracle-check":
        spec = spec_from(opts)
        table = []
        for d in spec.ds:
            for p in spec.ps:
                rep = oracle_check(spec, d=d, p=p).summary()
                table.append({"d": d, "p": p, **rep})
        if 3 in spec.ds:
            print(f"single-error audit d=3: {single_error_audit(3)}", file=sys.stderr)
        _emit(_csv_or_json(table, fmt), out)
        return 0
    if cmd == "hardware":
        table = [hardware_report(d=d, freq_Hz=opts["clock_hz"], budget_W=opts["budget_w"]) for d in opts["d"] or [9]]
        _emit(_csv_or_json(table, fmt), out)
        return 0
    if cmd == "trace":
        return _trace(opts)
    raise ValueError(f"unknown command {cmd!r}")


def _trace(opts: dict) -> int:
    spec = spec_from(opts)
    d, p = spec.ds[0], spec.ps[0]
    lattice = build_lattice(d)
    errors = sample_errors(lattice, spec.lattice_config(d, p), trial_seed(spec.seed, 0))
    syn = measure_rounds(lattice, errors)
    lines: list[str] = []
    res = decode_grid(lattice, syn.event_grid(), spec.decoder_config(d), trace=lines.append)
    header = [
        f"# d={d} p={p} mode={spec.mode.value} seed={spec.seed}",
        f"# events (r,c,t): {syn.event_list()}",
        "# cycle kind src dst [dir]",
    ]
    footer = [f"# outcome={res.outcome.value} cycles={res.total_cycles} layers={res.cycles.counts.tolist()}"]
    _emit("\n".join(header + lines + footer) + "\n", opts["out"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
