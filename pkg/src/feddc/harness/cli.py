"""``feddc`` command line entry point.

Exit codes: 0 on success, 2 for configuration or input errors, 3 when a
runtime contract is violated.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .. import theory
from ..datagen import SynthConfig, generate_synthetic, save_csv
from ..errors import ConfigError, ContractViolation, InfeasibleError
from .config import SWEEP_FIELDS, ExperimentConfig, load_config
from .metrics import SUMMARY_COLUMNS, read_metrics, render_rows, summarize, write_text
from .runner import load_pool, run_sweep, run_to_files

THEORY_COLUMNS = (
    "check", "m", "k", "d", "delta", "r", "h", "n_local", "eps", "local_delta",
    "bound", "target", "empirical", "stderr", "exact", "flag",
)  # fmt: skip

# grids used by the acceptance checks
PRESETS = {
    "acceptance": {
        "coverage_m": [2, 5, 10, 50],
        "coverage_k": ["2", "half", "m"],
        "coverage_delta": [0.5, 0.1, 0.01],
        "radon_r": [3],
        "radon_h": [1, 2],
    }
}


def _csv_list(kind):
    def parse(text):
        if not text.strip():
            return []
        try:
            return [kind(v.strip()) for v in text.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None

    return parse


def _k_value(v):
    if v in ("half", "m"):
        return v
    return str(int(v))


def _grid_arg(text):
    key, sep, values = text.partition("=")
    if not sep or not values:
        raise argparse.ArgumentTypeError(f"expected FIELD=v1,v2,..., got {text!r}")
    key = key.strip()
    if key not in SWEEP_FIELDS:
        raise argparse.ArgumentTypeError(f"unknown sweep field {key!r}; sweepable fields are {SWEEP_FIELDS}")
    return key, [v.strip() for v in values.split(",")]


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    if getattr(args, "header", False):
        cfg = replace(cfg, data=replace(cfg.data, header=True))
    cfg.validate()
    return cfg


def cmd_datagen(args):
    if args.config:
        data = load_pool(_load(args))
    else:
        syn = SynthConfig(seed=args.seed or 0)
        syn.validate()
        data = generate_synthetic(syn)
    out = args.out or "pool.csv"
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    save_csv(data, out, header=args.header)
    print(f"wrote {len(data)} samples x {data.dim} features to {out}")
    return 0


def _default_out(cfg, suffix):
    return cfg.out or f"runs/{cfg.name}{suffix}"


def cmd_run(args):
    cfg = _load(args)
    if cfg.sweep:
        print("note: [sweep] is ignored by 'run'; use 'sweep'", file=sys.stderr)
        cfg = replace(cfg, sweep={})
    records, path = run_to_files(cfg, args.out or _default_out(cfg, ".csv"))
    last = records[-1]
    print(f"{path}: round {last.round}, test accuracy {last.test_mean:.4f} [{last.test_lo:.4f}, {last.test_hi:.4f}]")
    return 0


def cmd_sweep(args):
    cfg = _load(args)
    grid = dict(cfg.sweep)
    for key, values in args.grid or []:
        grid[key] = values
    out = args.out or _default_out(cfg, "")
    rows = run_sweep(cfg, out, grid, jobs=args.jobs)
    for row in rows:
        print(f"{row['source']}: final test accuracy {row['final_test_mean']:.4f}")
    print(f"summary: {Path(out) / 'summary.csv'}")
    return 0


def cmd_theory(args):
    grid = dict(PRESETS[args.preset]) if args.preset else {}
    for key in ("coverage_m", "coverage_k", "coverage_delta", "radon_r", "radon_h"):
        v = getattr(args, key)
        if v is not None:
            grid[key] = v
    rows = []
    ms, ks, deltas = grid.get("coverage_m", []), grid.get("coverage_k", []), grid.get("coverage_delta", [])
    for m in ms:
        if m < 2:
            raise ConfigError(f"--coverage-m: m must be >= 2, got {m}")
    for delta in deltas:
        if not 0 < delta <= 1:
            raise ConfigError(f"--coverage-delta: delta must lie in (0, 1], got {delta}")
    if ms and ks and deltas:
        rows += theory.coverage_table(ms, ks, deltas, d=args.d, trials=args.trials, seed=args.seed)
    rs, hs = grid.get("radon_r", []), grid.get("radon_h", [])
    if any(r < 3 for r in rs) or any(h < 1 for h in hs):
        raise ConfigError("--radon-r values must be >= 3 and --radon-h values >= 1")
    if rs and hs:
        rows += theory.radon_table(rs, hs, args.n_local, args.target_delta, trials=args.trials, seed=args.seed)
    text = render_rows(THEORY_COLUMNS, rows)
    if args.out:
        write_text(args.out, text)
        flagged = sum(bool(r.get("flag")) for r in rows)
        print(f"wrote {len(rows)} rows ({flagged} flagged) to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_summarize(args):
    rows = [summarize(read_metrics(p), source=str(p)) for p in args.files]
    text = render_rows(SUMMARY_COLUMNS, rows)
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="feddc", description="Federated daisy-chaining simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("datagen", help="write a synthetic (or re-encoded csv) dataset")
    g.add_argument("--config")
    g.add_argument("--out")
    g.add_argument("--seed", type=int)
    g.add_argument("--header", action="store_true", help="write a header row")
    g.set_defaults(func=cmd_datagen)

    r = sub.add_parser("run", help="run one experiment, write metrics CSV and manifest")
    r.add_argument("--config", required=True, help="TOML config or a run manifest (.json)")
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.add_argument("--header", action="store_true", help="input CSVs have a header row")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run the cross product of sweep values")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory")
    s.add_argument("--seed", type=int)
    s.add_argument("--header", action="store_true")
    s.add_argument("--grid", action="append", type=_grid_arg, metavar="FIELD=v1,v2", help="repeatable")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    t = sub.add_parser("theory-check", help="compare analytic bounds against simulation")
    t.add_argument("--preset", choices=sorted(PRESETS))
    t.add_argument("--coverage-m", type=_csv_list(int))
    t.add_argument("--coverage-k", type=_csv_list(_k_value))
    t.add_argument("--coverage-delta", type=_csv_list(float))
    t.add_argument("--d", type=int, default=1)
    t.add_argument("--radon-r", type=_csv_list(int))
    t.add_argument("--radon-h", type=_csv_list(int))
    t.add_argument("--n-local", type=int, default=5)
    t.add_argument("--target-delta", type=float, default=0.2)
    t.add_argument("--trials", type=int, default=100_000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out")
    t.set_defaults(func=cmd_theory)

    m = sub.add_parser("summarize", help="final-round summary of metrics CSVs")
    m.add_argument("files", nargs="+")
    m.add_argument("--out")
    m.set_defaults(func=cmd_summarize)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:  # includes ingestion errors
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ContractViolation, InfeasibleError) as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return 3


__all__ = ["ExperimentConfig", "build_parser", "main"]

if __name__ == "__main__":
    sys.exit(main())
