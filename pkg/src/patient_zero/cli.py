"""Command line entry point: ``patient-zero {simulate,compare-theory,plot-data,validate}``."""

from __future__ import annotations

import argparse
import json
import sys
import time

from .harness import (ALGORITHMS, MODELS, ExperimentConfig, compare_theory, emit_plot_data,
                      run_experiment, summary_path)


def _number_list(text: str):
    values = [json.loads(v) for v in text.split(",")]
    return values[0] if len(values) == 1 else values


def _config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with flat keys; flags override it")
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--algo", action="append", choices=ALGORITHMS, dest="algorithms",
                   help="repeat to run several algorithms")
    for key in ("n", "d-h", "d-c", "p-i", "p-a", "p-h"):
        p.add_argument(f"--{key}", type=_number_list, dest=key.replace("-", "_"),
                       help="a value or a comma separated sweep")
    p.add_argument("--replicates", type=int)
    p.add_argument("--sg-replicates", type=int)
    p.add_argument("--seed", type=int, dest="base_seed")
    p.add_argument("--freeze", action="store_true", default=None, dest="freeze_epidemic",
                   help="keep the epidemic at the first hospitalization")
    p.add_argument("--workers", type=int)
    p.add_argument("-o", "--output")


def build_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
    for key in ("model", "algorithms", "n", "d_h", "d_c", "p_i", "p_a", "p_h", "replicates",
                "sg_replicates", "base_seed", "freeze_epidemic", "workers", "output"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    return ExperimentConfig.from_mapping(data)


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    start = time.perf_counter()
    _, rows = run_experiment(cfg)
    for row in rows:
        point = " ".join(f"{k}={row[k]}" for k in cfg.swept()) or "defaults"
        print(f"{point:<20} {row['algorithm']:<10} success {row['success']:.3f} "
              f"[{row['success_lo']:.3f}, {row['success_hi']:.3f}]  tests {row['tests']:.1f}")
    print(f"wrote {cfg.output} and {summary_path(cfg.output)} in {time.perf_counter() - start:.1f}s")
    return 0


def cmd_compare_theory(args) -> int:
    cfg = build_config(args)
    rows = compare_theory(cfg)
    for row in rows:
        print(f"p_a={row['p_a']:<5} LS {row['ls_empirical'] or '-':<8.6} vs {row['ls_theory']:.4f}   "
              f"LS+ {row['ls_plus_empirical'] or '-':<8.6} bound {row['ls_plus_bound']:.4f}")
    print(f"wrote {cfg.output}")
    return 0


def cmd_plot_data(args) -> int:
    for path in emit_plot_data(args.summary, args.out_dir):
        print(path)
    return 0


def cmd_validate(args) -> int:
    from .checks import run_checks

    failures = 0
    for name, ok, detail in run_checks(quick=not args.full):
        failures += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return 1 if failures else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="patient-zero", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a replicated sweep and write record and summary CSVs")
    _config_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare-theory", help="empirical success next to the analytic predictions")
    _config_args(p)
    p.set_defaults(func=cmd_compare_theory)

    p = sub.add_parser("plot-data", help="split a summary CSV into x,mean,lo,hi files")
    p.add_argument("summary")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_plot_data)

    p = sub.add_parser("validate", help="run the identity and oracle checks")
    p.add_argument("--full", action="store_true", help="use the full replicate counts")
    p.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
