"""Command-line entry point: ``arreplay run|example1|example2|example3|equivalence|bayes``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .config import ExperimentConfig, load_config, preset
from .designs import dump_trajectories, run_design
from .equivtest import check_equivalence, check_symmetry
from .harness import emit_csv, run_bayes, run_experiment, write_csv
from .streams import RunStreams


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--seed", type=int, help="master seed (overrides config and ARREPLAY_SEED)")
    p.add_argument("--workers", type=int, help="worker processes (overrides ARREPLAY_WORKERS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arreplay",
                                     description="Compare two bandit policies by simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the experiment described by a JSON config")
    p.add_argument("config")
    _add_common(p)
    p.add_argument("--dump-trajectories", metavar="CSV",
                   help="also write per-run trajectories of the first runs")
    p.add_argument("--dump-runs", type=int, default=1, help="runs to dump per design/horizon")

    for name in ("example1", "example2", "example3"):
        p = sub.add_parser(name, help=f"run the built-in {name} preset")
        _add_common(p)
        p.add_argument("--config", help="JSON file whose top-level fields override the preset")
        p.add_argument("--M-var", type=int, dest="M_var")
        p.add_argument("--M-ci", type=int, dest="M_ci")
        p.add_argument("--horizons", type=int, nargs="+")

    p = sub.add_parser("equivalence", help="test AR against the shared-stack model")
    p.add_argument("config")
    _add_common(p)
    p.add_argument("--M", type=int, help="replications per design (default: M_var)")
    p.add_argument("--symmetry", action="store_true", help="also run the role-swap test")

    p = sub.add_parser("bayes", help="Bayesian AR estimate over sampled instances")
    p.add_argument("config")
    _add_common(p)
    return parser


def _finish_config(cfg: ExperimentConfig, args) -> ExperimentConfig:
    cfg = cfg.apply_environment()
    return cfg.with_overrides(master_seed=args.seed, n_jobs=args.workers)


def _emit(result, out):
    if out:
        emit_csv(result, out)
    else:
        write_csv(result, sys.stdout)


def _dump(cfg: ExperimentConfig, path, n_runs: int) -> None:
    records = []
    run_id = 0
    for T in cfg.horizons:
        for design in cfg.designs:
            for m in range(n_runs):
                streams = RunStreams.for_run(cfg.master_seed, m, T, design)
                t0, t1 = run_design(design, cfg.policy0, cfg.policy1, cfg.instance, T, streams)
                records.append((run_id, t0, t1))
                run_id += 1
    dump_trajectories(records, path)


def _equivalence(cfg: ExperimentConfig, args) -> int:
    reports = check_equivalence(cfg, args.M, n_jobs=cfg.n_jobs)
    if args.symmetry:
        reports.append(check_symmetry(cfg, args.M, n_jobs=cfg.n_jobs))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["test", "statistic", "p_value", "pass"])
        for r in reports:
            writer.writerow([r.name, repr(r.statistic), repr(r.p_value), str(r.passed).lower()])
    finally:
        if fh is not sys.stdout:
            fh.close()
    failed = [r for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} tests passed", file=sys.stderr)
    return 1 if failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("example1", "example2", "example3"):
            overrides = {}
            if args.config:
                overrides = json.loads(Path(args.config).read_text())
            for key in ("M_var", "M_ci", "horizons"):
                if getattr(args, key) is not None:
                    overrides[key] = getattr(args, key)
            cfg = _finish_config(preset(args.command, overrides), args)
            _emit(run_experiment(cfg), args.out)
            return 0
        cfg = _finish_config(load_config(args.config), args)
        if args.command == "run":
            _emit(run_experiment(cfg), args.out)
            if args.dump_trajectories:
                _dump(cfg, args.dump_trajectories, args.dump_runs)
            return 0
        if args.command == "equivalence":
            return _equivalence(cfg, args)
        if args.command == "bayes":
            _emit(run_bayes(cfg), args.out)
            return 0
    except (ValueError, OSError) as exc:
        print(f"arreplay: error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
