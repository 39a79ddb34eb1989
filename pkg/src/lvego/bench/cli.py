"""Command-line entry point ``bench``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from ..algorithms import ALGORITHMS, doe_size, run_algorithm
from ..problems import PROBLEMS, get_problem
from .metrics import compute_metrics, export, latent_correlation_rows
from .store import CampaignConfig, ResultStore, run_campaign, write_histories


def _cmd_run(args) -> int:
    config = CampaignConfig.load(args.config)
    store = run_campaign(config, args.store, workers=args.workers)
    print(f"wrote {len(config.jobs())} runs to {store.root}")
    return 0


def _cmd_metrics(args) -> int:
    report = compute_metrics(ResultStore(args.store))
    for path in export(report, args.out, args.format):
        print(path)
    return 0


def _cmd_single(args) -> int:
    problem = get_problem(args.problem)
    budget = args.budget if args.budget is not None else doe_size(problem) + 50
    hists = [run_algorithm(problem, args.algo, args.seed + r, budget) for r in range(args.reps)]
    for h in hists:
        point, y = h.best_point()
        print(f"{h.run_id}: status={h.status} best={y:.6g} at x={list(point.x)} u={list(point.u)}")
    if args.reps > 1:
        finals = [h.best_so_far[-1] for h in hists]
        print(f"median final best over {args.reps} runs: {np.median(finals):.6g}")
    if args.store:
        write_histories(args.store, hists)
    return 0


def _cmd_latent_diag(args) -> int:
    rows = latent_correlation_rows(ResultStore(args.store).load(args.run))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=["iteration", "variable", "level_i", "level_j",
                                            "correlation"])
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.out:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a campaign described by a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--store", default="results")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("metrics", help="compute metrics from a result store")
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("single", help="run one algorithm on one problem")
    p.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    p.add_argument("--algo", required=True, choices=ALGORITHMS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--store", help="optional directory to save the histories")
    p.set_defaults(func=_cmd_single)

    p = sub.add_parser("latent-diag", help="per-iteration level correlations of a run as CSV")
    p.add_argument("--store", required=True)
    p.add_argument("--run", required=True, help="run id, e.g. beam-lv-ego-0")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=_cmd_latent_diag)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
