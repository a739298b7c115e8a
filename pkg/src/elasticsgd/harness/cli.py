"""Command line interface.

    elasticsgd run <config.ini>
    elasticsgd predict --workers P --model-bytes N --net {fdr|qdr|10gbe}
                       [--schedules rr,tree]
    elasticsgd compare <curve.csv...> --target-acc X [--expect a,b,c]

Exit codes: 0 success, 1 runtime failure (prints the trainer id),
2 config parse error (prints the offending section/key).
"""

from __future__ import annotations

import argparse
import sys

from ..errors import ConfigError, ElasticSGDError
from ..fabric.costmodel import CostModel
from .configfile import load_experiment
from .reports import compare_report, load_record_from_csv, predict_speedup


def _cmd_run(args) -> int:
    from .reports import TrainerFailure, run_experiments

    try:
        cfg = load_experiment(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        results = run_experiments(cfg, parallel=args.parallel)
    except TrainerFailure as exc:
        print(str(exc), file=sys.stderr)
        return 1
    for name, record in results:
        print(f"{name}: {record.method} finished in {record.total_seconds:.6g}s "
              f"(comm {100 * record.comm_ratio:.1f}%)")
    print(f"reports written to {cfg.output_dir}")
    return 0


def _cmd_predict(args) -> int:
    cm = CostModel.preset(args.net)
    schedules = tuple(args.schedules.split(","))
    try:
        prediction = predict_speedup(args.workers, args.model_bytes, cm, schedules)
    except ElasticSGDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(prediction.render())
    return 0


def _cmd_compare(args) -> int:
    try:
        records = [load_record_from_csv(p) for p in args.curves]
        expected = args.expect.split(",") if args.expect else None
        report = compare_report(records, args.target_acc, expected)
    except ElasticSGDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(report.render())
    return 0 if not report.ordering_violations else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elasticsgd",
        description="Elastic-averaging SGD trainer benchmarks and predictions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run every trainer in a config file")
    p_run.add_argument("config")
    p_run.add_argument("--parallel", action="store_true",
                       help="run simulated-engine trainers concurrently")
    p_run.set_defaults(fn=_cmd_run)

    p_pred = sub.add_parser("predict", help="closed-form schedule comparison")
    p_pred.add_argument("--workers", type=int, required=True)
    p_pred.add_argument("--model-bytes", type=int, required=True)
    p_pred.add_argument("--net", choices=["fdr", "qdr", "10gbe"], default="fdr")
    p_pred.add_argument("--schedules", default="rr,tree")
    p_pred.set_defaults(fn=_cmd_predict)

    p_cmp = sub.add_parser("compare", help="rank runs by time to a target accuracy")
    p_cmp.add_argument("curves", nargs="+")
    p_cmp.add_argument("--target-acc", type=float, required=True)
    p_cmp.add_argument("--expect", default=None,
                       help="comma-separated labels in expected finish order")
    p_cmp.set_defaults(fn=_cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
