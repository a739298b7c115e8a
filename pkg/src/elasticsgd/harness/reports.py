"""Report generation: metric CSVs, breakdown CSVs, comparisons, predictions.

CSV files are locale independent (C-style floats, fixed column order) and
round-trip through any standard CSV parser. Each trainer emits
``<name>_curve.csv`` (time_s, iteration, train_loss, test_accuracy) and
``<name>_breakdown.csv`` (one row: the six categories, total_s, comm_ratio),
plus a small ``<name>_meta.json`` sidecar carrying the method id, workload
fingerprint, and final weight digest so later comparisons can check that runs
came from the same workload.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

from ..errors import InputError
from ..fabric.costmodel import CostModel, message_cost, tree_depth
from ..fabric.engine import CATEGORIES
from ..trainers import RunRecord, run_trainer
from .configfile import ExperimentConfig

CURVE_COLUMNS = ("time_s", "iteration", "train_loss", "test_accuracy")


class TrainerFailure(RuntimeError):
    """A trainer raised during an experiment; carries the trainer's label."""

    def __init__(self, name: str, cause: Exception):
        super().__init__(f"trainer {name!r} failed: {cause}")
        self.name = name
        self.cause = cause


def write_curve_csv(path: Path, record: RunRecord) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for t, it, loss, acc in zip(record.times, record.iterations,
                                    record.train_loss, record.test_accuracy):
            writer.writerow([repr(float(t)), it, repr(float(loss)), repr(float(acc))])


def write_breakdown_csv(path: Path, record: RunRecord) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(CATEGORIES) + ["total_s", "comm_ratio"])
        writer.writerow(
            [repr(float(record.breakdown.get(c, 0.0))) for c in CATEGORIES]
            + [repr(float(record.total_seconds)), repr(float(record.comm_ratio))]
        )


def write_meta(path: Path, record: RunRecord) -> None:
    path.write_text(json.dumps({
        "method": record.method,
        "workload": record.workload,
        "weights_digest": record.weights_digest,
        "total_seconds": record.total_seconds,
        "final_accuracy": record.final_accuracy(),
    }, indent=2))


def run_experiments(cfg: ExperimentConfig, parallel: bool = False
                    ) -> list[tuple[str, RunRecord]]:
    """Run every configured trainer and emit all reports.

    Trainers run sequentially by default so threaded-engine wall-clock
    numbers are unperturbed; with ``parallel=True`` the simulated-engine
    trainers run concurrently (their virtual clocks are unaffected) while
    threaded trainers still run one at a time.
    """
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    problem = cfg.problem()
    records: dict[str, RunRecord] = {}
    simulated = [(n, t) for n, t in cfg.trainers if t.cluster.engine == "simulated"]
    threaded = [(n, t) for n, t in cfg.trainers if t.cluster.engine == "threaded"]
    if parallel and len(simulated) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=min(4, len(simulated))) as pool:
            futures = {n: pool.submit(run_trainer, t, problem, cfg.cost_model)
                       for n, t in simulated}
        for name, future in futures.items():
            try:
                records[name] = future.result()
            except Exception as exc:
                raise TrainerFailure(name, exc) from exc
        sequential = threaded
    else:
        sequential = cfg.trainers
    for name, trainer_cfg in sequential:
        try:
            records[name] = run_trainer(trainer_cfg, problem, cfg.cost_model)
        except Exception as exc:
            raise TrainerFailure(name, exc) from exc

    results = []
    for name, _ in cfg.trainers:  # reports in config order
        record = records[name]
        write_curve_csv(cfg.output_dir / f"{name}_curve.csv", record)
        write_breakdown_csv(cfg.output_dir / f"{name}_breakdown.csv", record)
        write_meta(cfg.output_dir / f"{name}_meta.json", record)
        results.append((name, record))
    _write_summary(cfg.output_dir / "summary.txt", results)
    return results


def _write_summary(path: Path, results: list[tuple[str, RunRecord]]) -> None:
    lines = [f"{'name':<16} {'method':<16} {'time_s':>12} {'comm%':>7} "
             f"{'final_acc':>10}  digest"]
    for name, rec in results:
        acc = rec.final_accuracy()
        lines.append(
            f"{name:<16} {rec.method:<16} {rec.total_seconds:>12.6g} "
            f"{100 * rec.comm_ratio:>6.1f}% "
            f"{acc if not math.isnan(acc) else float('nan'):>10.4f}  "
            f"{rec.weights_digest[:16]}"
        )
    path.write_text("\n".join(lines) + "\n")


@dataclass
class SpeedupPrediction:
    workers: int
    model_bytes: int
    schedule_seconds: dict[str, float]  # schedule -> seconds per exchange round
    ratio: float  # first schedule time over second

    def render(self) -> str:
        lines = [f"workers={self.workers} model_bytes={self.model_bytes}"]
        for name, sec in self.schedule_seconds.items():
            lines.append(f"  {name:<12} {sec:.9g} s/round")
        names = list(self.schedule_seconds)
        lines.append(f"  speedup {names[0]} -> {names[1]}: {self.ratio:.6g}x")
        return "\n".join(lines)


def predict_speedup(workers: int, model_bytes: int, cm: CostModel,
                    schedules: tuple[str, str] = ("rr", "tree")) -> SpeedupPrediction:
    """Closed-form exchange-round cost under each schedule and their ratio.

    One round serves every worker once: P sequential messages for the
    round-robin schedule, ceil(log2 P) rounds for the tree collective.
    """
    if workers < 2:
        raise InputError("predict_speedup needs at least 2 workers")
    per_msg = message_cost(model_bytes, cm)
    costs = {}
    for s in schedules:
        if s == "rr":
            costs[s] = workers * per_msg
        elif s == "tree":
            costs[s] = tree_depth(workers) * per_msg
        else:
            raise InputError(f"unknown schedule {s!r}; have 'rr', 'tree'")
    names = list(schedules)
    return SpeedupPrediction(workers, model_bytes, costs,
                             costs[names[0]] / costs[names[1]])


@dataclass
class ComparisonRow:
    label: str
    method: str
    time_to_target: float | None
    final_accuracy: float
    total_seconds: float


@dataclass
class ComparisonReport:
    target_accuracy: float
    rows: list[ComparisonRow]  # sorted: reached target first, fastest first
    log10_error_series: dict[str, list[tuple[float, float]]]
    ordering_violations: list[str]

    def render(self) -> str:
        lines = [f"time to reach accuracy {self.target_accuracy}:"]
        for row in self.rows:
            reached = (f"{row.time_to_target:.6g} s" if row.time_to_target is not None
                       else "never")
            lines.append(f"  {row.label:<20} {reached:>14}   "
                         f"final_acc={row.final_accuracy:.4f}")
        for v in self.ordering_violations:
            lines.append(f"  ORDERING VIOLATION: {v}")
        return "\n".join(lines)


def compare_report(records: list[tuple[str, RunRecord]], target_accuracy: float,
                   expected_order: list[str] | None = None) -> ComparisonReport:
    """Time-to-target table plus log10 error-rate series for plotting.

    All records must come from the same workload; the error rate of an
    accuracy point a is log10(1 - a).
    """
    if len(records) < 2:
        raise InputError("compare_report needs at least two records")
    workloads = {rec.workload for _, rec in records}
    if len(workloads) > 1:
        raise InputError(f"records come from different workloads: {sorted(workloads)}")

    rows = []
    series = {}
    for label, rec in records:
        rows.append(ComparisonRow(
            label=label,
            method=rec.method,
            time_to_target=rec.time_to_accuracy(target_accuracy),
            final_accuracy=rec.final_accuracy(),
            total_seconds=rec.total_seconds,
        ))
        series[label] = [
            (t, math.log10(max(1.0 - a, 1e-300)))
            for t, a in zip(rec.times, rec.test_accuracy) if not math.isnan(a)
        ]
    rows.sort(key=lambda r: (r.time_to_target is None,
                             r.time_to_target if r.time_to_target is not None else 0.0))

    violations = []
    if expected_order:
        reached = {r.label: r.time_to_target for r in rows}
        for earlier, later in zip(expected_order[:-1], expected_order[1:]):
            te, tl = reached.get(earlier), reached.get(later)
            if te is None or (tl is not None and tl < te):
                violations.append(f"expected {earlier} to reach target before {later}")
    return ComparisonReport(target_accuracy, rows, series, violations)


def load_record_from_csv(curve_path: str) -> tuple[str, RunRecord]:
    """Rebuild a comparable record from a curve CSV plus its meta sidecar."""
    path = Path(curve_path)
    times, iters, losses, accs = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(CURVE_COLUMNS):
            raise InputError(f"{path} is not a curve CSV (columns {reader.fieldnames})")
        for row in reader:
            times.append(float(row["time_s"]))
            iters.append(int(row["iteration"]))
            losses.append(float(row["train_loss"]))
            accs.append(float(row["test_accuracy"]))
    meta_path = path.with_name(path.name.replace("_curve.csv", "_meta.json"))
    method, workload = path.stem, "unknown"
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        method, workload = meta["method"], meta["workload"]
    rec = RunRecord(method=method, workload=workload, times=times, iterations=iters,
                    train_loss=losses, test_accuracy=accs,
                    total_seconds=times[-1] if times else 0.0)
    return path.stem.replace("_curve", ""), rec
