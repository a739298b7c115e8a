"""Shared helpers for trainer implementations."""

from __future__ import annotations

import numpy as np

from ..fabric.engine import CATEGORIES, VirtualTimeline
from .records import RunRecord, weights_digest


class Recorder:
    """Collects the (time, iteration, loss, accuracy) series.

    Evaluation happens outside the timed path: under the simulated engine it
    simply does not advance the virtual clock, and under the threaded engine
    snapshots are taken during the run but scored only after the clock stops
    (``defer=True``).
    """

    def __init__(self, problem, eval_every: int, total_iterations: int, defer: bool = False):
        self.problem = problem
        self.eval_every = eval_every
        self.total = total_iterations
        self.defer = defer
        self.rows: list[tuple[float, int]] = []
        self._metrics: list[tuple[float, float]] = []
        self._snapshots: list[np.ndarray] = []

    def due(self, iteration: int) -> bool:
        if iteration == self.total:
            return True
        return self.eval_every > 0 and iteration % self.eval_every == 0

    def maybe(self, iteration: int, time_s: float, weights: np.ndarray) -> None:
        if not self.due(iteration):
            return
        self.rows.append((time_s, iteration))
        if self.defer:
            self._snapshots.append(weights.copy())
        else:
            self._metrics.append(
                (self.problem.train_loss(weights), self.problem.test_accuracy(weights))
            )

    def build(self, method: str, total_seconds: float, final_weights: np.ndarray,
              breakdown: dict[str, float] | None = None,
              timeline: VirtualTimeline | None = None,
              worker_weights: list[np.ndarray] | None = None) -> RunRecord:
        if self.defer:
            self._metrics = [
                (self.problem.train_loss(w), self.problem.test_accuracy(w))
                for w in self._snapshots
            ]
        if breakdown is None:
            breakdown = timeline.breakdown() if timeline else {c: 0.0 for c in CATEGORIES}
        return RunRecord(
            method=method,
            workload=self.problem.fingerprint(),
            times=[t for t, _ in self.rows],
            iterations=[i for _, i in self.rows],
            train_loss=[l for l, _ in self._metrics],
            test_accuracy=[a for _, a in self._metrics],
            breakdown=breakdown,
            total_seconds=total_seconds,
            weights_digest=weights_digest(final_weights),
            final_weights=final_weights.copy(),
            final_worker_weights=(
                [w.copy() for w in worker_weights] if worker_weights is not None else None
            ),
            events=timeline.events if timeline is not None else None,
        )
