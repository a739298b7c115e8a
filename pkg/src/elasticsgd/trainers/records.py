"""Run records: metric series, time breakdown, weight digests, evaluation."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError
from ..fabric.engine import CATEGORIES, COMM_CATEGORIES
from ..kernels import softmax_cross_entropy
from ..network import ModelSpec, PackedWeights, forward


def weights_digest(buffer: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(buffer).tobytes()).hexdigest()


@dataclass
class RunRecord:
    """Everything one training run reports.

    ``times``/``iterations``/``train_loss``/``test_accuracy`` are parallel
    arrays sampled at the evaluation cadence (``test_accuracy`` is NaN for
    workloads without a test set). ``breakdown`` maps every category to its
    exposed seconds; under the simulated engine the categories of a
    serialized schedule partition ``total_seconds`` exactly, while threaded
    runs report measured busy-time aggregates.
    """

    method: str
    workload: str
    times: list[float] = field(default_factory=list)
    iterations: list[int] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    test_accuracy: list[float] = field(default_factory=list)
    breakdown: dict[str, float] = field(default_factory=lambda: {c: 0.0 for c in CATEGORIES})
    total_seconds: float = 0.0
    weights_digest: str = ""
    final_weights: np.ndarray | None = None
    final_worker_weights: list[np.ndarray] | None = None
    events: list | None = None  # simulated engine only: the priced Event log

    @property
    def comm_seconds(self) -> float:
        return sum(self.breakdown.get(c, 0.0) for c in COMM_CATEGORIES)

    @property
    def comm_ratio(self) -> float:
        if self.total_seconds <= 0.0:
            return 0.0
        return self.comm_seconds / self.total_seconds

    def final_accuracy(self) -> float:
        return self.test_accuracy[-1] if self.test_accuracy else float("nan")

    def time_to_accuracy(self, target: float) -> float | None:
        """First time the accuracy series reaches ``target``, linearly
        interpolated between evaluation points; None if never reached."""
        prev_t, prev_a = None, None
        for t, a in zip(self.times, self.test_accuracy):
            if not np.isnan(a) and a >= target:
                if prev_a is None or np.isnan(prev_a) or prev_a >= target or t == prev_t:
                    return t
                frac = (target - prev_a) / (a - prev_a)
                return prev_t + frac * (t - prev_t)
            prev_t, prev_a = t, a
        return None

    def same_series(self, other: "RunRecord") -> bool:
        """Bitwise equality of the metric series and final weights (times
        included; meaningful under the simulated engine)."""
        return (
            self.method == other.method
            and self.times == other.times
            and self.iterations == other.iterations
            and self.train_loss == other.train_loss
            and _nan_equal(self.test_accuracy, other.test_accuracy)
            and self.breakdown == other.breakdown
            and self.total_seconds == other.total_seconds
            and self.weights_digest == other.weights_digest
        )


def _nan_equal(a, b) -> bool:
    if len(a) != len(b):
        return False
    return all(x == y or (np.isnan(x) and np.isnan(y)) for x, y in zip(a, b))


def evaluate(spec: ModelSpec, weights: PackedWeights, samples: np.ndarray,
             labels: np.ndarray) -> float:
    """Fraction of argmax-correct predictions; argmax ties resolve to the
    lowest class index. Deterministic and order-independent."""
    if samples.shape[1] != spec.dims[0]:
        raise InputError(
            f"samples dim {samples.shape[1]} != model input dim {spec.dims[0]}"
        )
    _, logits = forward(spec, weights, samples)
    return float((logits.argmax(axis=1) == labels).mean())


def eval_loss(spec: ModelSpec, weights: PackedWeights, samples: np.ndarray,
              labels: np.ndarray) -> float:
    _, logits = forward(spec, weights, samples)
    loss, _ = softmax_cross_entropy(logits, labels)
    return loss
