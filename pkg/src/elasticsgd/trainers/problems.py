"""Training problems: what a worker computes a gradient of.

Trainers are generic over a problem object so the same schedules drive both
real network training and the convex diagnostics used in tests:

* ``init_weights()`` -> flat float64 parameter buffer
* ``gradient(weights, rng, batch_size)`` -> flat gradient buffer (mean loss)
* ``train_loss(weights)`` / ``test_accuracy(weights)`` -> metrics (accuracy
  may be NaN when the problem has no classification test set)
* ``batch_nbytes(batch_size)`` -> bytes staged to a worker per batch (0 means
  the data already lives with the worker and no message is priced)
* ``layer_nbytes()`` -> per-layer message sizes for unpacked transfers
"""

from __future__ import annotations

import numpy as np

from ..datasets import Dataset, sample_batch
from ..kernels import softmax_cross_entropy
from ..network import ModelSpec, backward, build_model, forward, packed_weights_for
from ..rng import CounterRng
from .records import weights_digest


class NetworkProblem:
    """Feed-forward classification on a dataset pair."""

    def __init__(self, spec: ModelSpec, train: Dataset, test: Dataset | None = None,
                 loss_eval_samples: int = 1024):
        self.spec = spec
        self.train = train
        self.test = test
        k = min(loss_eval_samples, train.n)
        self._loss_x = train.samples[:k]
        self._loss_y = train.labels[:k]
        self.n_params = spec.parameter_count()

    def init_weights(self) -> np.ndarray:
        return build_model(self.spec).buffer

    def gradient(self, weights: np.ndarray, rng: CounterRng, batch_size: int) -> np.ndarray:
        packed = packed_weights_for(self.spec, weights)
        batch = sample_batch(self.train, batch_size, rng)
        cache, logits = forward(self.spec, packed, batch.samples)
        _, dlogits = softmax_cross_entropy(logits, batch.labels)
        return backward(self.spec, packed, cache, dlogits)

    def train_loss(self, weights: np.ndarray) -> float:
        packed = packed_weights_for(self.spec, weights)
        _, logits = forward(self.spec, packed, self._loss_x)
        loss, _ = softmax_cross_entropy(logits, self._loss_y)
        return loss

    def test_accuracy(self, weights: np.ndarray) -> float:
        if self.test is None:
            return float("nan")
        packed = packed_weights_for(self.spec, weights)
        _, logits = forward(self.spec, packed, self.test.samples)
        return float((logits.argmax(axis=1) == self.test.labels).mean())

    def batch_nbytes(self, batch_size: int) -> int:
        return batch_size * self.train.dim * 8

    def layer_nbytes(self) -> list[int]:
        dims = self.spec.dims
        return [(fi * fo + fo) * 8 for fi, fo in zip(dims[:-1], dims[1:])]

    def fingerprint(self) -> str:
        head = weights_digest(self.train.samples[: min(16, self.train.n)])[:12]
        return f"net{self.spec.dims}-n{self.train.n}-{head}"


class QuadraticProblem:
    """Strongly convex quadratic 0.5 * (w - target)' D (w - target).

    The gradient is deterministic (no minibatch noise), so every schedule
    that contracts reaches the closed-form optimum ``target``.
    """

    def __init__(self, target: np.ndarray, curvature: np.ndarray | None = None):
        self.target = np.asarray(target, dtype=np.float64)
        self.curvature = (np.ones_like(self.target) if curvature is None
                          else np.asarray(curvature, dtype=np.float64))
        self.n_params = self.target.size

    @classmethod
    def random(cls, dim: int, seed: int) -> "QuadraticProblem":
        rng = CounterRng(seed)
        target = rng.normal_block(dim)
        curvature = 0.5 + rng.uniform_block(dim)  # eigenvalues in [0.5, 1.5]
        return cls(target, curvature)

    def init_weights(self) -> np.ndarray:
        return np.zeros_like(self.target)

    def gradient(self, weights: np.ndarray, rng: CounterRng, batch_size: int) -> np.ndarray:
        return self.curvature * (weights - self.target)

    def train_loss(self, weights: np.ndarray) -> float:
        d = weights - self.target
        return float(0.5 * np.dot(d, self.curvature * d))

    def distance_to_optimum(self, weights: np.ndarray) -> float:
        return float(np.linalg.norm(weights - self.target))

    def test_accuracy(self, weights: np.ndarray) -> float:
        return float("nan")

    def batch_nbytes(self, batch_size: int) -> int:
        return 0

    def layer_nbytes(self) -> list[int]:
        return [self.n_params * 8]

    def fingerprint(self) -> str:
        return f"quadratic-{self.n_params}-{weights_digest(self.target)[:12]}"


class ZeroGradientProblem(QuadraticProblem):
    """Gradients are identically zero; isolates the elastic exchange terms."""

    def __init__(self, dim: int, init: np.ndarray | None = None, seed: int = 0):
        super().__init__(np.zeros(dim))
        self._init = (CounterRng(seed).normal_block(dim) if init is None
                      else np.asarray(init, dtype=np.float64))

    def init_weights(self) -> np.ndarray:
        return self._init.copy()

    def gradient(self, weights, rng, batch_size):
        return np.zeros_like(weights)

    def fingerprint(self) -> str:
        return f"zerograd-{self.n_params}"
