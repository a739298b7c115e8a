"""Alpha-beta message pricing and per-iteration compute models.

A message of n bytes costs ``alpha + beta * n`` seconds: ``alpha`` is the
link latency, ``beta`` the reciprocal bandwidth in seconds per byte. Message
sizes are always expressed in bytes throughout this package. The bundled
presets are measured constants for common interconnects:

    ==========  =========== ============== =======================
    preset      alpha (s)   beta (s/byte)  link
    ==========  =========== ============== =======================
    ``fdr``     0.7e-6      0.2e-9         Mellanox 56 Gb/s FDR IB
    ``qdr``     1.2e-6      0.3e-9         Intel 40 Gb/s QDR IB
    ``10gbe``   7.2e-6      0.9e-9         Intel 10 GbE NE020
    ==========  =========== ============== =======================
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

from ..errors import InputError

# compute model signature: (worker_id, batch_size, n_weights) -> seconds
ComputeFn = Callable[[int, int, int], float]


def constant_compute(seconds: float) -> ComputeFn:
    """Same forward+backward duration for every worker and batch."""

    def model(worker: int, batch_size: int, n_weights: int) -> float:
        return seconds

    return model


def measured_compute(run_minibatch: Callable[[], None], repeats: int = 3) -> ComputeFn:
    """Calibrate a constant compute model by timing ``run_minibatch`` on the
    host (median of ``repeats`` runs after one warmup).
    """
    run_minibatch()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        run_minibatch()
        samples.append(time.perf_counter() - t0)
    samples.sort()
    return constant_compute(samples[len(samples) // 2])


@dataclass(frozen=True)
class CostModel:
    """Pricing for every event the simulated engine charges.

    ``compute`` prices one forward+backward pass; ``worker_update`` and
    ``master_update`` price one weight update as a function of the packed
    parameter count; ``group_speedup`` maps a group-partition count to a
    compute-time multiplier (emulating faster effective memory when each
    partition's working set fits in fast local memory).
    """

    alpha: float
    beta: float
    compute: ComputeFn = field(default_factory=lambda: constant_compute(0.0))
    worker_update: Callable[[int], float] = lambda n_weights: 0.0
    master_update: Callable[[int], float] = lambda n_weights: 0.0
    group_speedup: Callable[[int], float] = lambda groups: 1.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise InputError("alpha and beta must be >= 0")

    @classmethod
    def preset(cls, name: str, **overrides) -> "CostModel":
        try:
            alpha, beta = _PRESETS[name]
        except KeyError:
            raise InputError(f"unknown cost preset {name!r}; have {sorted(_PRESETS)}")
        return cls(alpha=alpha, beta=beta, **overrides)

    def message_seconds(self, nbytes: int) -> float:
        return message_cost(nbytes, self)


_PRESETS = {
    "fdr": (0.7e-6, 0.2e-9),
    "qdr": (1.2e-6, 0.3e-9),
    "10gbe": (7.2e-6, 0.9e-9),
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def message_cost(nbytes: int, cm: CostModel) -> float:
    """Seconds to move one nbytes message: alpha + beta * nbytes."""
    if nbytes < 0:
        raise InputError(f"message size must be >= 0, got {nbytes}")
    return cm.alpha + cm.beta * nbytes


def tree_depth(participants: int) -> int:
    """Rounds of a binomial-tree collective over ``participants`` nodes."""
    if participants < 1:
        raise InputError("participants must be >= 1")
    return math.ceil(math.log2(participants)) if participants > 1 else 0


@dataclass(frozen=True)
class PackedComparison:
    """Cost of moving a model as one packed message vs one message per layer.

    ``latency_overhead`` is the exact extra latency of the per-layer scheme,
    (L - 1) * alpha; ``per_layer`` is constructed as ``packed +
    latency_overhead`` so the difference is that value by construction.
    """

    packed: float
    per_layer: float
    latency_overhead: float


def packed_vs_perlayer_cost(layer_sizes, cm: CostModel) -> PackedComparison:
    """Compare one (alpha + beta*total) message against L separate messages."""
    sizes = list(layer_sizes)
    if not sizes:
        raise InputError("need at least one layer")
    total = sum(sizes)
    packed = cm.alpha + cm.beta * total
    overhead = (len(sizes) - 1) * cm.alpha
    return PackedComparison(packed, packed + overhead, overhead)
