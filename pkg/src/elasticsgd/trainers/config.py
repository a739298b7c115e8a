"""Trainer configuration and the method catalog."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..errors import InputError
from ..fabric.cluster import ClusterSpec
from ..updates import HyperParams

# method id -> scheduler it requires
METHOD_SCHEDULERS = {
    "original-easgd": "round-robin",
    "async-sgd": "fcfs",
    "async-easgd": "fcfs",
    "async-msgd": "fcfs",
    "async-measgd": "fcfs",
    "hogwild-sgd": "lock-free",
    "hogwild-easgd": "lock-free",
    "sync-easgd1": "bulk-synchronous",
    "sync-easgd2": "bulk-synchronous",
    "sync-easgd3": "bulk-synchronous",
    "group-easgd": "bulk-synchronous",
}

METHODS = tuple(sorted(METHOD_SCHEDULERS))


@dataclass(frozen=True)
class TrainerConfig:
    """One training run: method, iteration budget, batch size, rates, cluster.

    ``iterations`` counts scheduling rounds: one worker-batch for the
    round-robin and asynchronous methods, one batch on every worker for the
    bulk-synchronous family. ``overlap_baseline`` prices the round-robin
    baseline's parameter exchange concurrently with its compute (the measured
    behavior of such systems); set False for the fully serialized variant.
    """

    method: str
    iterations: int
    batch_size: int
    hyper: HyperParams = field(default_factory=HyperParams)
    cluster: ClusterSpec = field(default_factory=lambda: ClusterSpec(1))
    eval_every: int = 0  # 0: record only the final point
    seed: int = 0
    overlap_baseline: bool = True

    def __post_init__(self):
        if self.method not in METHOD_SCHEDULERS:
            raise InputError(f"unknown method {self.method!r}; have {METHODS}")
        if self.iterations < 1:
            raise InputError(f"iterations must be >= 1, got {self.iterations}")
        if self.batch_size < 1:
            raise InputError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.eval_every < 0:
            raise InputError("eval_every must be >= 0")
        needed = METHOD_SCHEDULERS[self.method]
        if self.cluster.scheduler != needed:
            raise InputError(
                f"method {self.method!r} requires the {needed!r} scheduler, "
                f"config has {self.cluster.scheduler!r}"
            )
        if self.method != "group-easgd" and self.cluster.groups != 1:
            raise InputError(f"method {self.method!r} does not take worker groups")

    def with_engine(self, engine: str) -> "TrainerConfig":
        return replace(self, cluster=replace(self.cluster, engine=engine))


def make_config(method: str, *, workers: int, iterations: int, batch_size: int = 1,
                hyper: HyperParams | None = None, groups: int = 1,
                engine: str = "simulated", eval_every: int = 0, seed: int = 0,
                overlap_baseline: bool = True) -> TrainerConfig:
    """Convenience constructor that picks the scheduler the method needs."""
    cluster = ClusterSpec(workers, METHOD_SCHEDULERS[method], groups, engine)
    return TrainerConfig(
        method=method,
        iterations=iterations,
        batch_size=batch_size,
        hyper=hyper if hyper is not None else HyperParams(),
        cluster=cluster,
        eval_every=eval_every,
        seed=seed,
        overlap_baseline=overlap_baseline,
    )
