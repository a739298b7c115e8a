"""Cluster description shared by trainers and both engines."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InputError

SCHEDULERS = ("round-robin", "fcfs", "lock-free", "bulk-synchronous")
ENGINES = ("simulated", "threaded")


@dataclass(frozen=True)
class ClusterSpec:
    """P workers under one scheduling policy, optionally partitioned into
    ``groups`` equal-size worker groups, run simulated or threaded.
    """

    workers: int
    scheduler: str = "bulk-synchronous"
    groups: int = 1
    engine: str = "simulated"

    def __post_init__(self):
        if self.workers < 1:
            raise InputError(f"workers must be >= 1, got {self.workers}")
        if self.scheduler not in SCHEDULERS:
            raise InputError(f"unknown scheduler {self.scheduler!r}; have {SCHEDULERS}")
        if self.engine not in ENGINES:
            raise InputError(f"unknown engine {self.engine!r}; have {ENGINES}")
        if self.groups < 1 or self.workers % self.groups != 0:
            raise InputError(
                f"groups ({self.groups}) must be >= 1 and divide workers ({self.workers})"
            )

    @property
    def group_size(self) -> int:
        return self.workers // self.groups

    def group_members(self, group: int) -> range:
        lo = group * self.group_size
        return range(lo, lo + self.group_size)
