"""Deterministic virtual-time machinery for the simulated engine.

The simulated engine is single threaded: trainers describe what happens
(computations, messages, updates) and the timeline prices it on a virtual
clock. Every priced activity is logged as an :class:`Event` carrying its
interval and a breakdown category; the per-category report is the measure of
the union of that category's *exposed* intervals, so

* activities that genuinely run in parallel (P workers computing) count once,
* phases of a serialized schedule partition the elapsed time exactly, and
* an activity hidden under a declared overlap (``exposed=False``) contributes
  nothing — overlapped work shows up as a shorter run, not as a category.

Elapsed time of two overlapped chains is the max of their spans, never the
sum; the trainer records the longer chain's events as exposed and the hidden
chain's events with ``exposed=False``.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from ..errors import SchedulingError, ShapeError
from ..rng import CounterRng

# Breakdown categories (fixed set). The first three are communication:
# peer_param   - parameter traffic between workers (collectives, peer copies)
# data_stage   - staging a batch of samples to a worker
# master_param - parameter traffic between the master and a worker
CATEGORIES = (
    "peer_param",
    "data_stage",
    "master_param",
    "forward_backward",
    "worker_update",
    "master_update",
)
COMM_CATEGORIES = ("peer_param", "data_stage", "master_param")

EVENT_KINDS = ("compute-done", "message-arrival", "update-done")


@dataclass(frozen=True)
class Event:
    """One priced activity: its interval, endpoints, payload and category."""

    time: float  # completion timestamp (virtual seconds)
    kind: str
    sender: int | str
    receiver: int | str
    nbytes: int
    category: str
    start: float
    exposed: bool = True
    tag: str = ""

    def __post_init__(self):
        if self.time < self.start:
            raise SchedulingError(f"event ends before it starts: {self}")


class VirtualTimeline:
    """Event log plus per-category exposed-interval accounting."""

    def __init__(self):
        self.events: list[Event] = []
        self._intervals: dict[str, list[tuple[float, float]]] = {c: [] for c in CATEGORIES}
        self.elapsed = 0.0

    def record(self, *, start: float, end: float, kind: str, category: str,
               sender="master", receiver="master", nbytes: int = 0,
               exposed: bool = True, tag: str = "") -> float:
        if kind not in EVENT_KINDS:
            raise SchedulingError(f"unknown event kind {kind!r}")
        if category not in CATEGORIES:
            raise SchedulingError(f"unknown category {category!r}")
        self.events.append(Event(end, kind, sender, receiver, nbytes, category,
                                 start, exposed, tag))
        if exposed and end > start:
            self._intervals[category].append((start, end))
        self.elapsed = max(self.elapsed, end)
        return end

    def breakdown(self) -> dict[str, float]:
        """Per-category exposed time (union of intervals, so concurrent
        activities of one category count once)."""
        out = {}
        for cat in CATEGORIES:
            out[cat] = _union_measure(self._intervals[cat])
        return out

    def comm_seconds(self) -> float:
        return sum(self.breakdown()[c] for c in COMM_CATEGORIES)

    def events_of(self, category: str) -> list[Event]:
        return [e for e in self.events if e.category == category]


def _union_measure(intervals: list[tuple[float, float]]) -> float:
    if not intervals:
        return 0.0
    total = 0.0
    cur_start, cur_end = None, None
    for start, end in sorted(intervals):
        if cur_end is None or start > cur_end:
            if cur_end is not None:
                total += cur_end - cur_start
            cur_start, cur_end = start, end
        else:
            cur_end = max(cur_end, end)
    total += cur_end - cur_start
    return total


@dataclass(order=True)
class _QueueItem:
    arrival: float
    worker: int
    payload: object = field(compare=False)


class FcfsQueue:
    """Master-side first-come-first-served queue.

    Ties at identical arrival times are broken by worker id, so the simulated
    service order is total and deterministic.
    """

    def __init__(self):
        self._heap: list[_QueueItem] = []

    def push(self, arrival: float, worker: int, payload) -> None:
        heapq.heappush(self._heap, _QueueItem(arrival, worker, payload))

    def pop(self) -> tuple[float, int, object]:
        if not self._heap:
            raise SchedulingError("fcfs_dequeue on empty queue; queue dump: []")
        item = heapq.heappop(self._heap)
        return item.arrival, item.worker, item.payload

    def __len__(self) -> int:
        return len(self._heap)

    def dump(self) -> list[tuple[float, int]]:
        return sorted((i.arrival, i.worker) for i in self._heap)


def fcfs_dequeue(queue: FcfsQueue):
    """Earliest-arrival message, ties broken by (arrival time, worker id)."""
    return queue.pop()


def hogwild_apply(center: np.ndarray, delta: np.ndarray) -> None:
    """Elementwise read-modify-write ``center += delta`` with no buffer lock.

    Under the threaded engine concurrent calls interleave at element
    granularity (aligned 8-byte loads and stores do not tear); under the
    simulated engine concurrency is emulated by :func:`interleaved_apply`.
    A single uncontended call equals a locked application exactly.
    """
    if center.shape != delta.shape:
        raise ShapeError(f"hogwild_apply shape mismatch: {center.shape} vs {delta.shape}")
    center += delta


def interleaved_apply(center: np.ndarray, delta_fns, rng: CounterRng,
                      num_blocks: int = 8) -> None:
    """Apply several lock-free updates with emulated element-block races.

    ``delta_fns`` are callables ``(current_block, slice) -> delta_block``;
    each block of the center buffer receives every update, in a per-block
    order drawn from ``rng``, re-reading the block between applications. With
    one update this degenerates to a plain :func:`hogwild_apply`.
    """
    fns = list(delta_fns)
    if not fns:
        return
    bounds = np.linspace(0, center.size, min(num_blocks, center.size) + 1).astype(int)
    for blk in range(len(bounds) - 1):
        sl = slice(int(bounds[blk]), int(bounds[blk + 1]))
        order = list(range(len(fns)))
        for i in range(len(order) - 1, 0, -1):  # seeded Fisher-Yates
            j = rng.randint(i + 1)
            order[i], order[j] = order[j], order[i]
        for i in order:
            center[sl] += fns[i](center[sl], sl)
