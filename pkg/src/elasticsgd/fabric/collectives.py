"""Collective algorithms: binomial-tree reduce/broadcast, round-robin order.

Tree collectives over P participants finish in ceil(log2 P) rounds, so their
virtual cost is ``ceil(log2 P) * (alpha + beta * nbytes)`` against the
sequential P-message alternative. The summation order of the reduction is
the fixed binomial-tree order (pair rank r with rank r+distance, doubling
distance), which makes floating-point results identical run to run.
"""

from __future__ import annotations

import numpy as np

from ..errors import InputError, ShapeError
from .costmodel import CostModel, tree_depth


def tree_sum(buffers: list[np.ndarray]) -> np.ndarray:
    """Elementwise sum in fixed binomial order; inputs are not modified."""
    if not buffers:
        raise InputError("tree_sum needs at least one buffer")
    shapes = {b.shape for b in buffers}
    if len(shapes) > 1:
        raise ShapeError(f"buffer shape mismatch: {sorted(shapes)}")
    partial = [b.copy() for b in buffers]
    distance = 1
    while distance < len(buffers):
        for pos in range(0, len(buffers), 2 * distance):
            if pos + distance < len(buffers):
                partial[pos] = partial[pos] + partial[pos + distance]
        distance *= 2
    return partial[0]


def reduce_tree(buffers: list[np.ndarray], cm: CostModel) -> tuple[np.ndarray, float]:
    """Sum P equal-length buffers at the root; returns (sum, virtual cost)."""
    result = tree_sum(buffers)
    cost = tree_depth(len(buffers)) * (cm.alpha + cm.beta * result.nbytes)
    return result, cost


def broadcast_tree(root: np.ndarray, participants: int, cm: CostModel
                   ) -> tuple[list[np.ndarray], float]:
    """Copy the root buffer to ``participants`` nodes; returns (copies, cost).

    All copies are bit-identical to the root.
    """
    if participants < 1:
        raise InputError("participants must be >= 1")
    copies = [root.copy() for _ in range(participants)]
    cost = tree_depth(participants) * (cm.alpha + cm.beta * root.nbytes)
    return copies, cost


def next_worker_roundrobin(t: int, num_workers: int) -> int:
    """Worker chosen at iteration t under the strict round-robin order."""
    if num_workers < 1:
        raise InputError("num_workers must be >= 1")
    return t % num_workers
