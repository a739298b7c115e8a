from .costmodel import (
    CostModel,
    PackedComparison,
    constant_compute,
    measured_compute,
    message_cost,
    packed_vs_perlayer_cost,
    tree_depth,
)
from .cluster import ClusterSpec
from .collectives import broadcast_tree, next_worker_roundrobin, reduce_tree, tree_sum
from .engine import (
    CATEGORIES,
    COMM_CATEGORIES,
    Event,
    FcfsQueue,
    VirtualTimeline,
    hogwild_apply,
)

__all__ = [
    "CATEGORIES",
    "COMM_CATEGORIES",
    "ClusterSpec",
    "CostModel",
    "Event",
    "FcfsQueue",
    "PackedComparison",
    "VirtualTimeline",
    "broadcast_tree",
    "constant_compute",
    "hogwild_apply",
    "measured_compute",
    "message_cost",
    "next_worker_roundrobin",
    "packed_vs_perlayer_cost",
    "reduce_tree",
    "tree_depth",
    "tree_sum",
]
