"""Bulk-synchronous elastic trainers and the group-partitioned variant.

All four methods run the same arithmetic per round and therefore produce
bit-identical weight trajectories from the same seed; they differ only in
where the center weights live and what the fabric charges:

* ``sync-easgd1``  - center off-device on the master: every broadcast/reduce
  crosses the master link, priced as a worker tree plus one master hop each
  way, in the master-parameter category.
* ``sync-easgd2``  - center co-located with worker 0: collectives become
  pure peer traffic over the P workers; the master-parameter category drops
  to zero.
* ``sync-easgd3``  - as sync-easgd2 with the data+compute chain and the
  collective chain declared overlapped: elapsed is the longer chain, the
  hidden chain's time is not exposed.
* ``group-easgd``  - the worker set is partitioned into g groups, each group
  holding its own full data copy and its own center replica. Workers reduce
  inside their group for free (local memory), the per-group partial sums are
  tree-combined and shared across groups, and every group applies the same
  full-sum center update to its replica, so all replicas stay bit-identical.
  Compute is scaled by the cost model's group speedup (partitioned working
  sets fit faster memory). With g=1 the schedule degenerates to sync-easgd2.

Per round: every worker draws its own batch and computes a gradient at its
local weights; weights and center are snapshotted; workers apply the elastic
worker step against the center snapshot while the center applies the
full-sum step over the reduced worker sum. Exchange first, update second.
"""

from __future__ import annotations

import threading
import time

import numpy as np

from ..errors import InputError
from ..fabric.collectives import tree_sum
from ..fabric.costmodel import CostModel, tree_depth
from ..fabric.engine import CATEGORIES, VirtualTimeline
from ..rng import worker_rng
from ..updates import easgd_center_step_from_sum, easgd_worker_step
from .common import Recorder
from .config import TrainerConfig
from .records import RunRecord

SYNC_METHODS = ("sync-easgd1", "sync-easgd2", "sync-easgd3", "group-easgd")


def _grouped_tree_sum(buffers: list[np.ndarray], groups: int) -> np.ndarray:
    """Sum within each contiguous group, then across groups (fixed order)."""
    size = len(buffers) // groups
    partials = [tree_sum(buffers[g * size : (g + 1) * size]) for g in range(groups)]
    return tree_sum(partials)


def _sync_round(workers: list[np.ndarray], center: np.ndarray, grads, eta: float,
                rho: float, groups: int) -> tuple[list[np.ndarray], np.ndarray]:
    wsum = _grouped_tree_sum(workers, groups)
    new_workers = [
        easgd_worker_step(w, g, center, eta, rho) for w, g in zip(workers, grads)
    ]
    new_center = easgd_center_step_from_sum(center, wsum, len(workers), eta, rho)
    return new_workers, new_center


def run_synchronous(cfg: TrainerConfig, problem, cm: CostModel) -> RunRecord:
    if cfg.method not in SYNC_METHODS:
        raise InputError(f"not a bulk-synchronous method: {cfg.method}")
    if cfg.cluster.engine == "threaded":
        return _run_threaded(cfg, problem, cm)
    return _run_simulated(cfg, problem, cm)


def _run_simulated(cfg: TrainerConfig, problem, cm: CostModel) -> RunRecord:
    P = cfg.cluster.workers
    groups = cfg.cluster.groups if cfg.method == "group-easgd" else 1
    eta, rho = cfg.hyper.eta, cfg.hyper.rho
    rngs = [worker_rng(cfg.seed, w) for w in range(P)]

    init = problem.init_weights()
    workers = [init.copy() for _ in range(P)]
    center = init.copy()

    n = problem.n_params
    msg_w = cm.message_seconds(init.nbytes)
    data_bytes = 0 if cfg.method == "group-easgd" else problem.batch_nbytes(cfg.batch_size)
    data_msg = cm.message_seconds(data_bytes) if data_bytes > 0 else 0.0
    speedup = cm.group_speedup(groups) if cfg.method == "group-easgd" else 1.0
    u_w = cm.worker_update(n)
    u_m = cm.master_update(n)

    if cfg.method == "sync-easgd1":
        # worker tree plus one master hop each way, all over the master link
        coll_cost = (tree_depth(P) + 1) * msg_w
        coll_cat = "master_param"
    else:
        participants = groups if cfg.method == "group-easgd" else P
        coll_cost = tree_depth(participants) * msg_w
        coll_cat = "peer_param"
    overlap = cfg.method == "sync-easgd3"

    tl = VirtualTimeline()
    recorder = Recorder(problem, cfg.eval_every, cfg.iterations)
    clock = 0.0

    for t in range(cfg.iterations):
        grads = [problem.gradient(workers[i], rngs[i], cfg.batch_size) for i in range(P)]
        compute = max(cm.compute(i, cfg.batch_size, n) for i in range(P)) * speedup

        start = clock
        chain_data = P * data_msg + compute
        chain_coll = 2 * coll_cost
        if overlap:
            span = max(chain_data, chain_coll)
            data_exposed = chain_data >= chain_coll
            coll_exposed = not data_exposed
        else:
            span = chain_data + chain_coll
            data_exposed = coll_exposed = True

        cursor = start
        if data_msg > 0.0:
            cursor = tl.record(start=cursor, end=cursor + P * data_msg,
                               kind="message-arrival", category="data_stage",
                               sender="master", receiver="workers",
                               nbytes=data_bytes * P, exposed=data_exposed, tag=str(t))
        tl.record(start=cursor, end=cursor + compute, kind="compute-done",
                  category="forward_backward", sender="workers", receiver="workers",
                  exposed=data_exposed, tag=str(t))
        coll_start = start if overlap else cursor + compute
        if coll_cost > 0.0:
            mid = tl.record(start=coll_start, end=coll_start + coll_cost,
                            kind="message-arrival", category=coll_cat,
                            sender="master", receiver="workers", nbytes=init.nbytes,
                            exposed=coll_exposed, tag=f"{t}:broadcast")
            tl.record(start=mid, end=mid + coll_cost, kind="message-arrival",
                      category=coll_cat, sender="workers", receiver="master",
                      nbytes=init.nbytes, exposed=coll_exposed, tag=f"{t}:reduce")
        clock = start + span
        if u_w > 0.0:
            clock = tl.record(start=clock, end=clock + u_w, kind="update-done",
                              category="worker_update", sender="workers",
                              receiver="workers", tag=str(t))
        if u_m > 0.0:
            clock = tl.record(start=clock, end=clock + u_m, kind="update-done",
                              category="master_update", tag=str(t))

        workers, center = _sync_round(workers, center, grads, eta, rho, groups)
        recorder.maybe(t + 1, clock, center)

    return recorder.build(cfg.method, clock, center, timeline=tl,
                          worker_weights=workers)


def _run_threaded(cfg: TrainerConfig, problem, cm: CostModel) -> RunRecord:
    """Real threads with barrier phases; the reduction runs on thread 0 in a
    fixed order, so the weight trajectory is reproducible despite threading.
    """
    P = cfg.cluster.workers
    groups = cfg.cluster.groups if cfg.method == "group-easgd" else 1
    eta, rho = cfg.hyper.eta, cfg.hyper.rho
    rngs = [worker_rng(cfg.seed, w) for w in range(P)]

    init = problem.init_weights()
    workers = [init.copy() for _ in range(P)]
    grads: list[np.ndarray | None] = [None] * P
    shared = {"center": init.copy(), "center_snap": None, "failure": None}
    busy = {"compute": [0.0] * P, "worker_update": [0.0] * P,
            "collective": 0.0, "master_update": 0.0}
    barrier = threading.Barrier(P)
    recorder = Recorder(problem, cfg.eval_every, cfg.iterations, defer=True)
    t_start = time.perf_counter()

    def body(w: int):
        try:
            for t in range(cfg.iterations):
                c0 = time.perf_counter()
                grads[w] = problem.gradient(workers[w], rngs[w], cfg.batch_size)
                busy["compute"][w] += time.perf_counter() - c0
                barrier.wait()
                if w == 0:
                    c0 = time.perf_counter()
                    wsum = _grouped_tree_sum(workers, groups)
                    busy["collective"] += time.perf_counter() - c0
                    c0 = time.perf_counter()
                    shared["center_snap"] = shared["center"]
                    shared["center"] = easgd_center_step_from_sum(
                        shared["center"], wsum, P, eta, rho)
                    busy["master_update"] += time.perf_counter() - c0
                barrier.wait()
                c0 = time.perf_counter()
                workers[w] = easgd_worker_step(workers[w], grads[w],
                                               shared["center_snap"], eta, rho)
                busy["worker_update"][w] += time.perf_counter() - c0
                barrier.wait()
                if w == 0:
                    recorder.maybe(t + 1, time.perf_counter() - t_start, shared["center"])
        except Exception as exc:  # surface worker failures to the caller
            shared["failure"] = exc
            barrier.abort()

    threads = [threading.Thread(target=body, args=(w,), name=f"sync-worker-{w}")
               for w in range(P)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if shared["failure"] is not None:
        raise shared["failure"]

    total = time.perf_counter() - t_start
    breakdown = {c: 0.0 for c in CATEGORIES}
    breakdown["forward_backward"] = float(np.mean(busy["compute"]))
    breakdown["worker_update"] = float(np.mean(busy["worker_update"]))
    breakdown["peer_param"] = busy["collective"]
    breakdown["master_update"] = busy["master_update"]
    return recorder.build(cfg.method, total, shared["center"], breakdown=breakdown,
                          worker_weights=workers)
