"""Round-robin elastic baseline: the master talks to one worker per round.

Round t serves worker ``j = t mod G`` only: the master stages a batch to j,
sends the center weights, j runs forward/backward and applies the elastic
worker step, and the master folds j's (pre-update) weights into the center
with the incremental step. Master interactions are strictly serialized; the
(i+1)-st worker's exchange never starts before the i-th finishes.

Parameter traffic is priced one message per layer: the baseline ships its
layers from separate allocations instead of one packed buffer, paying the
per-message latency L times. By default the exchange and the compute of a
round are priced concurrently (``overlap_baseline=True``, the measured
behavior of such systems); the serialized variant prices them back to back.
The arithmetic is identical either way.
"""

from __future__ import annotations

import time

from ..errors import InputError
from ..fabric.collectives import next_worker_roundrobin
from ..fabric.costmodel import CostModel
from ..fabric.engine import CATEGORIES, VirtualTimeline
from ..rng import worker_rng
from ..updates import easgd_center_incremental, easgd_worker_step
from .common import Recorder
from .config import TrainerConfig
from .records import RunRecord


def run_original_easgd(cfg: TrainerConfig, problem, cm: CostModel) -> RunRecord:
    if cfg.method != "original-easgd":
        raise InputError(f"not the round-robin method: {cfg.method}")
    if cfg.cluster.engine == "threaded":
        return _run(cfg, problem, cm, wall_clock=True)
    return _run(cfg, problem, cm, wall_clock=False)


def _run(cfg: TrainerConfig, problem, cm: CostModel, wall_clock: bool) -> RunRecord:
    G = cfg.cluster.workers
    eta, rho = cfg.hyper.eta, cfg.hyper.rho
    rngs = [worker_rng(cfg.seed, w) for w in range(G)]

    init = problem.init_weights()
    workers = [init.copy() for _ in range(G)]
    center = init.copy()

    n = problem.n_params
    # unpacked layout: one message per layer in each direction
    exchange_oneway = sum(cm.message_seconds(sz) for sz in problem.layer_nbytes())
    data_bytes = problem.batch_nbytes(cfg.batch_size)
    data_msg = cm.message_seconds(data_bytes) if data_bytes > 0 else 0.0
    u_w = cm.worker_update(n)
    u_m = cm.master_update(n)

    tl = VirtualTimeline()
    recorder = Recorder(problem, cfg.eval_every, cfg.iterations, defer=wall_clock)
    clock = 0.0
    compute_busy = 0.0
    update_busy = 0.0
    t_start = time.perf_counter()

    for t in range(cfg.iterations):
        j = next_worker_roundrobin(t, G)
        c0 = time.perf_counter()
        grad = problem.gradient(workers[j], rngs[j], cfg.batch_size)
        compute_busy += time.perf_counter() - c0
        compute = cm.compute(j, cfg.batch_size, n)

        start = clock
        cursor = start
        if data_msg > 0.0:
            cursor = tl.record(start=cursor, end=cursor + data_msg,
                               kind="message-arrival", category="data_stage",
                               sender="master", receiver=j, nbytes=data_bytes,
                               tag=str(t))
        exchange = 2 * exchange_oneway
        if cfg.overlap_baseline:
            span = max(compute, exchange)
            comm_exposed = exchange >= compute
            tl.record(start=cursor, end=cursor + compute, kind="compute-done",
                      category="forward_backward", sender=j, receiver=j,
                      exposed=not comm_exposed, tag=str(t))
            mid = tl.record(start=cursor, end=cursor + exchange_oneway,
                            kind="message-arrival", category="master_param",
                            sender="master", receiver=j, nbytes=init.nbytes,
                            exposed=comm_exposed, tag=f"{t}:center-out")
            tl.record(start=mid, end=mid + exchange_oneway, kind="message-arrival",
                      category="master_param", sender=j, receiver="master",
                      nbytes=init.nbytes, exposed=comm_exposed, tag=f"{t}:worker-back")
            cursor += span
        else:
            cursor = tl.record(start=cursor, end=cursor + exchange_oneway,
                               kind="message-arrival", category="master_param",
                               sender="master", receiver=j, nbytes=init.nbytes,
                               tag=f"{t}:center-out")
            cursor = tl.record(start=cursor, end=cursor + compute,
                               kind="compute-done", category="forward_backward",
                               sender=j, receiver=j, tag=str(t))
            cursor = tl.record(start=cursor, end=cursor + exchange_oneway,
                               kind="message-arrival", category="master_param",
                               sender=j, receiver="master", nbytes=init.nbytes,
                               tag=f"{t}:worker-back")
        if u_w > 0.0:
            cursor = tl.record(start=cursor, end=cursor + u_w, kind="update-done",
                               category="worker_update", sender=j, receiver=j,
                               tag=str(t))
        if u_m > 0.0:
            cursor = tl.record(start=cursor, end=cursor + u_m, kind="update-done",
                               category="master_update", tag=str(t))
        clock = cursor

        # exchange-then-update: both rules read this round's snapshots
        u0 = time.perf_counter()
        wj_snap = workers[j]
        center_snap = center
        workers[j] = easgd_worker_step(wj_snap, grad, center_snap, eta, rho)
        center = easgd_center_incremental(center_snap, wj_snap, eta, rho)
        update_busy += time.perf_counter() - u0
        recorder.maybe(t + 1, time.perf_counter() - t_start if wall_clock else clock,
                       center)

    if wall_clock:
        total = time.perf_counter() - t_start
        breakdown = {c: 0.0 for c in CATEGORIES}
        breakdown["forward_backward"] = compute_busy
        breakdown["worker_update"] = update_busy
        return recorder.build(cfg.method, total, center, breakdown=breakdown,
                              worker_weights=workers)
    return recorder.build(cfg.method, clock, center, timeline=tl,
                          worker_weights=workers)
