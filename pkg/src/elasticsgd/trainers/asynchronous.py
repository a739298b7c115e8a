"""Parameter-server trainers: workers run free, the master serves FCFS.

All four methods share the shape: each worker loops over its share of the
iteration budget, exchanging with a master that serves requests strictly in
arrival order (ties by worker id) under a whole-buffer lock.

* ``async-sgd`` / ``async-msgd``: the worker computes a gradient at its
  current weights and ships it; the master applies the (momentum) SGD step to
  the global weights and returns them; the worker adopts the returned copy.
* ``async-easgd`` / ``async-measgd``: the worker ships its local weights and
  starts its gradient immediately (the compute hides the round trip); the
  master replies with the current center, then folds the received weights in
  with the incremental center step; the worker applies the elastic (momentum)
  worker step using the center snapshot it got back. Both sides read the
  round's snapshots before either writes.

Simulated timing per exchange: a request message, then at the master
``max(master-free, arrival)`` followed by the reply message and the master
update (weight-exchange methods reply first, gradient-push methods update
first, matching the arithmetic above).
"""

from __future__ import annotations

import queue
import threading
import time

import numpy as np

from ..errors import InputError
from ..fabric.costmodel import CostModel
from ..fabric.engine import CATEGORIES, FcfsQueue, VirtualTimeline
from ..rng import worker_rng
from ..updates import (
    easgd_center_incremental,
    easgd_worker_step,
    measgd_worker_step,
    msgd_step,
    sgd_step,
)
from .common import Recorder
from .config import TrainerConfig
from .records import RunRecord

ASYNC_METHODS = ("async-sgd", "async-easgd", "async-msgd", "async-measgd")
_EXCHANGES_WEIGHTS = {"async-easgd": False, "async-measgd": True}  # value: uses momentum
_PUSHES_GRADIENT = {"async-sgd": False, "async-msgd": True}


def split_iterations(total: int, workers: int) -> list[int]:
    """Deterministic near-even split of the iteration budget."""
    base = total // workers
    return [base + (1 if w < total % workers else 0) for w in range(workers)]


def run_asynchronous(cfg: TrainerConfig, problem, cm: CostModel) -> RunRecord:
    if cfg.method not in ASYNC_METHODS:
        raise InputError(f"not a parameter-server method: {cfg.method}")
    if cfg.cluster.engine == "threaded":
        return _run_threaded(cfg, problem, cm)
    return _run_simulated(cfg, problem, cm)


def _run_simulated(cfg: TrainerConfig, problem, cm: CostModel) -> RunRecord:
    P = cfg.cluster.workers
    eta, rho, mu = cfg.hyper.eta, cfg.hyper.rho, cfg.hyper.mu
    rngs = [worker_rng(cfg.seed, w) for w in range(P)]
    quotas = split_iterations(cfg.iterations, P)

    init = problem.init_weights()
    exchanges_weights = cfg.method in _EXCHANGES_WEIGHTS
    momentum = _EXCHANGES_WEIGHTS.get(cfg.method) or _PUSHES_GRADIENT.get(cfg.method)
    workers = [init.copy() for _ in range(P)]
    velocities = [np.zeros_like(init) for _ in range(P)]
    center = init.copy()  # center for elastic methods, global weights otherwise
    master_velocity = np.zeros_like(init)

    n = problem.n_params
    msg_w = cm.message_seconds(init.nbytes)
    u_w = cm.worker_update(n)
    u_m = cm.master_update(n)

    tl = VirtualTimeline()
    recorder = Recorder(problem, cfg.eval_every, cfg.iterations)
    pending = FcfsQueue()
    master_free = 0.0
    services = 0
    done = [0] * P

    def start_cycle(w: int, s: float) -> None:
        """Worker w begins an exchange at virtual time s."""
        compute = cm.compute(w, cfg.batch_size, n)
        grad = problem.gradient(workers[w], rngs[w], cfg.batch_size)
        if exchanges_weights:
            # ship local weights now; the gradient overlaps the round trip
            arrival = s + msg_w
            tl.record(start=s, end=arrival, kind="message-arrival",
                      category="master_param", sender=w, receiver="master",
                      nbytes=init.nbytes)
            tl.record(start=s, end=s + compute, kind="compute-done",
                      category="forward_backward", sender=w, receiver=w)
            pending.push(arrival, w, (grad, s + compute))
        else:
            # gradient first, then ship it
            tl.record(start=s, end=s + compute, kind="compute-done",
                      category="forward_backward", sender=w, receiver=w)
            arrival = s + compute + msg_w
            tl.record(start=s + compute, end=arrival, kind="message-arrival",
                      category="master_param", sender=w, receiver="master",
                      nbytes=init.nbytes)
            pending.push(arrival, w, (grad, s + compute))

    for w in range(P):
        if quotas[w] > 0:
            start_cycle(w, 0.0)

    while len(pending):
        arrival, w, (grad, grad_ready) = pending.pop()
        m0 = max(master_free, arrival)
        if exchanges_weights:
            # reply the pre-update center, then fold the worker's weights in
            reply_at = tl.record(start=m0, end=m0 + msg_w, kind="message-arrival",
                                 category="master_param", sender="master",
                                 receiver=w, nbytes=init.nbytes)
            master_free = reply_at
            if u_m > 0.0:
                master_free = tl.record(start=reply_at, end=reply_at + u_m,
                                        kind="update-done", category="master_update")
            center_snap = center
            center = easgd_center_incremental(center_snap, workers[w], eta, rho)
            w_snap = workers[w]
            upd_start = max(grad_ready, reply_at)
            if momentum:
                workers[w], velocities[w] = measgd_worker_step(
                    w_snap, velocities[w], grad, center_snap, eta, mu, rho)
            else:
                workers[w] = easgd_worker_step(w_snap, grad, center_snap, eta, rho)
            if u_w > 0.0:
                tl.record(start=upd_start, end=upd_start + u_w, kind="update-done",
                          category="worker_update", sender=w, receiver=w)
            next_start = upd_start + u_w
        else:
            # update the global weights, then reply with them
            upd_end = m0 + u_m
            if u_m > 0.0:
                tl.record(start=m0, end=upd_end, kind="update-done",
                          category="master_update")
            if momentum:
                center, master_velocity = msgd_step(center, master_velocity, grad, eta, mu)
            else:
                center = sgd_step(center, grad, eta)
            reply_at = tl.record(start=upd_end, end=upd_end + msg_w,
                                 kind="message-arrival", category="master_param",
                                 sender="master", receiver=w, nbytes=init.nbytes)
            master_free = reply_at
            workers[w] = center.copy()
            next_start = reply_at

        services += 1
        done[w] += 1
        recorder.maybe(services, master_free, center)
        if done[w] < quotas[w]:
            start_cycle(w, next_start)

    return recorder.build(cfg.method, tl.elapsed, center, timeline=tl,
                          worker_weights=workers)


def _run_threaded(cfg: TrainerConfig, problem, cm: CostModel) -> RunRecord:
    P = cfg.cluster.workers
    eta, rho, mu = cfg.hyper.eta, cfg.hyper.rho, cfg.hyper.mu
    rngs = [worker_rng(cfg.seed, w) for w in range(P)]
    quotas = split_iterations(cfg.iterations, P)

    init = problem.init_weights()
    exchanges_weights = cfg.method in _EXCHANGES_WEIGHTS
    momentum = _EXCHANGES_WEIGHTS.get(cfg.method) or _PUSHES_GRADIENT.get(cfg.method)
    workers = [init.copy() for _ in range(P)]
    velocities = [np.zeros_like(init) for _ in range(P)]
    state = {"center": init.copy(), "velocity": np.zeros_like(init), "failure": None}

    requests: queue.Queue = queue.Queue()
    replies = [queue.Queue() for _ in range(P)]
    busy = {"compute": [0.0] * P, "worker_update": [0.0] * P,
            "master_update": 0.0, "master_serve": 0.0}
    recorder = Recorder(problem, cfg.eval_every, cfg.iterations, defer=True)
    t_start = time.perf_counter()

    def master():
        # sole writer of the center: every access is serialized here, which
        # is the whole-buffer mutual-exclusion contract of the locked modes
        served = 0
        while served < cfg.iterations:
            w, payload = requests.get()
            if payload is None:  # a worker failed; stop serving
                return
            s0 = time.perf_counter()
            if exchanges_weights:
                replies[w].put(state["center"].copy())
                u0 = time.perf_counter()
                state["center"] = easgd_center_incremental(
                    state["center"], payload, eta, rho)
                busy["master_update"] += time.perf_counter() - u0
            else:
                u0 = time.perf_counter()
                if momentum:
                    state["center"], state["velocity"] = msgd_step(
                        state["center"], state["velocity"], payload, eta, mu)
                else:
                    state["center"] = sgd_step(state["center"], payload, eta)
                busy["master_update"] += time.perf_counter() - u0
                replies[w].put(state["center"].copy())
            busy["master_serve"] += time.perf_counter() - s0
            served += 1
            recorder.maybe(served, time.perf_counter() - t_start, state["center"])

    def worker(w: int):
        try:
            for _ in range(quotas[w]):
                if exchanges_weights:
                    requests.put((w, workers[w].copy()))
                    c0 = time.perf_counter()
                    grad = problem.gradient(workers[w], rngs[w], cfg.batch_size)
                    busy["compute"][w] += time.perf_counter() - c0
                    center_snap = replies[w].get()
                    u0 = time.perf_counter()
                    if momentum:
                        workers[w], velocities[w] = measgd_worker_step(
                            workers[w], velocities[w], grad, center_snap, eta, mu, rho)
                    else:
                        workers[w] = easgd_worker_step(
                            workers[w], grad, center_snap, eta, rho)
                    busy["worker_update"][w] += time.perf_counter() - u0
                else:
                    c0 = time.perf_counter()
                    grad = problem.gradient(workers[w], rngs[w], cfg.batch_size)
                    busy["compute"][w] += time.perf_counter() - c0
                    requests.put((w, grad))
                    workers[w] = replies[w].get()
        except Exception as exc:
            state["failure"] = exc
            requests.put((w, None))  # wake the master so join() returns

    threads = [threading.Thread(target=worker, args=(w,), name=f"async-worker-{w}")
               for w in range(P)]
    master_thread = threading.Thread(target=master, name="async-master")
    master_thread.start()
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    master_thread.join()
    if state["failure"] is not None:
        raise state["failure"]

    total = time.perf_counter() - t_start
    breakdown = {c: 0.0 for c in CATEGORIES}
    breakdown["forward_backward"] = float(np.mean(busy["compute"]))
    breakdown["worker_update"] = float(np.mean(busy["worker_update"]))
    breakdown["master_update"] = busy["master_update"]
    breakdown["master_param"] = busy["master_serve"] - busy["master_update"]
    return recorder.build(cfg.method, total, state["center"], breakdown=breakdown,
                          worker_weights=workers)
