"""Lock-free trainers: the master's buffer-wide lock is removed.

Dataflow matches the parameter-server counterparts; only the master side
changes. Updates land on the shared buffer through element-granularity
read-modify-writes with no whole-buffer lock, so concurrent applications may
interleave per element and a weight snapshot read mid-race may mix round
generations. Convergence is therefore statistical, not bitwise.

Under the threaded engine the races are real: worker threads apply their
deltas straight to the shared buffer. Under the simulated engine concurrency
is emulated deterministically: exchanges whose service windows overlap in
virtual time form a burst whose deltas are applied block-interleaved in a
seeded order (elastic deltas re-read the racing buffer per block), and the
center snapshot returned to a burst member is the state at its service
start. A burst of one is exactly the locked application.
"""

from __future__ import annotations

import threading
import time

import numpy as np

from ..errors import InputError
from ..fabric.costmodel import CostModel
from ..fabric.engine import CATEGORIES, FcfsQueue, VirtualTimeline, hogwild_apply, interleaved_apply
from ..rng import CounterRng, mix64, worker_rng
from ..updates import easgd_worker_step
from .asynchronous import split_iterations
from .common import Recorder
from .config import TrainerConfig
from .records import RunRecord

HOGWILD_METHODS = ("hogwild-sgd", "hogwild-easgd")


def run_hogwild(cfg: TrainerConfig, problem, cm: CostModel) -> RunRecord:
    if cfg.method not in HOGWILD_METHODS:
        raise InputError(f"not a lock-free method: {cfg.method}")
    if cfg.cluster.engine == "threaded":
        return _run_threaded(cfg, problem, cm)
    return _run_simulated(cfg, problem, cm)


def _run_simulated(cfg: TrainerConfig, problem, cm: CostModel) -> RunRecord:
    P = cfg.cluster.workers
    eta, rho = cfg.hyper.eta, cfg.hyper.rho
    elastic = cfg.method == "hogwild-easgd"
    rngs = [worker_rng(cfg.seed, w) for w in range(P)]
    race_rng = CounterRng(mix64(cfg.seed ^ 0x4047))  # interleave order stream
    quotas = split_iterations(cfg.iterations, P)

    init = problem.init_weights()
    workers = [init.copy() for _ in range(P)]
    center = init.copy()

    n = problem.n_params
    msg_w = cm.message_seconds(init.nbytes)
    u_w = cm.worker_update(n)
    u_m = cm.master_update(n)

    tl = VirtualTimeline()
    recorder = Recorder(problem, cfg.eval_every, cfg.iterations)
    pending = FcfsQueue()
    done = [0] * P
    services = 0

    def start_cycle(w: int, s: float) -> None:
        compute = cm.compute(w, cfg.batch_size, n)
        grad = problem.gradient(workers[w], rngs[w], cfg.batch_size)
        tl.record(start=s, end=s + compute, kind="compute-done",
                  category="forward_backward", sender=w, receiver=w)
        if elastic:
            arrival = s + msg_w
            tl.record(start=s, end=arrival, kind="message-arrival",
                      category="master_param", sender=w, receiver="master",
                      nbytes=init.nbytes)
        else:
            arrival = s + compute + msg_w
            tl.record(start=s + compute, end=arrival, kind="message-arrival",
                      category="master_param", sender=w, receiver="master",
                      nbytes=init.nbytes)
        pending.push(arrival, w, (grad, s + compute))

    for w in range(P):
        if quotas[w] > 0:
            start_cycle(w, 0.0)

    burst: list[tuple[float, int, np.ndarray, float]] = []  # arrival, worker, grad, ready
    burst_end = -1.0

    def flush_burst():
        nonlocal services, burst, burst_end
        if not burst:
            return
        snap = center.copy()  # state every burst member reads
        if elastic:
            scale = eta * rho
            fns = [
                (lambda cur, sl, wv=workers[w]: scale * (wv[sl] - cur))
                for _, w, _, _ in burst
            ]
        else:
            fns = [
                (lambda cur, sl, g=grad: -eta * g[sl])
                for _, _, grad, _ in burst
            ]
        interleaved_apply(center, fns, race_rng)
        for arrival, w, grad, grad_ready in burst:
            apply_end = arrival + u_m
            if u_m > 0.0:
                tl.record(start=arrival, end=apply_end, kind="update-done",
                          category="master_update", sender=w)
            reply_at = tl.record(start=apply_end, end=apply_end + msg_w,
                                 kind="message-arrival", category="master_param",
                                 sender="master", receiver=w, nbytes=init.nbytes)
            if elastic:
                upd_start = max(grad_ready, reply_at)
                workers[w] = easgd_worker_step(workers[w], grad, snap, eta, rho)
                if u_w > 0.0:
                    tl.record(start=upd_start, end=upd_start + u_w,
                              kind="update-done", category="worker_update",
                              sender=w, receiver=w)
                next_start = upd_start + u_w
            else:
                workers[w] = center.copy()  # adopt the post-burst weights
                next_start = reply_at
            services += 1
            done[w] += 1
            recorder.maybe(services, reply_at, center)
            if done[w] < quotas[w]:
                start_cycle(w, next_start)
        burst = []
        burst_end = -1.0

    while len(pending) or burst:
        if not len(pending):
            flush_burst()
            continue
        arrival, w, (grad, grad_ready) = pending.pop()
        if burst and arrival >= burst_end:
            flush_burst()
            # flushing may enqueue earlier arrivals; reinsert and restart
            pending.push(arrival, w, (grad, grad_ready))
            continue
        burst.append((arrival, w, grad, grad_ready))
        burst_end = max(burst_end, arrival + max(u_m, msg_w))
    flush_burst()

    return recorder.build(cfg.method, tl.elapsed, center, timeline=tl,
                          worker_weights=workers)


def _run_threaded(cfg: TrainerConfig, problem, cm: CostModel) -> RunRecord:
    P = cfg.cluster.workers
    eta, rho = cfg.hyper.eta, cfg.hyper.rho
    elastic = cfg.method == "hogwild-easgd"
    rngs = [worker_rng(cfg.seed, w) for w in range(P)]
    quotas = split_iterations(cfg.iterations, P)

    init = problem.init_weights()
    workers = [init.copy() for _ in range(P)]
    center = init.copy()  # shared, updated with no lock
    state = {"failure": None, "count": 0}
    count_lock = threading.Lock()  # metrics bookkeeping only, not the weights
    busy = {"compute": [0.0] * P, "worker_update": [0.0] * P, "apply": [0.0] * P}
    recorder = Recorder(problem, cfg.eval_every, cfg.iterations, defer=True)
    t_start = time.perf_counter()

    def worker(w: int):
        try:
            for _ in range(quotas[w]):
                if elastic:
                    snap = center.copy()  # racing element-wise read
                    c0 = time.perf_counter()
                    grad = problem.gradient(workers[w], rngs[w], cfg.batch_size)
                    busy["compute"][w] += time.perf_counter() - c0
                    a0 = time.perf_counter()
                    hogwild_apply(center, (eta * rho) * (workers[w] - snap))
                    busy["apply"][w] += time.perf_counter() - a0
                    u0 = time.perf_counter()
                    workers[w] = easgd_worker_step(workers[w], grad, snap, eta, rho)
                    busy["worker_update"][w] += time.perf_counter() - u0
                else:
                    c0 = time.perf_counter()
                    grad = problem.gradient(workers[w], rngs[w], cfg.batch_size)
                    busy["compute"][w] += time.perf_counter() - c0
                    a0 = time.perf_counter()
                    hogwild_apply(center, -eta * grad)
                    busy["apply"][w] += time.perf_counter() - a0
                    workers[w] = center.copy()  # racing snapshot
                with count_lock:  # metrics only; weight traffic stays lock-free
                    state["count"] += 1
                    recorder.maybe(state["count"], time.perf_counter() - t_start, center)
        except Exception as exc:
            state["failure"] = exc

    threads = [threading.Thread(target=worker, args=(w,), name=f"hogwild-worker-{w}")
               for w in range(P)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if state["failure"] is not None:
        raise state["failure"]

    total = time.perf_counter() - t_start
    breakdown = {c: 0.0 for c in CATEGORIES}
    breakdown["forward_backward"] = float(np.mean(busy["compute"]))
    breakdown["worker_update"] = float(np.mean(busy["worker_update"]))
    breakdown["master_update"] = float(np.mean(busy["apply"]))
    return recorder.build(cfg.method, total, center, breakdown=breakdown,
                          worker_weights=workers)
