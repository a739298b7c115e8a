"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one ``ACCEPTANCE <id> PASS`` line (visible with ``pytest -s``
or in the captured output). Criterion 8 needs the real MNIST IDX files and
skips with download instructions when they are absent; criterion 9 is
hardware dependent and therefore reported warn-only, as specified.
"""

import warnings

import numpy as np
import pytest

from elasticsgd import CostModel, HyperParams, ModelSpec
from elasticsgd.datasets import Dataset, gen_synthetic, load_idx, normalize
from elasticsgd.fabric.costmodel import constant_compute, packed_vs_perlayer_cost
from elasticsgd.kernels import softmax_cross_entropy
from elasticsgd.network import build_model, forward, backward, PackedWeights
from elasticsgd.rng import CounterRng
from elasticsgd.trainers import (
    METHODS,
    NetworkProblem,
    QuadraticProblem,
    ZeroGradientProblem,
    make_config,
    run_trainer,
)
from elasticsgd.updates import (
    easgd_center_step,
    easgd_worker_step,
    measgd_worker_step,
    msgd_step,
    sgd_step,
)

FDR = CostModel.preset("fdr")


def done(cid: str, detail: str = ""):
    print(f"ACCEPTANCE {cid} PASS {detail}".rstrip())


# -- 1. update-rule oracles and reduction identities -------------------------

class TestC1UpdateRuleOracles:
    def test_hand_computed_scalars_to_1e12(self):
        out = easgd_worker_step(np.array([1.0]), np.array([2.0]), np.array([0.5]),
                                0.1, 0.2)
        assert abs(out[0] - 0.79) < 1e-12
        out = easgd_center_step(np.array([0.5]), [np.array([1.0]), np.array([2.0])],
                                0.1, 0.2)
        assert abs(out[0] - 0.54) < 1e-12
        w, v = msgd_step(np.array([0.0]), np.array([0.5]), np.array([1.0]), 0.1, 0.9)
        assert abs(v[0] - 0.35) < 1e-12 and abs(w[0] - 0.35) < 1e-12
        w, v = measgd_worker_step(np.array([1.0]), np.array([0.0]), np.array([1.0]),
                                  np.array([0.0]), 0.1, 0.9, 0.2)
        assert abs(v[0] + 0.1) < 1e-12 and abs(w[0] - 0.88) < 1e-12

    def test_kernel_reductions_bit_exact(self):
        rng = CounterRng(1)
        w, v, g, c = (rng.normal_block(64) for _ in range(4))
        assert np.array_equal(easgd_worker_step(w, g, c, 0.1, 0.0), sgd_step(w, g, 0.1))
        mw, mv = msgd_step(w, v, g, 0.1, 0.0)
        assert np.array_equal(mw, sgd_step(w, g, 0.1))
        aw, av = measgd_worker_step(w, v, g, c, 0.1, 0.0, 0.2)
        assert np.array_equal(aw, easgd_worker_step(w, g, c, 0.1, 0.2))
        bw, bv = measgd_worker_step(w, v, g, c, 0.1, 0.9, 0.0)
        cw, cv = msgd_step(w, v, g, 0.1, 0.9)
        assert np.array_equal(bw, cw) and np.array_equal(bv, cv)

    def test_schedule_reductions_bit_exact(self):
        prob = QuadraticProblem.random(30, seed=2)
        hy = HyperParams(eta=0.1, rho=0.5, mu=0.9)
        # P=1: asynchronous collapses onto round-robin
        a = run_trainer(make_config("async-easgd", workers=1, iterations=150,
                                    hyper=hy, seed=3), prob, FDR)
        b = run_trainer(make_config("original-easgd", workers=1, iterations=150,
                                    hyper=hy, seed=3), prob, FDR)
        assert a.weights_digest == b.weights_digest
        # g=1: group partitioning collapses onto sync-easgd2
        g = run_trainer(make_config("group-easgd", workers=4, iterations=80,
                                    hyper=hy, groups=1, seed=3), prob, FDR)
        s = run_trainer(make_config("sync-easgd2", workers=4, iterations=80,
                                    hyper=hy, seed=3), prob, FDR)
        assert g.weights_digest == s.weights_digest
        # mu=0: momentum variants collapse onto their base
        h0 = HyperParams(eta=0.1, rho=0.5, mu=0.0)
        m = run_trainer(make_config("async-measgd", workers=3, iterations=120,
                                    hyper=h0, seed=4), prob, FDR)
        e = run_trainer(make_config("async-easgd", workers=3, iterations=120,
                                    hyper=h0, seed=4), prob, FDR)
        assert m.weights_digest == e.weights_digest
        done("1", "update-rule oracles + reduction identities")


# -- 2. packed gradient vs finite differences --------------------------------

class TestC2GradientCheck:
    def test_packed_backward_vs_central_differences(self):
        spec = ModelSpec((6, 4, 3), activation="tanh", seed=6)
        weights = build_model(spec)
        rng = CounterRng(7)
        batch = rng.normal_block(30).reshape(5, 6)
        labels = rng.randint_block(5, 3)
        cache, logits = forward(spec, weights, batch)
        _, dlogits = softmax_cross_entropy(logits, labels)
        grad = backward(spec, weights, cache, dlogits)

        eps = 1e-6
        oracle = np.zeros_like(grad)
        for k in range(weights.size):
            vals = []
            for sign in (+1.0, -1.0):
                pert = PackedWeights(weights.buffer.copy(), weights.views)
                pert.buffer[k] += sign * eps
                _, lg = forward(spec, pert, batch)
                vals.append(softmax_cross_entropy(lg, labels)[0])
            oracle[k] = (vals[0] - vals[1]) / (2 * eps)
        rel = np.abs(grad - oracle) / np.maximum(np.abs(oracle), 1e-4)
        assert rel.max() < 1e-5
        done("2", f"max rel err {rel.max():.2e} < 1e-5")


# -- 3. elastic conservation --------------------------------------------------

class TestC3ElasticConservation:
    @pytest.mark.parametrize("workers", [2, 4, 8])
    def test_zero_gradient_round(self, workers):
        prob = ZeroGradientProblem(32, seed=workers)
        init = prob.init_weights()
        rec = run_trainer(make_config("sync-easgd2", workers=workers, iterations=1,
                                      hyper=HyperParams(eta=0.05, rho=0.3), seed=0),
                          prob, FDR)
        total_before = (workers + 1) * init
        total_after = rec.final_weights + sum(rec.final_worker_weights)
        err = np.abs(total_after - total_before).max()
        assert err < 1e-12
        done("3", f"P={workers} drift {err:.1e} < 1e-12")


# -- 4. cost-model exactness ---------------------------------------------------

class TestC4CostModelExactness:
    def test_roundrobin_vs_tree_ratio_8_over_3(self):
        # comm-only workload: no compute, no updates, no data staging, and a
        # single-view model so both schedules move the same packed message
        prob = QuadraticProblem.random(100, seed=9)
        hy = HyperParams(eta=0.01, rho=0.1)
        rr = run_trainer(make_config("original-easgd", workers=8, iterations=8,
                                     hyper=hy, seed=1), prob, FDR)
        tree = run_trainer(make_config("sync-easgd2", workers=8, iterations=1,
                                       hyper=hy, seed=1), prob, FDR)
        ratio = rr.total_seconds / tree.total_seconds
        assert abs(ratio - 8 / 3) < 1e-9
        done("4a", f"round-robin/tree time ratio {ratio:.12f}")

    def test_packed_vs_perlayer_latency_difference(self):
        rng = CounterRng(10)
        for _ in range(25):
            layers = [rng.randint(10**6) + 1 for _ in range(rng.randint(64) + 1)]
            cmp = packed_vs_perlayer_cost(layers, FDR)
            assert cmp.latency_overhead == (len(layers) - 1) * FDR.alpha
            assert cmp.per_layer - cmp.packed == pytest.approx(
                (len(layers) - 1) * FDR.alpha, rel=1e-9,
                abs=1e-30 if len(layers) == 1 else None)
        done("4b", "per-layer minus packed == (L-1)*alpha")


# -- 5. communication-breakdown directional reproduction ----------------------

class TestC5BreakdownDirection:
    def test_comm_ratio_ordering_and_reduction(self):
        # fixed desk-scale workload: deep narrow net (latency-dominated
        # exchanges), fdr link, 4 workers
        dims = (12,) + (12,) * 15 + (3,)
        spec = ModelSpec(dims, activation="tanh", seed=0)
        ds = normalize(gen_synthetic(3, 12, 60, seed=0))
        prob = NetworkProblem(spec, ds)
        cm = CostModel.preset("fdr", compute=constant_compute(2.2e-5),
                              worker_update=lambda n: 1e-6,
                              master_update=lambda n: 1e-6)
        hy = HyperParams(eta=0.05, rho=0.3)
        ratios = {}
        for method, iters in [("original-easgd", 200), ("sync-easgd1", 50),
                              ("sync-easgd2", 50), ("sync-easgd3", 50)]:
            rec = run_trainer(make_config(method, workers=4, iterations=iters,
                                          batch_size=16, hyper=hy, seed=1), prob, cm)
            ratios[method] = rec.comm_ratio
        assert (ratios["original-easgd"] > ratios["sync-easgd1"]
                > ratios["sync-easgd2"] > ratios["sync-easgd3"])
        assert ratios["sync-easgd3"] <= ratios["original-easgd"] / 3
        done("5", "comm ratios " + " > ".join(
            f"{ratios[m]:.1%}" for m in ("original-easgd", "sync-easgd1",
                                         "sync-easgd2", "sync-easgd3")))


# -- 6. determinism ------------------------------------------------------------

class TestC6Determinism:
    @pytest.mark.parametrize("method", sorted(METHODS))
    def test_simulated_bit_reproducible(self, method):
        prob = QuadraticProblem.random(25, seed=11)
        cm = CostModel.preset("qdr", compute=constant_compute(1e-4))
        groups = 2 if method == "group-easgd" else 1
        cfg = make_config(method, workers=4, iterations=60,
                          hyper=HyperParams(eta=0.1, rho=0.4, mu=0.5),
                          groups=groups, eval_every=20, seed=13)
        a, b = run_trainer(cfg, prob, cm), run_trainer(cfg, prob, cm)
        assert a.same_series(b)
        assert np.array_equal(a.final_weights, b.final_weights)

    @pytest.mark.parametrize("method", ["sync-easgd1", "sync-easgd2", "sync-easgd3",
                                        "group-easgd"])
    def test_threaded_synchronous_bit_reproducible(self, method):
        prob = QuadraticProblem.random(25, seed=12)
        groups = 2 if method == "group-easgd" else 1
        cfg = make_config(method, workers=4, iterations=40,
                          hyper=HyperParams(eta=0.1, rho=0.4),
                          groups=groups, engine="threaded", seed=14)
        a, b = run_trainer(cfg, prob, FDR), run_trainer(cfg, prob, FDR)
        assert a.weights_digest == b.weights_digest
        done("6", f"{method} threaded digest stable")


# -- 7. convex convergence ------------------------------------------------------

class TestC7ConvexConvergence:
    @pytest.mark.parametrize("method", sorted(METHODS))
    def test_simulated_reaches_optimum(self, method):
        prob = QuadraticProblem.random(50, seed=21)
        groups = 2 if method == "group-easgd" else 1
        iterations = 4000 if method == "original-easgd" else 3000
        hyper = (HyperParams(eta=0.02, rho=0.5, mu=0.9) if method == "async-msgd"
                 else HyperParams(eta=0.1, rho=0.5, mu=0.9))  # eta*rho*P = 0.2 < 1
        rec = run_trainer(make_config(method, workers=4, iterations=iterations,
                                      hyper=hyper, groups=groups, seed=1), prob, FDR)
        dist = prob.distance_to_optimum(rec.final_weights)
        assert dist < 1e-4, (method, dist)

    @pytest.mark.parametrize("method", ["hogwild-sgd", "hogwild-easgd"])
    def test_threaded_hogwild_reaches_optimum(self, method):
        prob = QuadraticProblem.random(50, seed=22)
        rec = run_trainer(make_config(method, workers=4, iterations=4000,
                                      hyper=HyperParams(eta=0.1, rho=0.5, mu=0.9),
                                      engine="threaded", seed=2), prob, FDR)
        dist = prob.distance_to_optimum(rec.final_weights)
        assert dist < 1e-3, (method, dist)
        done("7", f"{method} threaded distance {dist:.1e}")


# -- 8. MNIST desk-scale training ----------------------------------------------

def _standardize_pair(train: Dataset, test: Dataset) -> tuple[Dataset, Dataset]:
    mean = train.samples.mean(axis=0)
    std = train.samples.std(axis=0)
    scale = np.where(std > 0.0, std, 1.0)
    def apply(d: Dataset) -> Dataset:
        out = (d.samples - mean) / scale
        out[:, std == 0.0] = 0.0
        return Dataset(out, d.labels.copy(), d.num_classes)
    return apply(train), apply(test)


class TestC8MnistDeskScale:
    def test_sync3_accuracy_and_speedup_over_baseline(self, mnist_paths):
        train = load_idx(mnist_paths["train_images"], mnist_paths["train_labels"])
        test = load_idx(mnist_paths["test_images"], mnist_paths["test_labels"])
        assert train.n == 60000 and train.dim == 784 and train.num_classes == 10
        assert test.n == 10000
        train, test = _standardize_pair(train, test)

        spec = ModelSpec((784, 300, 100, 10), activation="relu", seed=0)
        prob = NetworkProblem(spec, train, test)
        cm = CostModel.preset("fdr", compute=constant_compute(1e-3))
        hy = HyperParams(eta=0.1, rho=0.25)  # eta*rho*P = 0.1 < 1
        b, P = 64, 4

        # 10 epochs = 600000 samples = 2343 rounds of P*b samples
        sync_rounds = (10 * train.n) // (P * b)
        sync3 = run_trainer(make_config("sync-easgd3", workers=P,
                                        iterations=sync_rounds, batch_size=b,
                                        hyper=hy, eval_every=100, seed=3), prob, cm)
        assert max(sync3.test_accuracy) >= 0.96, max(sync3.test_accuracy)

        target = 0.96
        t_sync = sync3.time_to_accuracy(target)
        assert t_sync is not None

        # baseline: one worker-batch per round; allow up to ~12 epochs
        base_iters = (12 * train.n) // b
        baseline = run_trainer(make_config("original-easgd", workers=P,
                                           iterations=base_iters, batch_size=b,
                                           hyper=hy, eval_every=400, seed=3),
                               prob, cm)
        t_base = baseline.time_to_accuracy(target)
        assert t_base is not None, "baseline never reached the target accuracy"
        assert t_base >= 2.0 * t_sync, (t_base, t_sync)
        done("8", f"sync3 {max(sync3.test_accuracy):.4f} acc, "
                  f"baseline/sync3 time {t_base / t_sync:.2f}x >= 2x")


class TestC8SyntheticAnalogue:
    """Same pipeline and assertions as the MNIST criterion on a synthetic
    task, so the desk-scale training path is exercised even where the MNIST
    files are unavailable. The real criterion is the test above."""

    def test_sync3_hits_target_and_baseline_at_least_2x_slower(self):
        train = gen_synthetic(10, 32, 400, seed=5, separation=5.0)
        test = gen_synthetic(10, 32, 100, seed=6, separation=5.0)
        train, test = _standardize_pair(train, test)
        spec = ModelSpec((32, 300, 100, 10), activation="relu", seed=0)
        prob = NetworkProblem(spec, train, test)
        cm = CostModel.preset("fdr", compute=constant_compute(1e-3))
        hy = HyperParams(eta=0.1, rho=0.25)
        P, b = 4, 64

        sync3 = run_trainer(make_config("sync-easgd3", workers=P,
                                        iterations=6 * train.n // (P * b),
                                        batch_size=b, hyper=hy, eval_every=4,
                                        seed=3), prob, cm)
        assert max(sync3.test_accuracy) >= 0.96
        t_sync = sync3.time_to_accuracy(0.96)
        baseline = run_trainer(make_config("original-easgd", workers=P,
                                           iterations=10 * train.n // b,
                                           batch_size=b, hyper=hy, eval_every=20,
                                           seed=3), prob, cm)
        t_base = baseline.time_to_accuracy(0.96)
        assert t_sync is not None and t_base is not None
        assert t_base >= 2.0 * t_sync
        done("8-analogue", f"time ratio {t_base / t_sync:.2f}x >= 2x (synthetic)")


# -- 9. lock-free throughput soft benchmark --------------------------------------

class TestC9HogwildThroughput:
    def test_lockfree_vs_locked_throughput_8_threads(self):
        prob = QuadraticProblem.random(2000, seed=31)
        hy = HyperParams(eta=0.05, rho=0.3)
        iters = 1600
        locked = run_trainer(make_config("async-easgd", workers=8, iterations=iters,
                                         hyper=hy, engine="threaded", seed=5),
                             prob, FDR)
        lockfree = run_trainer(make_config("hogwild-easgd", workers=8,
                                           iterations=iters, hyper=hy,
                                           engine="threaded", seed=5), prob, FDR)
        locked_tput = iters / locked.total_seconds
        free_tput = iters / lockfree.total_seconds
        print(f"ACCEPTANCE 9 REPORT locked {locked_tput:.0f} it/s, "
              f"lock-free {free_tput:.0f} it/s")
        if free_tput < locked_tput:
            warnings.warn(
                f"hardware-dependent: lock-free throughput {free_tput:.0f} it/s "
                f"below locked {locked_tput:.0f} it/s", stacklevel=1)
        else:
            done("9", f"lock-free {free_tput / locked_tput:.2f}x locked")
