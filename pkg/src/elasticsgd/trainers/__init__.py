"""The trainer catalog: every method dispatched through one entry point."""

from __future__ import annotations

from ..fabric.costmodel import CostModel
from .asynchronous import ASYNC_METHODS, run_asynchronous
from .config import METHODS, TrainerConfig, make_config
from .hogwild import HOGWILD_METHODS, run_hogwild
from .problems import NetworkProblem, QuadraticProblem, ZeroGradientProblem
from .records import RunRecord, evaluate, eval_loss, weights_digest
from .roundrobin import run_original_easgd
from .synchronous import SYNC_METHODS, run_synchronous


def run_trainer(cfg: TrainerConfig, problem, cost_model: CostModel | None = None
                ) -> RunRecord:
    """Run one configured trainer on a problem under its configured engine.

    The cost model prices the simulated engine's events; threaded runs use
    wall-clock time and ignore it. Defaults to a zero-cost model.
    """
    cm = cost_model if cost_model is not None else CostModel(alpha=0.0, beta=0.0)
    if cfg.method == "original-easgd":
        return run_original_easgd(cfg, problem, cm)
    if cfg.method in ASYNC_METHODS:
        return run_asynchronous(cfg, problem, cm)
    if cfg.method in HOGWILD_METHODS:
        return run_hogwild(cfg, problem, cm)
    return run_synchronous(cfg, problem, cm)


__all__ = [
    "ASYNC_METHODS",
    "HOGWILD_METHODS",
    "METHODS",
    "NetworkProblem",
    "QuadraticProblem",
    "RunRecord",
    "SYNC_METHODS",
    "TrainerConfig",
    "ZeroGradientProblem",
    "eval_loss",
    "evaluate",
    "make_config",
    "run_trainer",
    "weights_digest",
]
