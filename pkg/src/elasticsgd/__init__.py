"""Elastic-averaging SGD trainer family with a communication cost simulator.

The package layers as:

* numeric kernels, packed-weight networks, datasets (``kernels``,
  ``network``, ``datasets``, ``rng``)
* pure update rules (``updates``)
* the communication fabric: alpha-beta cost model, tree collectives, the
  virtual-time engine and lock-free apply (``fabric``)
* the trainer catalog driving the rules over the fabric (``trainers``)
* an estimator facade and the benchmark harness (``estimator``, ``harness``)
"""

from .estimator import ElasticSGDClassifier
from .fabric import ClusterSpec, CostModel
from .network import ModelSpec
from .trainers import (
    METHODS,
    NetworkProblem,
    QuadraticProblem,
    RunRecord,
    TrainerConfig,
    make_config,
    run_trainer,
)
from .updates import HyperParams

__version__ = "0.1.0"

__all__ = [
    "ClusterSpec",
    "CostModel",
    "ElasticSGDClassifier",
    "HyperParams",
    "METHODS",
    "ModelSpec",
    "NetworkProblem",
    "QuadraticProblem",
    "RunRecord",
    "TrainerConfig",
    "make_config",
    "run_trainer",
    "__version__",
]
