"""Scikit-learn style estimator facade over the trainer catalog.

The classifier follows the sklearn estimator contract without importing
sklearn: constructor parameters are stored verbatim, ``get_params`` /
``set_params`` expose them for cloning and grid search, fitted state lives in
trailing-underscore attributes, and ``fit`` returns ``self``. It therefore
composes with ``sklearn.base.clone``, pipelines, and model-selection tools
when sklearn happens to be installed.
"""

from __future__ import annotations

import inspect

import numpy as np

from .datasets import Dataset
from .errors import InputError
from .fabric.costmodel import CostModel, constant_compute
from .kernels import softmax
from .network import ModelSpec, forward, packed_weights_for
from .trainers import NetworkProblem, make_config, run_trainer
from .trainers.config import METHOD_SCHEDULERS
from .updates import HyperParams


def check_array(x, name: str = "X") -> np.ndarray:
    """2-D finite float array or an InputError naming the offender."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InputError(f"{name} contains NaN or infinity")
    return arr


def check_X_y(x, y) -> tuple[np.ndarray, np.ndarray]:
    arr = check_array(x)
    labels = np.asarray(y)
    if labels.ndim != 1 or labels.shape[0] != arr.shape[0]:
        raise InputError(
            f"y must be 1-D with length {arr.shape[0]}, got shape {labels.shape}"
        )
    return arr, labels


def check_is_fitted(estimator, attribute: str) -> None:
    if not hasattr(estimator, attribute):
        raise InputError(
            f"{type(estimator).__name__} is not fitted yet; call fit(X, y) first"
        )


class ParamsMixin:
    """sklearn-compatible get_params/set_params from __init__ signature."""

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise InputError(
                    f"invalid parameter {key!r} for {type(self).__name__}; "
                    f"valid parameters: {sorted(valid)}"
                )
            setattr(self, key, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


class ElasticSGDClassifier(ParamsMixin):
    """Feed-forward classifier trained by one of the catalog's schedules.

    Parameters
    ----------
    hidden_layers : tuple of int, sizes of the hidden layers.
    activation : "relu" | "tanh" | "sigmoid".
    method : any trainer method id, e.g. "sync-easgd3", "async-easgd",
        "hogwild-sgd", "original-easgd", "group-easgd".
    iterations : scheduling rounds (one batch per worker and round for the
        synchronous family, one worker-batch per round otherwise).
    batch_size, learning_rate, elastic_rate, momentum : the usual knobs;
        elastic_rate and momentum are ignored by methods that lack them.
    workers, groups : cluster size and (group-easgd only) partition count.
    engine : "simulated" (virtual time) or "threaded" (real threads).
    cost_model : preset name ("fdr" | "qdr" | "10gbe") or a CostModel;
        prices the simulated engine's communication.
    compute_seconds : constant virtual seconds per forward+backward.
    normalize : standardize features on fit and reuse the statistics at
        predict time.
    eval_every : metric cadence in rounds (0 records only the final point).
    seed : drives initialization and every batch draw.

    Attributes (after fit)
    ----------------------
    classes_ : sorted class labels as given in y.
    weights_ : packed parameter buffer of the trained center model.
    run_record_ : the full RunRecord of the training run.
    n_features_in_ : feature count seen at fit time.
    """

    def __init__(self, hidden_layers=(100,), activation="relu",
                 method="sync-easgd3", iterations=1000, batch_size=64,
                 learning_rate=0.01, elastic_rate=0.1, momentum=0.9,
                 workers=4, groups=1, engine="simulated", cost_model="fdr",
                 compute_seconds=0.001, normalize=True, eval_every=0, seed=0):
        self.hidden_layers = hidden_layers
        self.activation = activation
        self.method = method
        self.iterations = iterations
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.elastic_rate = elastic_rate
        self.momentum = momentum
        self.workers = workers
        self.groups = groups
        self.engine = engine
        self.cost_model = cost_model
        self.compute_seconds = compute_seconds
        self.normalize = normalize
        self.eval_every = eval_every
        self.seed = seed

    # -- estimator API -------------------------------------------------

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        if self.method not in METHOD_SCHEDULERS:
            raise InputError(f"unknown method {self.method!r}")
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise InputError("need at least 2 classes to fit a classifier")
        self.n_features_in_ = X.shape[1]

        if self.normalize:
            self.feature_mean_ = X.mean(axis=0)
            std = X.std(axis=0)
            self.feature_scale_ = np.where(std > 0.0, std, 1.0)
        else:
            self.feature_mean_ = np.zeros(X.shape[1])
            self.feature_scale_ = np.ones(X.shape[1])
        Xn = self._transform(X)

        spec = ModelSpec(
            (X.shape[1], *tuple(self.hidden_layers), len(self.classes_)),
            activation=self.activation,
            seed=self.seed,
        )
        train = Dataset(Xn, encoded.astype(np.int64), len(self.classes_))
        problem = NetworkProblem(spec, train)
        cfg = make_config(
            self.method,
            workers=self.workers,
            iterations=self.iterations,
            batch_size=min(self.batch_size, train.n),
            hyper=self._hyper(),
            groups=self.groups,
            engine=self.engine,
            eval_every=self.eval_every,
            seed=self.seed,
        )
        record = run_trainer(cfg, problem, self._cost_model())
        self.model_spec_ = spec
        self.weights_ = record.final_weights
        self.run_record_ = record
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "weights_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise InputError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        packed = packed_weights_for(self.model_spec_, self.weights_)
        _, logits = forward(self.model_spec_, packed, self._transform(X))
        return logits

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return self.classes_[scores.argmax(axis=1)]

    def score(self, X, y) -> float:
        X, y = check_X_y(X, y)
        return float((self.predict(X) == y).mean())

    # -- internals -----------------------------------------------------

    def _transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.feature_mean_) / self.feature_scale_

    def _hyper(self) -> HyperParams:
        return HyperParams(eta=self.learning_rate, rho=self.elastic_rate,
                           mu=self.momentum)

    def _cost_model(self) -> CostModel:
        if isinstance(self.cost_model, CostModel):
            return self.cost_model
        return CostModel.preset(
            self.cost_model, compute=constant_compute(self.compute_seconds)
        )
