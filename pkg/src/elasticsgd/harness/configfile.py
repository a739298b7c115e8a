"""Experiment config files: INI sections of key = value pairs.

Layout::

    [experiment]
    output_dir = out            ; overridden by $ELASTICSGD_OUTPUT_DIR
    cost_model = fdr            ; fdr | qdr | 10gbe | custom
    alpha = 1.0e-6              ; custom cost model only
    beta = 2.0e-10
    compute_seconds = 0.001     ; constant, or "measured" to calibrate on host
    worker_update_seconds = 0.0
    master_update_seconds = 0.0

    [dataset]
    kind = synthetic            ; synthetic | idx
    classes = 10                ; synthetic keys
    dim = 32
    per_class = 200
    test_per_class = 50
    separation = 6.0
    seed = 0
    normalize = true
    ; idx kind instead takes: train_images, train_labels, test_images, test_labels

    [model]
    layers = 32 64 10
    activation = relu
    seed = 1

    [trainer:NAME]              ; one section per run; NAME names the outputs
    method = sync-easgd3
    iterations = 500
    batch_size = 32
    eta = 0.1
    rho = 0.25
    mu = 0.9
    workers = 4
    groups = 1
    engine = simulated
    eval_every = 100
    seed = 42
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..datasets import Dataset, gen_synthetic, load_idx, normalize
from ..errors import ConfigError
from ..fabric.costmodel import CostModel, constant_compute
from ..network import ModelSpec
from ..trainers import NetworkProblem, TrainerConfig, make_config
from ..updates import HyperParams

OUTPUT_DIR_ENV = "ELASTICSGD_OUTPUT_DIR"


@dataclass
class ExperimentConfig:
    output_dir: Path
    cost_model: CostModel
    dataset_train: Dataset
    dataset_test: Dataset | None
    model_spec: ModelSpec
    trainers: list[tuple[str, TrainerConfig]] = field(default_factory=list)

    def problem(self) -> NetworkProblem:
        return NetworkProblem(self.model_spec, self.dataset_train, self.dataset_test)


def _get(section, key: str, cast, default=None, *, section_name: str):
    if key not in section:
        if default is not None:
            return default
        raise ConfigError("missing required key", section=section_name, key=key)
    raw = section[key]
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"cannot parse value {raw!r}", section=section_name, key=key)


def load_experiment(path: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")

    for required in ("experiment", "dataset", "model"):
        if required not in parser:
            raise ConfigError("missing required section", section=required)

    exp = parser["experiment"]
    out_dir = os.environ.get(OUTPUT_DIR_ENV) or _get(
        exp, "output_dir", str, "results", section_name="experiment")

    train, test = _load_dataset(parser["dataset"])
    spec = _load_model(parser["model"], train)
    cm = _load_cost_model(exp, spec)

    trainers = []
    for name in parser.sections():
        if not name.startswith("trainer"):
            continue
        label = name.split(":", 1)[1] if ":" in name else name
        trainers.append((label, _load_trainer(parser[name], name, train)))
    if not trainers:
        raise ConfigError("config defines no [trainer:...] sections")

    return ExperimentConfig(Path(out_dir), cm, train, test, spec, trainers)


def _load_dataset(sec) -> tuple[Dataset, Dataset | None]:
    kind = _get(sec, "kind", str, "synthetic", section_name="dataset")
    if kind == "synthetic":
        classes = _get(sec, "classes", int, section_name="dataset")
        dim = _get(sec, "dim", int, section_name="dataset")
        per_class = _get(sec, "per_class", int, section_name="dataset")
        test_per_class = _get(sec, "test_per_class", int, 0, section_name="dataset")
        separation = _get(sec, "separation", float, 6.0, section_name="dataset")
        seed = _get(sec, "seed", int, 0, section_name="dataset")
        train = gen_synthetic(classes, dim, per_class, seed, separation)
        test = (gen_synthetic(classes, dim, test_per_class, seed + 1, separation)
                if test_per_class > 0 else None)
    elif kind == "idx":
        train = load_idx(_get(sec, "train_images", str, section_name="dataset"),
                         _get(sec, "train_labels", str, section_name="dataset"))
        test = None
        if "test_images" in sec:
            test = load_idx(_get(sec, "test_images", str, section_name="dataset"),
                            _get(sec, "test_labels", str, section_name="dataset"))
    else:
        raise ConfigError(f"unknown dataset kind {kind!r}", section="dataset", key="kind")

    if _get(sec, "normalize", bool, True, section_name="dataset"):
        train = normalize(train)
        if test is not None:
            test = normalize(test)
    return train, test


def _load_model(sec, train: Dataset) -> ModelSpec:
    layers = tuple(int(x) for x in _get(sec, "layers", str, section_name="model").split())
    if layers and layers[0] != train.dim:
        raise ConfigError(
            f"first layer dim {layers[0]} != dataset dim {train.dim}",
            section="model", key="layers",
        )
    return ModelSpec(
        layers,
        activation=_get(sec, "activation", str, "relu", section_name="model"),
        seed=_get(sec, "seed", int, 0, section_name="model"),
    )


def _load_cost_model(exp, spec: ModelSpec) -> CostModel:
    name = _get(exp, "cost_model", str, "fdr", section_name="experiment")
    compute_raw = _get(exp, "compute_seconds", str, "0.0", section_name="experiment")
    u_w = _get(exp, "worker_update_seconds", float, 0.0, section_name="experiment")
    u_m = _get(exp, "master_update_seconds", float, 0.0, section_name="experiment")
    if compute_raw.strip() == "measured":
        compute = _calibrated_compute(spec)
    else:
        try:
            compute = constant_compute(float(compute_raw))
        except ValueError:
            raise ConfigError(f"cannot parse value {compute_raw!r}",
                              section="experiment", key="compute_seconds")
    kwargs = dict(compute=compute,
                  worker_update=lambda n: u_w,
                  master_update=lambda n: u_m)
    if name == "custom":
        return CostModel(alpha=_get(exp, "alpha", float, section_name="experiment"),
                         beta=_get(exp, "beta", float, section_name="experiment"),
                         **kwargs)
    try:
        return CostModel.preset(name, **kwargs)
    except Exception:
        raise ConfigError(f"unknown cost_model {name!r}",
                          section="experiment", key="cost_model")


def _calibrated_compute(spec: ModelSpec):
    from ..fabric.costmodel import measured_compute
    from ..kernels import softmax_cross_entropy
    from ..network import backward, build_model, forward
    from ..rng import CounterRng

    weights = build_model(spec)
    rng = CounterRng(0)
    batch = rng.normal_block(64 * spec.dims[0]).reshape(64, spec.dims[0])
    labels = rng.randint_block(64, spec.dims[-1])

    def minibatch():
        cache, logits = forward(spec, weights, batch)
        _, dlogits = softmax_cross_entropy(logits, labels)
        backward(spec, weights, cache, dlogits)

    return measured_compute(minibatch)


def _load_trainer(sec, section_name: str, train: Dataset) -> TrainerConfig:
    try:
        return make_config(
            _get(sec, "method", str, section_name=section_name),
            workers=_get(sec, "workers", int, 1, section_name=section_name),
            iterations=_get(sec, "iterations", int, section_name=section_name),
            batch_size=min(_get(sec, "batch_size", int, 1, section_name=section_name),
                           train.n),
            hyper=HyperParams(
                eta=_get(sec, "eta", float, 0.01, section_name=section_name),
                rho=_get(sec, "rho", float, 0.1, section_name=section_name),
                mu=_get(sec, "mu", float, 0.9, section_name=section_name),
            ),
            groups=_get(sec, "groups", int, 1, section_name=section_name),
            engine=_get(sec, "engine", str, "simulated", section_name=section_name),
            eval_every=_get(sec, "eval_every", int, 0, section_name=section_name),
            seed=_get(sec, "seed", int, 0, section_name=section_name),
            overlap_baseline=_get(sec, "overlap_baseline", bool, True,
                                  section_name=section_name),
        )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(str(exc), section=section_name)
