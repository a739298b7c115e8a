"""Feed-forward network with all parameters in one contiguous packed buffer.

The packed layout keeps every layer's weight matrix and bias vector as views
into a single flat array, so a whole model is sent over the fabric as one
message and updated with flat vector arithmetic. Layout for dims
``[d0, d1, ..., dL]``: W1 (d0 x d1), b1 (d1), W2 (d1 x d2), b2 (d2), ...
row-major, in that order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, InputError, ShapeError, StaleCacheError
from .kernels import ACTIVATIONS, gemm
from .rng import CounterRng, mix64

CHECKPOINT_MAGIC = b"EFW1"


@dataclass(frozen=True)
class ModelSpec:
    """Layer dimensions (input, hidden..., output), activation, init seed.

    ``activation`` applies to every hidden layer; pass a tuple to vary it per
    layer. The final layer is linear (logits feed softmax cross-entropy).
    """

    dims: tuple[int, ...]
    activation: str | tuple[str, ...] = "relu"
    seed: int = 0
    dtype: np.dtype = np.float64

    def __post_init__(self):
        if len(self.dims) < 2:
            raise InputError("a model needs at least an input and an output dim")
        if any(d < 1 for d in self.dims):
            raise InputError(f"all dims must be >= 1, got {self.dims}")
        for kind in self.hidden_activations():
            if kind not in ACTIVATIONS:
                raise InputError(f"unknown activation {kind!r}")

    def hidden_activations(self) -> tuple[str, ...]:
        n_hidden = len(self.dims) - 2
        if isinstance(self.activation, str):
            return (self.activation,) * n_hidden
        if len(self.activation) != n_hidden:
            raise InputError(
                f"need {n_hidden} activation kinds, got {len(self.activation)}"
            )
        return tuple(self.activation)

    @property
    def num_layers(self) -> int:
        return len(self.dims) - 1

    def parameter_count(self) -> int:
        return sum(
            fan_in * fan_out + fan_out
            for fan_in, fan_out in zip(self.dims[:-1], self.dims[1:])
        )


@dataclass
class View:
    """One parameter tensor's placement inside the packed buffer."""

    name: str
    offset: int
    shape: tuple[int, ...]

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


class PackedWeights:
    """Contiguous parameter buffer plus the per-layer view table.

    Views are disjoint, contiguous, and cover the buffer exactly; mutating a
    tensor obtained from :meth:`view` writes through to its slice.
    """

    def __init__(self, buffer: np.ndarray, views: list[View]):
        covered = 0
        for v in views:
            if v.offset != covered:
                raise ShapeError(f"view {v.name} at offset {v.offset}, expected {covered}")
            covered += v.size
        if covered != buffer.size:
            raise ShapeError(f"views cover {covered} elements, buffer has {buffer.size}")
        self.buffer = buffer
        self.views = views

    def view(self, name: str) -> np.ndarray:
        for v in self.views:
            if v.name == name:
                return self.buffer[v.offset : v.offset + v.size].reshape(v.shape)
        raise KeyError(name)

    def clone(self) -> "PackedWeights":
        return PackedWeights(self.buffer.copy(), self.views)

    @property
    def size(self) -> int:
        return self.buffer.size

    @property
    def nbytes(self) -> int:
        return self.buffer.nbytes


def view_table(spec: ModelSpec) -> list[View]:
    """The packed layout of ``spec``: alternating weight and bias views."""
    views: list[View] = []
    offset = 0
    for layer, (fan_in, fan_out) in enumerate(zip(spec.dims[:-1], spec.dims[1:]), start=1):
        views.append(View(f"W{layer}", offset, (fan_in, fan_out)))
        offset += fan_in * fan_out
        views.append(View(f"b{layer}", offset, (fan_out,)))
        offset += fan_out
    return views


def build_model(spec: ModelSpec) -> PackedWeights:
    """Allocate one packed buffer and fill it: Xavier-uniform weights with
    bound sqrt(6 / (fan_in + fan_out)), zero biases. Deterministic in seed.
    """
    buf = np.zeros(spec.parameter_count(), dtype=spec.dtype)
    packed = PackedWeights(buf, view_table(spec))
    rng = CounterRng(mix64(spec.seed ^ 0xE1A57F17))
    for layer, (fan_in, fan_out) in enumerate(zip(spec.dims[:-1], spec.dims[1:]), start=1):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = (rng.uniform_block(fan_in * fan_out) * 2.0 - 1.0) * bound
        packed.view(f"W{layer}")[:] = w.reshape(fan_in, fan_out).astype(spec.dtype)
        # biases stay zero
    return packed


@dataclass
class ForwardCache:
    """Per-layer inputs and pre-activations retained for backward."""

    inputs: list[np.ndarray]
    pre_activations: list[np.ndarray]
    weights_token: int
    spec: ModelSpec


def forward(spec: ModelSpec, weights: PackedWeights, batch: np.ndarray
            ) -> tuple[ForwardCache, np.ndarray]:
    """Run the network on a (b, input_dim) batch; returns (cache, logits)."""
    batch = np.asarray(batch, dtype=weights.buffer.dtype)
    if batch.ndim != 2 or batch.shape[1] != spec.dims[0]:
        raise InputError(
            f"batch shape {batch.shape} does not match input dim {spec.dims[0]}"
        )
    acts = spec.hidden_activations()
    inputs, pres = [], []
    x = batch
    for layer in range(1, spec.num_layers + 1):
        inputs.append(x)
        z = gemm(x, weights.view(f"W{layer}")) + weights.view(f"b{layer}")
        pres.append(z)
        if layer <= len(acts):
            x = ACTIVATIONS[acts[layer - 1]][0](z)
        else:
            x = z  # final layer is linear
    cache = ForwardCache(inputs, pres, id(weights), spec)
    return cache, x


def backward(spec: ModelSpec, weights: PackedWeights, cache: ForwardCache,
             dlogits: np.ndarray) -> np.ndarray:
    """Gradient of the (mean) loss w.r.t. every packed parameter.

    The result is one contiguous buffer with the same layout as ``weights``.
    """
    if cache.weights_token != id(weights) or cache.spec is not spec:
        raise StaleCacheError("cache was produced by a different forward pass")
    if dlogits.shape != cache.pre_activations[-1].shape:
        raise ShapeError(
            f"dlogits shape {dlogits.shape} != logits shape {cache.pre_activations[-1].shape}"
        )
    acts = spec.hidden_activations()
    grad = np.zeros_like(weights.buffer)
    packed_grad = PackedWeights(grad, weights.views)
    delta = dlogits
    for layer in range(spec.num_layers, 0, -1):
        x = cache.inputs[layer - 1]
        packed_grad.view(f"W{layer}")[:] = gemm(x.T, delta)
        packed_grad.view(f"b{layer}")[:] = delta.sum(axis=0)
        if layer > 1:
            delta = gemm(delta, weights.view(f"W{layer}").T)
            act_grad = ACTIVATIONS[acts[layer - 2]][1]
            delta = delta * act_grad(cache.pre_activations[layer - 2])
    return grad


def save_weights(path: str, spec: ModelSpec, weights: PackedWeights) -> None:
    """Checkpoint format: magic ``EFW1``, uint32 dim count, dims as uint32,
    then the raw float64 buffer. All integers little-endian.
    """
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(spec.dims)))
        fh.write(struct.pack(f"<{len(spec.dims)}I", *spec.dims))
        fh.write(weights.buffer.astype("<f8").tobytes())


def load_weights(path: str) -> tuple[tuple[int, ...], np.ndarray]:
    """Read a checkpoint; returns (dims, flat float64 buffer).

    The activation kind is not stored; callers supply it when rebuilding a
    :class:`ModelSpec`.
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise DataFormatError(f"bad checkpoint magic {magic!r}", offset=0)
        (ndims,) = struct.unpack("<I", fh.read(4))
        dims = struct.unpack(f"<{ndims}I", fh.read(4 * ndims))
        buf = np.frombuffer(fh.read(), dtype="<f8").astype(np.float64)
    expected = ModelSpec(dims).parameter_count()
    if buf.size != expected:
        raise DataFormatError(
            f"buffer holds {buf.size} values, dims {dims} need {expected}",
            offset=8 + 4 * ndims,
        )
    return dims, buf


def packed_weights_for(spec: ModelSpec, buffer: np.ndarray) -> PackedWeights:
    """Wrap an existing flat buffer in the view table of ``spec``."""
    expected = spec.parameter_count()
    if buffer.size != expected:
        raise ShapeError(f"buffer size {buffer.size} != layout size {expected}")
    return PackedWeights(np.ascontiguousarray(buffer, dtype=spec.dtype),
                         view_table(spec))
