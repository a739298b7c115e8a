"""Dataset ingestion, normalization, and seeded batch sampling.

Supports the classic IDX binary container (big-endian headers, magic
0x00000803 for image tensors and 0x00000801 for label vectors) and a
synthetic Gaussian-blob generator for desk-scale experiments. Datasets are
immutable after construction and safe to share read-only across workers;
sampling state lives in per-worker generators, never in the dataset.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, InputError
from .rng import CounterRng

_IMAGE_MAGIC = 0x00000803
_LABEL_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    """n samples of dimension d with integer class labels."""

    samples: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int64
    num_classes: int

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[0] < 1:
            raise InputError(f"samples must be (n, d) with n >= 1, got {self.samples.shape}")
        if self.labels.shape != (self.samples.shape[0],):
            raise InputError(
                f"labels shape {self.labels.shape} does not match n={self.samples.shape[0]}"
            )
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise InputError("labels must lie in [0, num_classes)")
        self.samples.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class Batch:
    samples: np.ndarray
    labels: np.ndarray

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    @property
    def nbytes(self) -> int:
        return self.samples.shape[0] * self.samples.shape[1] * self.samples.itemsize


def _read_exact(fh, count: int, offset: int, what: str) -> bytes:
    data = fh.read(count)
    if len(data) != count:
        raise DataFormatError(f"truncated file while reading {what}", offset=offset)
    return data


def _open_idx(path: str):
    if str(path).endswith(".gz"):
        import gzip

        return gzip.open(path, "rb")
    return open(path, "rb")


def load_idx(image_path: str, label_path: str) -> Dataset:
    """Load an image/label IDX file pair; pixels are scaled to [0, 1].

    Paths ending in ``.gz`` are decompressed transparently.
    """
    with _open_idx(image_path) as fh:
        magic, n, rows, cols = struct.unpack(">IIII", _read_exact(fh, 16, 0, "image header"))
        if magic != _IMAGE_MAGIC:
            raise DataFormatError(
                f"bad image magic 0x{magic:08x}, expected 0x{_IMAGE_MAGIC:08x}", offset=0
            )
        raw = _read_exact(fh, n * rows * cols, 16, "pixel data")
    images = np.frombuffer(raw, dtype=np.uint8).reshape(n, rows * cols)

    with _open_idx(label_path) as fh:
        magic, n_labels = struct.unpack(">II", _read_exact(fh, 8, 0, "label header"))
        if magic != _LABEL_MAGIC:
            raise DataFormatError(
                f"bad label magic 0x{magic:08x}, expected 0x{_LABEL_MAGIC:08x}", offset=0
            )
        labels = np.frombuffer(_read_exact(fh, n_labels, 8, "label data"), dtype=np.uint8)

    if n_labels != n:
        raise DataFormatError(f"image count {n} != label count {n_labels}", offset=4)
    samples = images.astype(np.float64) / 255.0
    return Dataset(samples, labels.astype(np.int64), num_classes=int(labels.max()) + 1)


def write_idx(image_path: str, label_path: str, samples: np.ndarray, labels: np.ndarray,
              rows: int | None = None, cols: int | None = None) -> None:
    """Write an IDX pair. Float samples in [0, 1] are mapped back to bytes
    with round-to-nearest, so load_idx(write_idx(load_idx(x))) is bit-exact.
    """
    samples = np.asarray(samples)
    if samples.dtype != np.uint8:
        samples = np.rint(samples * 255.0).astype(np.uint8)
    n, d = samples.shape
    if rows is None:
        rows, cols = 1, d
    with open(image_path, "wb") as fh:
        fh.write(struct.pack(">IIII", _IMAGE_MAGIC, n, rows, cols))
        fh.write(samples.tobytes())
    with open(label_path, "wb") as fh:
        fh.write(struct.pack(">II", _LABEL_MAGIC, n))
        fh.write(np.asarray(labels, dtype=np.uint8).tobytes())


def gen_synthetic(classes: int, dim: int, per_class: int, seed: int,
                  separation: float = 6.0) -> Dataset:
    """Gaussian blobs with unit per-coordinate spread.

    Class k is centered at ``separation`` along coordinate axis k (a scaled
    simplex), so blobs are linearly separable once ``separation`` is a few
    standard deviations. Requires dim >= classes. Deterministic in seed.
    """
    if classes < 1 or dim < 1 or per_class < 1:
        raise InputError("classes, dim and per_class must all be >= 1")
    if dim < classes:
        raise InputError(f"dim ({dim}) must be >= classes ({classes}) to place blob centers")
    rng = CounterRng(seed)
    n = classes * per_class
    noise = rng.normal_block(n * dim).reshape(n, dim)
    labels = np.repeat(np.arange(classes, dtype=np.int64), per_class)
    means = np.zeros((classes, dim))
    means[np.arange(classes), np.arange(classes)] = separation
    return Dataset(means[labels] + noise, labels, num_classes=classes)


def normalize(d: Dataset) -> Dataset:
    """Per-feature standardization: mean 0, population std 1.

    Constant features are mapped to zero rather than rejected. Idempotent up
    to rounding: applying it twice changes nothing beyond ~1e-10.
    """
    if d.n < 2:
        raise InputError("normalize needs at least 2 samples")
    mean = d.samples.mean(axis=0)
    std = d.samples.std(axis=0)  # population std (ddof=0)
    scale = np.where(std > 0.0, std, 1.0)
    out = (d.samples - mean) / scale
    out[:, std == 0.0] = 0.0
    return Dataset(out, d.labels.copy(), d.num_classes)


def sample_batch(d: Dataset, b: int, rng: CounterRng) -> Batch:
    """b indices drawn uniformly with replacement; advances rng."""
    if not 1 <= b <= d.n:
        raise InputError(f"batch size {b} out of range [1, {d.n}]")
    idx = rng.randint_block(b, d.n)
    return Batch(d.samples[idx], d.labels[idx])
