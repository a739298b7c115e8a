"""Dense numeric kernels: matrix multiply, elementwise ops, loss.

Matrices are 2-D C-contiguous numpy arrays (row-major). All kernels are pure
functions; none keeps internal state, so concurrent use on read-only inputs
is safe.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError, ShapeError


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"{name} must be 2-D with positive dims, got shape {a.shape}")
    return np.ascontiguousarray(a)


def gemm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense matrix product a @ b with explicit shape validation."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"gemm shape mismatch: {a.shape} x {b.shape}")
    return a @ b


def axpy(scale: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Return y + scale * x elementwise (new buffer)."""
    if x.shape != y.shape:
        raise ShapeError(f"axpy length mismatch: {x.shape} vs {y.shape}")
    return y + scale * x


# --- activations ------------------------------------------------------------

def relu(z):
    return np.maximum(z, 0.0)


def relu_grad(z):
    return (z > 0).astype(z.dtype)


def tanh(z):
    return np.tanh(z)


def tanh_grad(z):
    t = np.tanh(z)
    return 1.0 - t * t


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid_grad(z):
    s = sigmoid(z)
    return s * (1.0 - s)


ACTIVATIONS = {
    "relu": (relu, relu_grad),
    "tanh": (tanh, tanh_grad),
    "sigmoid": (sigmoid, sigmoid_grad),
}


# --- loss -------------------------------------------------------------------

def softmax(logits: np.ndarray) -> np.ndarray:
    """Row softmax with per-row max subtraction for overflow safety."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of row softmax against integer class labels.

    Returns ``(loss, dlogits)`` where ``dlogits`` is the gradient of the mean
    loss, i.e. ``(softmax(logits) - onehot(labels)) / rows``.
    """
    labels = np.asarray(labels, dtype=np.int64)
    rows, cols = logits.shape
    if labels.shape != (rows,):
        raise ShapeError(
            f"labels length {labels.shape} does not match logits rows {rows}"
        )
    if labels.min() < 0 or labels.max() >= cols:
        bad = labels[(labels < 0) | (labels >= cols)][0]
        raise InputError(f"label {bad} out of range for {cols} classes")
    probs = softmax(logits)
    picked = probs[np.arange(rows), labels]
    loss = float(-np.log(picked).mean())
    dlogits = probs.copy()
    dlogits[np.arange(rows), labels] -= 1.0
    dlogits /= rows
    return loss, dlogits
