"""Pure update-rule kernels: SGD, momentum SGD, elastic worker/center steps.

Every kernel returns new buffers and touches nothing it was given. The
arithmetic is factored so that the degenerate cases collapse exactly onto the
simpler rules: with ``rho=0`` the elastic steps compute the same floating
point operations as plain (momentum) SGD, and with ``mu=0`` the momentum
steps compute the same operations as their momentum-free versions. Trainers
rely on these identities being exact, not approximate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, ShapeError


@dataclass(frozen=True)
class HyperParams:
    """eta: learning rate; rho: elastic rate; mu: momentum rate.

    Nothing in the update rules normalizes by worker count, so the
    synchronous full-sum center step is stable only when eta*rho*P < 1.
    """

    eta: float = 0.01
    rho: float = 0.1
    mu: float = 0.9

    def __post_init__(self):
        if self.eta <= 0:
            raise InputError(f"eta must be > 0, got {self.eta}")
        if self.rho < 0:
            raise InputError(f"rho must be >= 0, got {self.rho}")
        if not 0 <= self.mu < 1:
            raise InputError(f"mu must be in [0, 1), got {self.mu}")


@dataclass
class WorkerState:
    """One worker's local weights and momentum buffer."""

    weights: np.ndarray
    velocity: np.ndarray
    worker_id: int

    @classmethod
    def fresh(cls, init: np.ndarray, worker_id: int) -> "WorkerState":
        return cls(init.copy(), np.zeros_like(init), worker_id)


@dataclass
class CenterState:
    """The master's center (global) weights."""

    weights: np.ndarray

    @classmethod
    def fresh(cls, init: np.ndarray) -> "CenterState":
        return cls(init.copy())


def _check_lengths(*bufs: np.ndarray) -> None:
    sizes = {b.shape for b in bufs}
    if len(sizes) > 1:
        raise ShapeError(f"buffer shape mismatch: {sorted(sizes)}")


def sgd_step(w: np.ndarray, grad: np.ndarray, eta: float) -> np.ndarray:
    """W' = W - eta * grad."""
    _check_lengths(w, grad)
    return w - eta * grad


def msgd_step(w: np.ndarray, v: np.ndarray, grad: np.ndarray, eta: float, mu: float
              ) -> tuple[np.ndarray, np.ndarray]:
    """V' = mu*V - eta*grad;  W' = W + V'."""
    _check_lengths(w, v, grad)
    v_new = mu * v - eta * grad
    return w + v_new, v_new


def easgd_worker_step(w: np.ndarray, grad: np.ndarray, center: np.ndarray,
                      eta: float, rho: float) -> np.ndarray:
    """W' = W - eta*(grad + rho*(W - center)).

    ``center`` must be the snapshot exchanged this round: the rule reads both
    W and the center before either side writes.
    """
    _check_lengths(w, grad, center)
    return (w - eta * grad) - (eta * rho) * (w - center)


def easgd_center_step(center: np.ndarray, worker_snapshots, eta: float, rho: float
                      ) -> np.ndarray:
    """Full-sum center update: C' = C + eta * sum_i rho*(W_i - C).

    All snapshots must come from the same logical round as ``center``.
    """
    snapshots = list(worker_snapshots)
    if not snapshots:
        raise InputError("easgd_center_step needs at least one worker snapshot")
    for s in snapshots:
        _check_lengths(center, s)
    total = np.zeros_like(center)
    for s in snapshots:  # fixed worker order
        total += s - center
    return center + (eta * rho) * total


def easgd_center_step_from_sum(center: np.ndarray, weight_sum: np.ndarray,
                               num_workers: int, eta: float, rho: float) -> np.ndarray:
    """Full-sum center update given the pre-reduced sum of worker weights."""
    _check_lengths(center, weight_sum)
    if num_workers < 1:
        raise InputError("num_workers must be >= 1")
    return center + (eta * rho) * (weight_sum - num_workers * center)


def easgd_center_incremental(center: np.ndarray, worker: np.ndarray,
                             eta: float, rho: float) -> np.ndarray:
    """Single-worker center update: C' = C + eta*rho*(W_j - C).

    This is the form used by the round-robin and asynchronous schedules; the
    full-sum form equals a sequence of these only when every term reuses the
    same center snapshot.
    """
    _check_lengths(center, worker)
    return center + (eta * rho) * (worker - center)


def measgd_worker_step(w: np.ndarray, v: np.ndarray, grad: np.ndarray,
                       center: np.ndarray, eta: float, mu: float, rho: float
                       ) -> tuple[np.ndarray, np.ndarray]:
    """V' = mu*V - eta*grad;  W' = W + V' - eta*rho*(W - center)."""
    _check_lengths(w, v, grad, center)
    v_new = mu * v - eta * grad
    return (w + v_new) - (eta * rho) * (w - center), v_new


def step_decay(eta0: float, drop: float, every: int):
    """Learning-rate hook: eta(t) = eta0 * drop**(t // every).

    Provided for experimentation; the stock trainers run a constant rate.
    """
    if not 0 < drop <= 1 or every < 1:
        raise InputError("need 0 < drop <= 1 and every >= 1")

    def schedule(t: int) -> float:
        return eta0 * drop ** (t // every)

    return schedule
