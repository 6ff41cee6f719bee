"""Dense-tensor kernel: forward ops, gradient storage, SGD, and a
finite-difference gradient oracle.

Tensors are plain float64 numpy arrays.  Gradients accumulate additively
into a :class:`ParamStore` and are zeroed by :func:`sgd_step`; nothing here
builds a computation graph.
"""

from __future__ import annotations

from typing import Callable, Iterator

import numpy as np

__all__ = [
    "ParamStore",
    "as_tensor",
    "softmax",
    "softmax_backward",
    "sigmoid",
    "log_sigmoid",
    "affine",
    "sgd_step",
    "finite_diff_check",
]


def as_tensor(values, shape=None) -> np.ndarray:
    """Convert to a float64 array, optionally reshaping, rejecting non-finite values."""
    arr = np.asarray(values, dtype=np.float64)
    if shape is not None:
        arr = arr.reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains NaN or infinity")
    return arr


class ParamStore:
    """Named trainable tensors, each paired with an accumulated gradient."""

    def __init__(self):
        self._values: dict[str, np.ndarray] = {}
        self._grads: dict[str, np.ndarray] = {}

    def add(self, name: str, value) -> np.ndarray:
        if name in self._values:
            raise ValueError(f"duplicate parameter name: {name!r}")
        arr = as_tensor(value)
        self._values[name] = arr
        self._grads[name] = np.zeros_like(arr)
        return arr

    def value(self, name: str) -> np.ndarray:
        return self._values[name]

    def grad(self, name: str) -> np.ndarray:
        return self._grads[name]

    def names(self) -> list[str]:
        return list(self._values)

    def items(self) -> Iterator[tuple[str, np.ndarray, np.ndarray]]:
        for name, value in self._values.items():
            yield name, value, self._grads[name]

    def zero_grads(self) -> None:
        for grad in self._grads.values():
            grad[...] = 0.0

    def __contains__(self, name: str) -> bool:
        return name in self._values

    def __len__(self) -> int:
        return len(self._values)


def softmax(v) -> np.ndarray:
    """Stable softmax of a rank-1 tensor (max-subtraction before exp)."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("softmax expects a nonempty rank-1 tensor")
    shifted = arr - arr.max()
    exps = np.exp(shifted)
    out = exps / exps.sum()
    return out


def softmax_backward(output: np.ndarray, grad_output: np.ndarray) -> np.ndarray:
    """Vector-Jacobian product of softmax given its output and upstream grad."""
    return output * (grad_output - float(np.dot(grad_output, output)))


def sigmoid(x):
    """Numerically stable logistic function; accepts scalars or arrays."""
    arr = np.asarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    expx = np.exp(arr[~pos])
    out[~pos] = expx / (1.0 + expx)
    if out.ndim == 0:
        return float(out)
    return out


def log_sigmoid(x):
    """log(sigmoid(x)) without overflow for large negative x."""
    arr = np.asarray(x, dtype=np.float64)
    out = -np.logaddexp(0.0, -arr)
    if out.ndim == 0:
        return float(out)
    return out


def affine(W: np.ndarray, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """W @ x + b with shape validation."""
    W = np.asarray(W, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if W.ndim != 2 or x.ndim != 1 or b.ndim != 1:
        raise ValueError("affine expects W rank-2, x rank-1, b rank-1")
    if W.shape[1] != x.shape[0] or W.shape[0] != b.shape[0]:
        raise ValueError(
            f"affine shape mismatch: W {W.shape}, x {x.shape}, b {b.shape}"
        )
    out = W @ x + b
    if not np.all(np.isfinite(out)):
        raise ValueError("affine produced a non-finite value")
    return out


def sgd_step(params: ParamStore, lr: float) -> None:
    """value <- value - lr * grad for every entry, then zero all gradients."""
    if not lr > 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    for _, value, grad in params.items():
        value -= lr * grad
    params.zero_grads()


def finite_diff_check(
    loss: Callable[[ParamStore], float],
    params: ParamStore,
    eps: float = 1e-5,
) -> float:
    """Compare the analytic gradients stored in ``params`` against central
    differences of ``loss``.

    ``loss`` must be deterministic given the parameter values and must not
    touch the stored gradients.  Returns the max over all elements of
    ``|analytic - numeric| / max(1e-8, |numeric|)``.
    """
    if not (1e-7 <= eps <= 1e-3):
        raise ValueError(f"eps must lie in [1e-7, 1e-3], got {eps}")
    worst = 0.0
    for _, value, grad in params.items():
        flat = value.reshape(-1)
        gflat = grad.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            up = loss(params)
            flat[idx] = orig - eps
            down = loss(params)
            flat[idx] = orig
            numeric = (up - down) / (2.0 * eps)
            rel = abs(gflat[idx] - numeric) / max(1e-8, abs(numeric))
            if rel > worst:
                worst = rel
    return worst
