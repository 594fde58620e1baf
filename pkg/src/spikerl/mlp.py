"""Plain dense ReLU networks with hand-rolled backprop.

Used for the deep critic and the dense baseline actor. Inputs may be a
single vector (D,) or a batch (B, D); gradients are summed over the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .numerics import RngStream, init_linear


@dataclass
class MlpParams:
    """Stacked affine layers; ReLU between them, linear output."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def blocks(self, prefix: str = "") -> dict[str, np.ndarray]:
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{prefix}w{i}"] = w
            out[f"{prefix}b{i}"] = b
        return out

    def set_blocks(self, blocks: dict[str, np.ndarray], prefix: str = "") -> None:
        for i in range(len(self.weights)):
            self.weights[i] = blocks[f"{prefix}w{i}"]
            self.biases[i] = blocks[f"{prefix}b{i}"]

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass
class MlpCache:
    inputs: list[np.ndarray]        # activation entering each layer
    relu_masks: list[np.ndarray]    # post-affine positives, hidden layers only


def mlp_init(dims: list[int], rng: RngStream) -> MlpParams:
    weights, biases = [], []
    for i in range(len(dims) - 1):
        w, b = init_linear(dims[i], dims[i + 1], rng.child(f"layer{i}"))
        weights.append(w)
        biases.append(b)
    return MlpParams(weights, biases)


def mlp_forward(x: np.ndarray, params: MlpParams) -> np.ndarray:
    y, _ = mlp_forward_cache(x, params, need_cache=False)
    return y


def mlp_forward_cache(x: np.ndarray, params: MlpParams,
                      need_cache: bool = True) -> tuple[np.ndarray, MlpCache | None]:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.weights[0].shape[1]:
        raise ContractViolation(
            f"mlp input width {x.shape[-1]} != expected {params.weights[0].shape[1]}"
        )
    cache = MlpCache(inputs=[], relu_masks=[]) if need_cache else None
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        if cache is not None:
            cache.inputs.append(h)
        h = h @ w.T + b
        if i < last:
            mask = h > 0.0
            if cache is not None:
                cache.relu_masks.append(mask)
            h = h * mask
    return h, cache


def mlp_backward(cache: MlpCache, params: MlpParams,
                 gy: np.ndarray) -> tuple[dict[str, np.ndarray], np.ndarray]:
    """Backprop an output adjoint; returns ({w_i, b_i} grads, input adjoint)."""
    grads: dict[str, np.ndarray] = {}
    g = np.asarray(gy, dtype=np.float64)
    last = len(params.weights) - 1
    for i in range(last, -1, -1):
        if i < last:
            g = g * cache.relu_masks[i]
        x_in = cache.inputs[i]
        if g.ndim == 1:
            grads[f"w{i}"] = np.outer(g, x_in)
            grads[f"b{i}"] = g.copy()
        else:
            grads[f"w{i}"] = g.T @ x_in
            grads[f"b{i}"] = g.sum(axis=0)
        g = g @ params.weights[i]
    return grads, g
