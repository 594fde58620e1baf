"""Dense float64 array primitives: seeded random streams, affine maps, Adam.

All arrays are float64 throughout so that gradient-oracle comparisons are
never confounded by precision differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fnv1a64(text: str) -> int:
    """64-bit FNV-1a over UTF-8 bytes; stable across platforms and sessions."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


class RngStream:
    """Independent random stream, keyed by (seed, stream label).

    Backed by the counter-based Philox generator so that identical
    (seed, stream, draw sequence) reproduces identical values everywhere.
    """

    def __init__(self, seed: int, stream: str):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream = stream
        key = np.array([self.seed, _fnv1a64(stream)], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size=size)

    def normal(self, scale: float = 1.0, size=None) -> np.ndarray:
        return self._gen.normal(0.0, scale, size=size)

    def integers(self, high: int, size=None) -> np.ndarray:
        return self._gen.integers(0, high, size=size)

    def child(self, label: str) -> "RngStream":
        """Derive an independent stream for a sub-consumer."""
        return RngStream(self.seed, f"{self.stream}/{label}")


def affine(w: np.ndarray, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """y = W x + b for a single vector x. Raises on non-conforming shapes."""
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if w.ndim != 2 or x.ndim != 1 or b.ndim != 1:
        raise ContractViolation(
            f"affine expects W 2-D, x 1-D, b 1-D; got {w.ndim}-D, {x.ndim}-D, {b.ndim}-D"
        )
    if w.shape[1] != x.shape[0] or w.shape[0] != b.shape[0]:
        raise ContractViolation(
            f"affine shape mismatch: W {w.shape}, x {x.shape}, b {b.shape}"
        )
    y = w @ x + b
    if not np.all(np.isfinite(y)):
        raise ContractViolation("affine produced non-finite output")
    return y


def init_linear(fan_in: int, fan_out: int, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """Uniform fan-in initialization: entries on [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    if fan_in < 1 or fan_out < 1:
        raise ContractViolation(f"init_linear needs fan_in, fan_out >= 1; got {fan_in}, {fan_out}")
    bound = 1.0 / np.sqrt(fan_in)
    w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
    b = rng.uniform(-bound, bound, size=(fan_out,))
    return w, b


@dataclass
class AdamState:
    """Per-block Adam moments. ``step`` counts completed updates."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_param(cls, param: np.ndarray, beta1: float = 0.9, beta2: float = 0.999,
                  eps: float = 1e-8) -> "AdamState":
        return cls(m=np.zeros_like(param), v=np.zeros_like(param),
                   step=0, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState, lr: float,
              block: str = "param") -> tuple[np.ndarray, AdamState]:
    """One Adam update with bias correction. Returns fresh (param', state')."""
    if param.shape != grad.shape or param.shape != state.m.shape:
        raise ContractViolation(
            f"adam_step shape mismatch for '{block}': param {param.shape}, "
            f"grad {grad.shape}, moments {state.m.shape}"
        )
    if not np.all(np.isfinite(grad)):
        raise ContractViolation(f"non-finite gradient entry in block '{block}'")
    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1 ** step)
    v_hat = v / (1.0 - state.beta2 ** step)
    new_param = param - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = AdamState(m=m, v=v, step=step, beta1=state.beta1,
                          beta2=state.beta2, eps=state.eps)
    return new_param, new_state


@dataclass
class AdamOptimizer:
    """Adam over a dict of named parameter blocks, updated in lockstep."""

    lr: float
    states: dict[str, AdamState] = field(default_factory=dict)

    def update(self, params: dict[str, np.ndarray],
               grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        out = {}
        for name, p in params.items():
            g = grads[name]
            st = self.states.get(name)
            if st is None:
                st = AdamState.for_param(p)
            out[name], self.states[name] = adam_step(p, g, st, self.lr, block=name)
        return out


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    """Scale all blocks jointly so the global L2 norm is at most ``max_norm``."""
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total <= max_norm or total == 0.0:
        return grads
    scale = max_norm / total
    return {k: g * scale for k, g in grads.items()}
