"""Discrete-time spiking (IF/LIF/CLIF) and non-spiking (Integrate/LI) neuron layers.

Every operation is elementwise over an array of neurons, so the same code
drives a single layer, a batch of layers, or a batched forward pass. Spike
outputs are float arrays containing exactly 0.0 or 1.0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractViolation

HARD_RESET = "hard"
SOFT_RESET = "soft"


@dataclass
class SpikingConfig:
    """Threshold, reset and decay constants of one spiking layer.

    ``alpha_c`` is present only for current-based (CLIF) neurons; plain
    IF/LIF layers leave it as None. ``alpha_v`` = 1 gives the IF neuron.
    """

    v_th: float = 0.5
    v_reset: float = 0.0
    alpha_v: float = 0.75
    reset_mode: str = HARD_RESET
    alpha_c: float | None = 0.5

    def __post_init__(self):
        if not (0.0 < self.alpha_v <= 1.0):
            raise ConfigError(f"alpha_v must be in (0, 1], got {self.alpha_v}")
        if self.alpha_c is not None and not (0.0 < self.alpha_c <= 1.0):
            raise ConfigError(f"alpha_c must be in (0, 1], got {self.alpha_c}")
        if self.reset_mode not in (HARD_RESET, SOFT_RESET):
            raise ConfigError(f"unknown reset mode {self.reset_mode!r}")
        if self.reset_mode == HARD_RESET and not self.v_th > self.v_reset:
            raise ConfigError(
                f"hard reset requires v_th > v_reset, got {self.v_th} <= {self.v_reset}"
            )


@dataclass
class SurrogateConfig:
    """Rectangular window of width ``w`` around the threshold for the backward pass."""

    w: float = 0.5

    def __post_init__(self):
        if not self.w > 0:
            raise ConfigError(f"surrogate window must be positive, got {self.w}")


@dataclass
class NeuronLayerState:
    """Membrane voltage, optional synaptic current, and last spikes of one layer."""

    v: np.ndarray
    c: np.ndarray | None = None
    last_spikes: np.ndarray = field(default=None)  # type: ignore[assignment]

    @classmethod
    def fresh(cls, shape, cfg: SpikingConfig, with_current: bool = False) -> "NeuronLayerState":
        v = np.full(shape, cfg.v_reset, dtype=np.float64)
        c = np.zeros(shape, dtype=np.float64) if (with_current or cfg.alpha_c is not None) else None
        return cls(v=v, c=c, last_spikes=np.zeros(shape, dtype=np.float64))


def charge(state: NeuronLayerState, x: np.ndarray, cfg: SpikingConfig) -> np.ndarray:
    """Subthreshold update: h = alpha_v * (v - v_reset) + v_reset + x."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != state.v.shape:
        raise ContractViolation(f"charge input shape {x.shape} != state shape {state.v.shape}")
    return cfg.alpha_v * (state.v - cfg.v_reset) + cfg.v_reset + x


def fire(h: np.ndarray, v_th: float) -> np.ndarray:
    """Heaviside spike generation: 1.0 where h >= v_th, else 0.0."""
    return (np.asarray(h, dtype=np.float64) >= v_th).astype(np.float64)


def reset(h: np.ndarray, s: np.ndarray, cfg: SpikingConfig) -> np.ndarray:
    """Post-spike voltage: hard sets spiking neurons to v_reset, soft subtracts v_th."""
    if cfg.reset_mode == HARD_RESET:
        return h * (1.0 - s) + cfg.v_reset * s
    return h - cfg.v_th * s


def step_clif(state: NeuronLayerState, synaptic_drive: np.ndarray,
              cfg: SpikingConfig) -> tuple[np.ndarray, NeuronLayerState]:
    """One step of a current-based LIF layer given its summed synaptic drive.

    The drive is the affine result W s + b (plus any recurrent current); it
    first charges the synaptic current, which then charges the voltage.
    """
    if cfg.alpha_c is None:
        raise ContractViolation("step_clif requires a config with alpha_c")
    if state.c is None:
        raise ContractViolation("step_clif requires a state carrying a current array")
    c = cfg.alpha_c * state.c + np.asarray(synaptic_drive, dtype=np.float64)
    h = cfg.alpha_v * (state.v - cfg.v_reset) + cfg.v_reset + c
    s = fire(h, cfg.v_th)
    v = h * (1.0 - s) + cfg.v_reset * s
    return s, NeuronLayerState(v=v, c=c, last_spikes=s)


def step_li(state: NeuronLayerState, x: np.ndarray, cfg: SpikingConfig) -> np.ndarray:
    """One step of a non-spiking leaky-integrate layer; returns the new voltage."""
    return cfg.alpha_v * (state.v - cfg.v_reset) + cfg.v_reset + np.asarray(x, dtype=np.float64)


def surrogate_grad(h, v_th: float, sur: SurrogateConfig):
    """Rectangular pseudo-derivative of the spike w.r.t. pre-reset voltage."""
    return (np.abs(np.asarray(h, dtype=np.float64) - v_th) < sur.w).astype(np.float64)
