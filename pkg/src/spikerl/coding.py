"""State-to-spike-train encoders and spike-train-to-value decoders.

Three encoder modes share one container:

* ``pop_det``  -- Gaussian receptive fields drive soft-reset IF neurons; the
  output is a binary raster. This is the only mode whose downstream network
  sees pure spike input.
* ``pop``      -- the Gaussian stimulation strengths are fed directly as an
  analog drive, repeated at every step.
* ``layer``    -- the raw state is fed directly, repeated at every step.

Decoders read either a non-spiking neuron's voltage trace (last / max-abs /
mean statistic) or a spike raster's firing rates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractViolation

POP_DET = "pop_det"
POP = "pop"
LAYER = "layer"

STAT_LAST = "last"
STAT_MAX_ABS = "max_abs"
STAT_MEAN = "mean"
STAT_FR = "fr"

# The encoder integrates the same stimulation value T times; this slack keeps
# the spike count equal to exact-arithmetic accumulation despite float64
# rounding of the running sum.
ENCODER_FIRE_TOL = 1e-12


@dataclass
class EncoderParams:
    """Trainable Gaussian receptive fields plus the encoder neuron threshold."""

    mu: np.ndarray        # (N, P_in)
    sigma: np.ndarray     # (N, P_in), strictly positive
    p_in: int
    enc_v_th: float = 1.0
    mode: str = POP_DET

    def __post_init__(self):
        if self.mode not in (POP_DET, POP, LAYER):
            raise ConfigError(f"unknown encoder mode {self.mode!r}")
        if self.mode != LAYER:
            self.mu = np.asarray(self.mu, dtype=np.float64)
            self.sigma = np.asarray(self.sigma, dtype=np.float64)
            if self.mu.shape != self.sigma.shape:
                raise ConfigError("mu and sigma must share a shape")
            if self.p_in < 1:
                raise ConfigError("p_in must be >= 1")
            if np.any(self.sigma <= 0):
                raise ConfigError("sigma entries must be strictly positive")

    @property
    def n(self) -> int:
        return self.mu.shape[0] if self.mode != LAYER else -1

    def out_width(self, n_state: int) -> int:
        return n_state if self.mode == LAYER else n_state * self.p_in


def default_encoder(n: int, p_in: int, mode: str = POP_DET,
                    enc_v_th: float = 1.0, span: float = 3.0) -> EncoderParams:
    """Receptive fields evenly spaced on [-span, span], widths equal to the spacing."""
    if mode == LAYER:
        return EncoderParams(mu=np.zeros((n, 1)), sigma=np.ones((n, 1)),
                             p_in=1, enc_v_th=enc_v_th, mode=mode)
    if p_in == 1:
        centers = np.zeros(1)
        width = 1.0
    else:
        centers = np.linspace(-span, span, p_in)
        width = centers[1] - centers[0]
    mu = np.tile(centers, (n, 1))
    sigma = np.full((n, p_in), width, dtype=np.float64)
    return EncoderParams(mu=mu, sigma=sigma, p_in=p_in, enc_v_th=enc_v_th, mode=mode)


@dataclass
class SpikeTrain:
    """Raster of shape (D, T); binary for pop_det, real-valued analog drive otherwise."""

    spikes: np.ndarray
    t_len: int


@dataclass
class DecoderConfig:
    """Readout statistic plus the non-spiking neuron's decay and reset."""

    stat: str = STAT_LAST
    alpha_v_li: float = 1.0
    v_reset_li: float = 0.0

    def __post_init__(self):
        if self.stat not in (STAT_LAST, STAT_MAX_ABS, STAT_MEAN, STAT_FR):
            raise ConfigError(f"unknown decoder statistic {self.stat!r}")
        if not (0.0 < self.alpha_v_li <= 1.0):
            raise ConfigError(f"alpha_v_li must be in (0, 1], got {self.alpha_v_li}")


def stimulate(s: np.ndarray, enc: EncoderParams) -> np.ndarray:
    """Gaussian response of each receptive field; output in (0, 1].

    Accepts a single state (N,) giving (N, P_in), or a batch (B, N) giving
    (B, N, P_in).
    """
    if enc.mode == LAYER:
        raise ContractViolation("stimulate is undefined for the layer encoder")
    s = np.asarray(s, dtype=np.float64)
    z = (s[..., None] - enc.mu) / enc.sigma
    return np.exp(-0.5 * z * z)


def stimulate_grads(s: np.ndarray, enc: EncoderParams, g_ae: np.ndarray,
                    a_e: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Chain an upstream gradient on the stimulation strengths into (mu, sigma).

    Batch dimensions of ``g_ae`` are summed out, so the result always matches
    the (N, P_in) parameter shapes.
    """
    s = np.asarray(s, dtype=np.float64)
    if a_e is None:
        a_e = stimulate(s, enc)
    diff = s[..., None] - enc.mu
    g_mu = g_ae * a_e * diff / (enc.sigma ** 2)
    g_sigma = g_ae * a_e * diff ** 2 / (enc.sigma ** 3)
    while g_mu.ndim > 2:
        g_mu = g_mu.sum(axis=0)
        g_sigma = g_sigma.sum(axis=0)
    return g_mu, g_sigma


def encode_raster(s: np.ndarray, enc: EncoderParams, t_len: int) -> tuple[np.ndarray, np.ndarray | None]:
    """Batched encoder core: returns (raster (T, B, D), stimulation (B, N, P_in) or None).

    ``s`` must be 2-D (B, N). The pop_det raster is produced by soft-reset IF
    neurons under constant drive; pop/layer rasters repeat their analog drive.
    """
    if t_len < 1:
        raise ContractViolation(f"t_len must be >= 1, got {t_len}")
    s = np.asarray(s, dtype=np.float64)
    bsz, n = s.shape
    if enc.mode == LAYER:
        return np.broadcast_to(s, (t_len, bsz, n)).copy(), None
    a_e = stimulate(s, enc)
    flat = a_e.reshape(bsz, n * enc.p_in)
    if enc.mode == POP:
        return np.broadcast_to(flat, (t_len, bsz, flat.shape[1])).copy(), a_e
    raster = np.empty((t_len, bsz, flat.shape[1]), dtype=np.float64)
    v = np.zeros_like(flat)
    threshold = enc.enc_v_th - ENCODER_FIRE_TOL
    for t in range(t_len):
        v = v + flat
        spikes = (v >= threshold).astype(np.float64)
        v = v - enc.enc_v_th * spikes
        raster[t] = spikes
    return raster, a_e


def encode(s: np.ndarray, enc: EncoderParams, t_len: int) -> SpikeTrain:
    """Encode one state vector into a (D, T) spike train."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1:
        raise ContractViolation(f"encode expects a 1-D state, got shape {s.shape}")
    raster, _ = encode_raster(s[None, :], enc, t_len)
    return SpikeTrain(spikes=raster[:, 0, :].T.copy(), t_len=t_len)


def encoder_grad_passthrough(upstream: np.ndarray) -> np.ndarray:
    """Gradient through the deterministic encoder: each spike passes 1 to its
    stimulation strength, so upstream gradients simply sum over time.

    ``upstream`` has time as its trailing axis, (D, T) or (B, D, T).
    """
    return np.asarray(upstream, dtype=np.float64).sum(axis=-1)


def decode_voltage(v_trace: np.ndarray, cfg: DecoderConfig) -> float:
    """Collapse a non-spiking neuron's voltage trace into one value."""
    v_trace = np.asarray(v_trace, dtype=np.float64)
    if v_trace.size == 0:
        raise ContractViolation("decode_voltage on an empty trace")
    if cfg.stat == STAT_LAST:
        return float(v_trace[-1])
    if cfg.stat == STAT_MAX_ABS:
        return float(v_trace[int(np.argmax(np.abs(v_trace)))])
    if cfg.stat == STAT_MEAN:
        return float(np.mean(v_trace))
    raise ContractViolation(f"decode_voltage undefined for stat {cfg.stat!r}")


def decode_fr(spike_raster: np.ndarray, w_d: np.ndarray, b_d: float) -> float:
    """Firing-rate readout: affine map of per-neuron spike counts / T."""
    spike_raster = np.asarray(spike_raster, dtype=np.float64)
    rates = spike_raster.mean(axis=-1)
    return float(np.dot(w_d, rates) + b_d)


def run_li_decoder(x_seq: np.ndarray, cfg: DecoderConfig) -> np.ndarray:
    """Voltage trace of a non-spiking neuron driven by inputs x_1..x_T.

    ``x_seq`` has time first; the returned trace has the same shape.
    """
    x_seq = np.asarray(x_seq, dtype=np.float64)
    out = np.empty_like(x_seq)
    v = np.full(x_seq.shape[1:], cfg.v_reset_li, dtype=np.float64)
    for t in range(x_seq.shape[0]):
        v = cfg.alpha_v_li * (v - cfg.v_reset_li) + cfg.v_reset_li + x_seq[t]
        out[t] = v
    return out
