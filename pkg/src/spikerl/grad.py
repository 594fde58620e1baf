"""Reverse-mode gradients through the spiking actor's forward pass.

The backward pass walks the recorded trace from the last simulation step to
the first, applying these local rules:

* spike w.r.t. pre-reset voltage: rectangular surrogate window;
* hard reset: voltage passes (1 - spike), with the spike treated as a
  constant (detached reset);
* synaptic current and leaky-integrator recursions: their decay factors;
* recurrent population current: gradient flows from step t+1 drive back
  into step-t output spikes and into the (masked) recurrent weights;
* encoder: upstream spike gradients pass through to the stimulation
  strengths unchanged and sum over time, then chain analytically into the
  Gaussian receptive-field parameters;
* action clamp: passes gradient inside the bounds, blocks it outside.

Gradients are summed over the batch dimension.
"""

from __future__ import annotations

import numpy as np

from .actor import ForwardTrace, SpikingActorParams, intra_weight_mask, masked_intra
from .coding import LAYER, STAT_FR, STAT_LAST, STAT_MAX_ABS, STAT_MEAN, stimulate_grads
from .errors import ContractViolation

ActorGrads = dict[str, np.ndarray]


def zero_grads(params: SpikingActorParams) -> ActorGrads:
    return {name: np.zeros_like(arr) for name, arr in params.blocks().items()}


def backward(trace: ForwardTrace, params: SpikingActorParams,
             dl_da: np.ndarray) -> ActorGrads:
    """Gradients of a scalar loss w.r.t. every parameter block, given dL/da."""
    if trace is None:
        raise ContractViolation("backward requires a recorded forward trace")
    dl_da = np.asarray(dl_da, dtype=np.float64)
    if dl_da.ndim == 1:
        dl_da = dl_da[None, :]
    bsz, m_dim = trace.a.shape
    if dl_da.shape != (bsz, m_dim):
        raise ContractViolation(
            f"dL/da shape {dl_da.shape} does not match actions {(bsz, m_dim)}"
        )
    env, clif, dec, sur = params.env, params.clif, params.decoder, params.sur
    t_len, p_out = params.t_len, params.p_out
    n_layers = len(params.weights)
    grads = zero_grads(params)
    w_eff, _ = masked_intra(params)
    keep = intra_weight_mask(p_out, params.intra_mask)

    # clamp gate
    if params.clamp_action:
        inside = (trace.a_raw >= env.action_low) & (trace.a_raw <= env.action_high)
        g_raw = dl_da * inside
    else:
        g_raw = dl_da.copy()

    pops = [trace.spikes[t][n_layers - 1].reshape(bsz, m_dim, p_out) for t in range(t_len)]

    # decoder statistic -> adjoint on each step's decoder drive (LI stats), or
    # directly on the population spikes (firing-rate decoding)
    gx = np.zeros((t_len, bsz, m_dim))
    g_pops_dec = np.zeros((t_len, bsz, m_dim, p_out))
    if dec.stat == STAT_FR:
        rates = np.mean(np.stack(pops, axis=0), axis=0)
        grads["dec_w"] += np.einsum("bm,bmp->mp", g_raw, rates)
        grads["dec_b"] += g_raw.sum(axis=0)
        g_pops_dec += np.einsum("bm,mp->bmp", g_raw, params.dec_w)[None, ...] / t_len
    else:
        gstat = np.zeros((t_len, bsz, m_dim))
        if dec.stat == STAT_LAST:
            gstat[t_len - 1] = g_raw
        elif dec.stat == STAT_MEAN:
            gstat[:] = g_raw[None, ...] / t_len
        elif dec.stat == STAT_MAX_ABS:
            idx = np.argmax(np.abs(trace.li_v), axis=0)
            np.put_along_axis(gstat, idx[None, :, :], g_raw[None, :, :], axis=0)
        carry = np.zeros((bsz, m_dim))
        for t in range(t_len - 1, -1, -1):
            carry = gstat[t] + carry
            gx[t] = carry
            carry = dec.alpha_v_li * carry
        for t in range(t_len):
            grads["dec_w"] += np.einsum("bm,bmp->mp", gx[t], pops[t])
            grads["dec_b"] += gx[t].sum(axis=0)
            g_pops_dec[t] += np.einsum("bm,mp->bmp", gx[t], params.dec_w)

    # backbone BPTT
    widths = [w.shape[0] for w in params.weights]
    carry_c = [np.zeros((bsz, w)) for w in widths]
    carry_v = [np.zeros((bsz, w)) for w in widths]
    g_intra_next: np.ndarray | None = None  # adjoint on I_{t+1}, set while at step t+1
    g_ae_flat = np.zeros_like(trace.raster[0])

    for t in range(t_len - 1, -1, -1):
        g_spk = g_pops_dec[t].reshape(bsz, m_dim * p_out)
        if g_intra_next is not None:
            gi = g_intra_next.reshape(bsz, m_dim, p_out)
            grads["intra_w"] += np.einsum("bmo,bmp->mop", gi, pops[t]) * keep
            if "bias" in params.intra_mask:
                grads["intra_b"] += gi.sum(axis=0)
            g_spk = g_spk + np.einsum("bmo,mop->bmp", gi, w_eff).reshape(bsz, m_dim * p_out)
            g_intra_next = None
        for layer in range(n_layers - 1, -1, -1):
            spikes = trace.spikes[t][layer]
            h = trace.h[t][layer]
            sur_factor = (np.abs(h - clif.v_th) < sur.w).astype(np.float64)
            g_h = g_spk * sur_factor + carry_v[layer] * (1.0 - spikes)
            g_c = g_h + carry_c[layer]
            carry_v[layer] = clif.alpha_v * g_h
            carry_c[layer] = clif.alpha_c * g_c
            inp = trace.raster[t] if layer == 0 else trace.spikes[t][layer - 1]
            grads[f"w{layer}"] += g_c.T @ inp
            grads[f"b{layer}"] += g_c.sum(axis=0)
            if layer == n_layers - 1 and t != 0:
                g_intra_next = g_c
            g_spk = g_c @ params.weights[layer]
        g_ae_flat += g_spk

    # encoder parameters (pass-through for spikes, analytic Gaussian chain)
    if params.encoder.mode != LAYER:
        g_ae = g_ae_flat.reshape(bsz, env.n, params.encoder.p_in)
        g_mu, g_sigma = stimulate_grads(trace.s, params.encoder, g_ae, a_e=trace.a_e)
        grads["enc_mu"] += g_mu
        grads["enc_sigma"] += g_sigma
    return grads


def finite_diff(loss_fn, params, block: str, eps: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of ``loss_fn()`` w.r.t. one named block.

    ``params`` must expose ``blocks()`` returning live arrays; the block is
    perturbed in place and restored. ``loss_fn`` takes no arguments.
    """
    if eps <= 0:
        raise ContractViolation("finite_diff needs eps > 0")
    arr = params.blocks()[block]
    flat = arr.ravel()
    grad = np.zeros_like(arr)
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        f_plus = loss_fn()
        flat[i] = orig - eps
        f_minus = loss_fn()
        flat[i] = orig
        gflat[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    """Max elementwise |a-b| / max(|a|, |b|, 1): relative above unit scale,
    absolute below it."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b) / denom))


def max_rel_err(a: ActorGrads, b: ActorGrads) -> float:
    return max(rel_err(a[k], b[k]) for k in a)
