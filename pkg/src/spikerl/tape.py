"""Scalar-level recorded-graph oracle for gradient verification.

``tape_forward`` re-executes the spiking actor's forward pass one scalar
primitive at a time, recording every operation with its local partial
derivatives. ``oracle_backward`` then runs a mechanical reverse sweep over
the record. The result is an independent cross-check for the vectorized
backward pass: same local derivative rules, completely different code path.

Intended for tiny networks; the cost is one Python-level node per scalar
operation.
"""

from __future__ import annotations

import numpy as np

from .actor import INTRA_BIAS, INTRA_LATERAL, INTRA_SELF, SpikingActorParams
from .coding import (
    ENCODER_FIRE_TOL,
    LAYER,
    POP,
    POP_DET,
    STAT_FR,
    STAT_LAST,
    STAT_MAX_ABS,
    STAT_MEAN,
)
from .errors import ContractViolation

PARAM = "param"
CONST = "const"
THETA = "theta"
HARD_RESET = "hard_reset"
ENC_SPIKE = "enc_spike"


class GraphTape:
    """Wengert list of scalar primitives with record-time local partials."""

    def __init__(self):
        self.values: list[float] = []
        self.parents: list[tuple[tuple[int, float], ...]] = []
        self.kinds: list[str] = []
        self.leaf_ref: dict[int, tuple[str, int]] = {}
        self.outputs: list[int] = []
        self.block_shapes: dict[str, tuple[int, ...]] = {}

    def _node(self, kind: str, value: float, parents=()) -> int:
        self.values.append(float(value))
        self.parents.append(tuple(parents))
        self.kinds.append(kind)
        return len(self.values) - 1

    def leaf(self, block: str, flat_index: int, value: float) -> int:
        node = self._node(PARAM, value)
        self.leaf_ref[node] = (block, flat_index)
        return node

    def const(self, value: float) -> int:
        return self._node(CONST, value)

    def add(self, a: int, b: int) -> int:
        return self._node("add", self.values[a] + self.values[b], ((a, 1.0), (b, 1.0)))

    def sub(self, a: int, b: int) -> int:
        return self._node("sub", self.values[a] - self.values[b], ((a, 1.0), (b, -1.0)))

    def mul(self, a: int, b: int) -> int:
        va, vb = self.values[a], self.values[b]
        return self._node("mul", va * vb, ((a, vb), (b, va)))

    def div(self, a: int, b: int) -> int:
        va, vb = self.values[a], self.values[b]
        return self._node("div", va / vb, ((a, 1.0 / vb), (b, -va / (vb * vb))))

    def exp(self, a: int) -> int:
        v = float(np.exp(self.values[a]))
        return self._node("exp", v, ((a, v),))

    def lincomb(self, terms: list[tuple[int, float]], constant: float) -> int:
        value = constant + sum(self.values[i] * k for i, k in terms)
        return self._node("lincomb", value, tuple((i, k) for i, k in terms))

    def dot(self, w_nodes, x_nodes, bias_node: int | None) -> int:
        """sum_i w_i * x_i (+ b); partials w.r.t. both factor vectors."""
        value = 0.0
        parents: list[tuple[int, float]] = []
        for wn, xn in zip(w_nodes, x_nodes):
            wv, xv = self.values[wn], self.values[xn]
            value += wv * xv
            parents.append((wn, xv))
            parents.append((xn, wv))
        if bias_node is not None:
            value += self.values[bias_node]
            parents.append((bias_node, 1.0))
        return self._node("dot", value, tuple(parents))

    def theta(self, h: int, v_th: float, window: float) -> int:
        hv = self.values[h]
        spike = 1.0 if hv >= v_th else 0.0
        partial = 1.0 if abs(hv - v_th) < window else 0.0
        return self._node(THETA, spike, ((h, partial),))

    def hard_reset(self, h: int, spike_value: float, v_reset: float) -> int:
        # the spike enters only as a recorded constant: detached reset
        hv = self.values[h]
        value = hv * (1.0 - spike_value) + v_reset * spike_value
        return self._node(HARD_RESET, value, ((h, 1.0 - spike_value),))

    def enc_spike(self, ae_node: int, spike_value: float) -> int:
        # deterministic-encoder spike: unit pass-through to its stimulation
        return self._node(ENC_SPIKE, spike_value, ((ae_node, 1.0),))

    def clamp(self, a: int, lo: float, hi: float) -> int:
        v = self.values[a]
        inside = 1.0 if lo <= v <= hi else 0.0
        return self._node("clamp", min(max(v, lo), hi), ((a, inside),))


def _leaf_array(tape: GraphTape, name: str, arr: np.ndarray) -> np.ndarray:
    nodes = np.empty(arr.size, dtype=np.int64)
    for i, v in enumerate(np.asarray(arr, dtype=np.float64).ravel()):
        nodes[i] = tape.leaf(name, i, v)
    tape.block_shapes[name] = arr.shape
    return nodes.reshape(arr.shape)


def tape_forward(s: np.ndarray, params: SpikingActorParams) -> GraphTape:
    """Record the full forward pass for one state on a fresh tape."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1 or s.shape[0] != params.env.n:
        raise ContractViolation(f"tape_forward expects one state of dim {params.env.n}")
    if params.obs_shift is not None:
        s = (s - params.obs_shift) / params.obs_scale
    tape = GraphTape()
    env, clif, dec, enc = params.env, params.clif, params.decoder, params.encoder
    t_len, p_out, m_dim = params.t_len, params.p_out, env.m
    nodes = {name: _leaf_array(tape, name, arr) for name, arr in params.blocks().items()}

    # encoder
    if enc.mode == LAYER:
        raster = [[tape.const(s[i]) for i in range(env.n)] for _ in range(t_len)]
    else:
        ae_nodes = []
        for i in range(env.n):
            s_node = tape.const(s[i])
            for j in range(enc.p_in):
                diff = tape.sub(s_node, nodes["enc_mu"][i, j])
                z = tape.div(diff, nodes["enc_sigma"][i, j])
                zz = tape.mul(z, z)
                arg = tape.lincomb([(zz, -0.5)], 0.0)
                ae_nodes.append(tape.exp(arg))
        if enc.mode == POP:
            raster = [list(ae_nodes) for _ in range(t_len)]
        elif enc.mode == POP_DET:
            raster = [[0] * len(ae_nodes) for _ in range(t_len)]
            threshold = enc.enc_v_th - ENCODER_FIRE_TOL
            for d, ae in enumerate(ae_nodes):
                v = 0.0
                for t in range(t_len):
                    v = v + tape.values[ae]
                    spike = 1.0 if v >= threshold else 0.0
                    v = v - enc.enc_v_th * spike
                    raster[t][d] = tape.enc_spike(ae, spike)
        else:
            raise ContractViolation(f"unsupported encoder mode {enc.mode!r}")

    n_layers = len(params.weights)
    widths = [w.shape[0] for w in params.weights]
    zero = tape.const(0.0)
    cur = [[zero] * w for w in widths]
    volt = [[tape.const(clif.v_reset)] * w for w in widths]
    intra_next: list[int] | None = None
    spike_hist: list[list[int]] = []   # last-layer spike nodes per step
    li_nodes: list[list[int]] = []     # per m, voltage node per step
    u_prev = [tape.const(dec.v_reset_li) for _ in range(m_dim)]
    use_li = dec.stat != STAT_FR

    for t in range(t_len):
        prev = raster[t]
        for layer in range(n_layers):
            w_nodes = nodes[f"w{layer}"]
            b_nodes = nodes[f"b{layer}"]
            new_spikes = []
            new_cur = []
            new_volt = []
            for i in range(widths[layer]):
                drive = tape.dot(w_nodes[i], prev, b_nodes[i])
                if layer == n_layers - 1 and t != 0:
                    drive = tape.add(drive, intra_next[i])
                c = tape.lincomb([(cur[layer][i], clif.alpha_c), (drive, 1.0)], 0.0)
                h = tape.lincomb([(volt[layer][i], clif.alpha_v), (c, 1.0)],
                                 clif.v_reset * (1.0 - clif.alpha_v))
                s_node = tape.theta(h, clif.v_th, params.sur.w)
                v_node = tape.hard_reset(h, tape.values[s_node], clif.v_reset)
                new_cur.append(c)
                new_volt.append(v_node)
                new_spikes.append(s_node)
            cur[layer] = new_cur
            volt[layer] = new_volt
            prev = new_spikes
        spike_hist.append(prev)
        if t != t_len - 1:
            intra_next = _intra_nodes(tape, nodes, params, prev)
        if use_li:
            li_step = []
            for m in range(m_dim):
                pop = prev[m * p_out:(m + 1) * p_out]
                x = tape.dot(nodes["dec_w"][m], pop, nodes["dec_b"][m])
                u = tape.lincomb([(u_prev[m], dec.alpha_v_li), (x, 1.0)],
                                 dec.v_reset_li * (1.0 - dec.alpha_v_li))
                u_prev[m] = u
                li_step.append(u)
            li_nodes.append(li_step)

    outputs = []
    for m in range(m_dim):
        if dec.stat == STAT_LAST:
            out = li_nodes[-1][m]
        elif dec.stat == STAT_MEAN:
            out = tape.lincomb([(li_nodes[t][m], 1.0 / t_len) for t in range(t_len)], 0.0)
        elif dec.stat == STAT_MAX_ABS:
            trace = [li_nodes[t][m] for t in range(t_len)]
            best = max(range(t_len), key=lambda t: (abs(tape.values[trace[t]]), -t))
            out = trace[best]
        elif dec.stat == STAT_FR:
            rates = [
                tape.lincomb(
                    [(spike_hist[t][m * p_out + k], 1.0 / t_len) for t in range(t_len)], 0.0)
                for k in range(p_out)
            ]
            out = tape.dot(nodes["dec_w"][m], rates, nodes["dec_b"][m])
        else:
            raise ContractViolation(f"unsupported decoder stat {dec.stat!r}")
        if params.clamp_action:
            out = tape.clamp(out, float(env.action_low[m]), float(env.action_high[m]))
        outputs.append(out)
    tape.outputs = outputs
    return tape


def _intra_nodes(tape: GraphTape, nodes, params: SpikingActorParams,
                 last_spikes: list[int]) -> list[int]:
    p_out, m_dim = params.p_out, params.env.m
    mask = params.intra_mask
    out: list[int] = []
    for m in range(m_dim):
        pop = last_spikes[m * p_out:(m + 1) * p_out]
        for o in range(p_out):
            w_sel, x_sel = [], []
            for p in range(p_out):
                keep = (INTRA_SELF in mask) if p == o else (INTRA_LATERAL in mask)
                if keep:
                    w_sel.append(nodes["intra_w"][m, o, p])
                    x_sel.append(pop[p])
            bias = nodes["intra_b"][m, o] if INTRA_BIAS in mask else None
            if not w_sel and bias is None:
                out.append(tape.const(0.0))
            else:
                out.append(tape.dot(w_sel, x_sel, bias))
    return out


def tape_output_values(tape: GraphTape) -> np.ndarray:
    return np.array([tape.values[i] for i in tape.outputs], dtype=np.float64)


def oracle_backward(tape: GraphTape, dl_da: np.ndarray) -> dict[str, np.ndarray]:
    """Mechanical reverse sweep over the recorded tape."""
    dl_da = np.asarray(dl_da, dtype=np.float64).reshape(-1)
    if dl_da.shape[0] != len(tape.outputs):
        raise ContractViolation(
            f"dL/da has {dl_da.shape[0]} entries for {len(tape.outputs)} outputs"
        )
    adjoint = np.zeros(len(tape.values))
    for g, node in zip(dl_da, tape.outputs):
        adjoint[node] += g
    for i in range(len(tape.values) - 1, -1, -1):
        a = adjoint[i]
        if a == 0.0:
            continue
        for parent, partial in tape.parents[i]:
            adjoint[parent] += a * partial
    grads = {name: np.zeros(shape) for name, shape in tape.block_shapes.items()}
    for node, (block, flat_index) in tape.leaf_ref.items():
        grads[block].ravel()[flat_index] += adjoint[node]
    return grads
