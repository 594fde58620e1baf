"""Population-coded spiking actor with recurrent output populations.

The actor maps a state to a bounded continuous action in four stages:

1. a population encoder turns each state dimension into spike trains;
2. a feed-forward backbone of current-based LIF layers propagates the
   spikes over T simulation steps, with the last layer also receiving a
   recurrent current from its own previous-step spikes (the intra-layer
   connections, applied per output population);
3. each output population drives one non-spiking leaky-integrate neuron;
4. a statistic of that neuron's voltage trace becomes the action value,
   clamped to the environment bounds.

A dense tanh-output baseline actor with the conventional architecture is
provided for performance and energy comparisons, plus checkpoint I/O for
both kinds.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import textdoc
from .coding import (
    LAYER,
    POP,
    POP_DET,
    STAT_FR,
    STAT_LAST,
    STAT_MAX_ABS,
    STAT_MEAN,
    DecoderConfig,
    EncoderParams,
    default_encoder,
    encode_raster,
)
from .errors import (
    CheckpointCorruptError,
    CheckpointShapeError,
    CheckpointVersionError,
    ConfigError,
    ContractViolation,
)
from .mlp import MlpParams, mlp_forward, mlp_init
from .neurons import SpikingConfig, SurrogateConfig
from .numerics import RngStream, init_linear

INTRA_SELF = "self"
INTRA_LATERAL = "lateral"
INTRA_BIAS = "bias"
FULL_INTRA_MASK = frozenset({INTRA_SELF, INTRA_LATERAL, INTRA_BIAS})

CHECKPOINT_VERSION = 1


@dataclass
class EnvSpec:
    """Dimensions and action bounds of a control task."""

    n: int
    m: int
    action_low: np.ndarray
    action_high: np.ndarray

    def __post_init__(self):
        self.action_low = np.asarray(self.action_low, dtype=np.float64).reshape(self.m)
        self.action_high = np.asarray(self.action_high, dtype=np.float64).reshape(self.m)
        if not np.all(self.action_low < self.action_high):
            raise ConfigError("action_low must be < action_high elementwise")


@dataclass
class SpikingActorParams:
    """Every trainable block of the spiking actor plus its fixed hyperparameters."""

    env: EnvSpec
    encoder: EncoderParams
    weights: list[np.ndarray]          # backbone, layer l maps width[l] -> width[l+1]
    biases: list[np.ndarray]
    clif: SpikingConfig
    sur: SurrogateConfig
    intra_w: np.ndarray                # (M, P_out, P_out)
    intra_b: np.ndarray                # (M, P_out)
    intra_mask: frozenset[str]
    dec_w: np.ndarray                  # (M, P_out)
    dec_b: np.ndarray                  # (M,)
    decoder: DecoderConfig
    t_len: int
    p_out: int
    clamp_action: bool = True
    obs_shift: np.ndarray | None = None
    obs_scale: np.ndarray | None = None

    def __post_init__(self):
        if len(self.weights) < 2:
            raise ConfigError("backbone needs at least one hidden and one output layer")
        if self.weights[-1].shape[0] != self.env.m * self.p_out:
            raise ConfigError("last backbone layer width must equal m * p_out")
        if self.intra_w.shape != (self.env.m, self.p_out, self.p_out):
            raise ConfigError("intra weights must be m square matrices of order p_out")
        bad = set(self.intra_mask) - FULL_INTRA_MASK
        if bad:
            raise ConfigError(f"unknown intra mask entries {sorted(bad)}")

    @property
    def hidden_widths(self) -> list[int]:
        return [w.shape[0] for w in self.weights[:-1]]

    def blocks(self) -> dict[str, np.ndarray]:
        """Live views of every trainable array, keyed by block name."""
        out: dict[str, np.ndarray] = {}
        if self.encoder.mode != LAYER:
            out["enc_mu"] = self.encoder.mu
            out["enc_sigma"] = self.encoder.sigma
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"w{i}"] = w
            out[f"b{i}"] = b
        out["intra_w"] = self.intra_w
        out["intra_b"] = self.intra_b
        out["dec_w"] = self.dec_w
        out["dec_b"] = self.dec_b
        return out

    def set_blocks(self, blocks: dict[str, np.ndarray]) -> None:
        if self.encoder.mode != LAYER:
            self.encoder.mu = blocks["enc_mu"]
            self.encoder.sigma = blocks["enc_sigma"]
        for i in range(len(self.weights)):
            self.weights[i] = blocks[f"w{i}"]
            self.biases[i] = blocks[f"b{i}"]
        self.intra_w = blocks["intra_w"]
        self.intra_b = blocks["intra_b"]
        self.dec_w = blocks["dec_w"]
        self.dec_b = blocks["dec_b"]

    def copy(self) -> "SpikingActorParams":
        return replace(
            self,
            env=self.env,
            encoder=EncoderParams(mu=self.encoder.mu.copy(), sigma=self.encoder.sigma.copy(),
                                  p_in=self.encoder.p_in, enc_v_th=self.encoder.enc_v_th,
                                  mode=self.encoder.mode),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            intra_w=self.intra_w.copy(),
            intra_b=self.intra_b.copy(),
            dec_w=self.dec_w.copy(),
            dec_b=self.dec_b.copy(),
            obs_shift=None if self.obs_shift is None else self.obs_shift.copy(),
            obs_scale=None if self.obs_scale is None else self.obs_scale.copy(),
        )


def new_spiking_actor(env: EnvSpec, rng: RngStream, *, t_len: int = 5, p_in: int = 10,
                      p_out: int = 10, hidden: tuple[int, ...] = (256, 256),
                      encoder_mode: str = POP_DET, enc_v_th: float = 1.0,
                      decoder: DecoderConfig | None = None,
                      clif: SpikingConfig | None = None,
                      sur: SurrogateConfig | None = None,
                      intra_mask: frozenset[str] = FULL_INTRA_MASK,
                      clamp_action: bool = True) -> SpikingActorParams:
    """Build a freshly initialized spiking actor for the given task."""
    encoder = default_encoder(env.n, p_in, mode=encoder_mode, enc_v_th=enc_v_th)
    widths = [encoder.out_width(env.n), *hidden, env.m * p_out]
    weights, biases = [], []
    for i in range(len(widths) - 1):
        w, b = init_linear(widths[i], widths[i + 1], rng.child(f"backbone{i}"))
        weights.append(w)
        biases.append(b)
    intra_w = np.empty((env.m, p_out, p_out))
    intra_b = np.empty((env.m, p_out))
    for m in range(env.m):
        intra_w[m], intra_b[m] = init_linear(p_out, p_out, rng.child(f"intra{m}"))
    dec_w = np.empty((env.m, p_out))
    dec_b = np.empty(env.m)
    for m in range(env.m):
        w, b = init_linear(p_out, 1, rng.child(f"decoder{m}"))
        dec_w[m] = w[0]
        dec_b[m] = b[0]
    return SpikingActorParams(
        env=env, encoder=encoder, weights=weights, biases=biases,
        clif=clif or SpikingConfig(), sur=sur or SurrogateConfig(),
        intra_w=intra_w, intra_b=intra_b, intra_mask=frozenset(intra_mask),
        dec_w=dec_w, dec_b=dec_b, decoder=decoder or DecoderConfig(),
        t_len=t_len, p_out=p_out, clamp_action=clamp_action,
    )


def intra_weight_mask(p_out: int, mask: frozenset[str]) -> np.ndarray:
    """(P, P) 0/1 matrix keeping the diagonal for self and off-diagonal for lateral."""
    eye = np.eye(p_out)
    keep = np.zeros((p_out, p_out))
    if INTRA_SELF in mask:
        keep += eye
    if INTRA_LATERAL in mask:
        keep += 1.0 - eye
    return keep


def masked_intra(params: SpikingActorParams) -> tuple[np.ndarray, np.ndarray]:
    """Effective intra weights/biases after applying the ablation mask."""
    keep = intra_weight_mask(params.p_out, params.intra_mask)
    w_eff = params.intra_w * keep
    b_eff = params.intra_b if INTRA_BIAS in params.intra_mask else np.zeros_like(params.intra_b)
    return w_eff, b_eff


def intra_current(s_out_pop: np.ndarray, w_intra: np.ndarray, b_intra: np.ndarray,
                  mask: frozenset[str] = FULL_INTRA_MASK) -> np.ndarray:
    """Recurrent current one population feeds itself at the next step."""
    s_out_pop = np.asarray(s_out_pop, dtype=np.float64)
    p = w_intra.shape[0]
    keep = intra_weight_mask(p, frozenset(mask))
    w_eff = w_intra * keep
    out = s_out_pop @ w_eff.T
    if INTRA_BIAS in mask:
        out = out + b_intra
    return out


@dataclass
class ForwardTrace:
    """Everything one recorded forward pass needs for the backward pass.

    All time-major arrays have shape (T, B, ...); backbone records are
    lists indexed [t][layer].
    """

    s: np.ndarray                      # state as consumed by the encoder (B, N)
    a_e: np.ndarray | None             # stimulation strengths (B, N, P_in)
    raster: np.ndarray                 # encoder output (T, B, D)
    drives: list[list[np.ndarray]]
    currents: list[list[np.ndarray]]
    h: list[list[np.ndarray]]
    spikes: list[list[np.ndarray]]
    intra_applied: np.ndarray          # current entering the last layer (T, B, M*P)
    li_x: np.ndarray | None            # decoder neuron drive (T, B, M)
    li_v: np.ndarray | None            # decoder voltage trace (T, B, M)
    a_raw: np.ndarray                  # decoded action before clamping (B, M)
    a: np.ndarray                      # emitted action (B, M)


def forward(s: np.ndarray, params: SpikingActorParams,
            record: bool = False) -> np.ndarray | tuple[np.ndarray, ForwardTrace]:
    """Run the actor on one state (N,) or a batch (B, N). Neuron state is
    fresh on every call. With ``record`` the full trace is returned too."""
    s = np.asarray(s, dtype=np.float64)
    single = s.ndim == 1
    s2 = s[None, :] if single else s
    if s2.ndim != 2 or s2.shape[1] != params.env.n:
        raise ContractViolation(
            f"state shape {s.shape} incompatible with spec n={params.env.n}"
        )
    a, trace = _forward_batch(s2, params, record)
    if single:
        a = a[0]
    if record:
        return a, trace
    return a


def _forward_batch(s: np.ndarray, params: SpikingActorParams,
                   record: bool) -> tuple[np.ndarray, ForwardTrace | None]:
    env, clif, dec = params.env, params.clif, params.decoder
    t_len, p_out, m_dim = params.t_len, params.p_out, env.m
    bsz = s.shape[0]
    if params.obs_shift is not None:
        s = (s - params.obs_shift) / params.obs_scale
    raster, a_e = encode_raster(s, params.encoder, t_len)

    n_layers = len(params.weights)
    widths = [w.shape[0] for w in params.weights]
    cur = [np.zeros((bsz, w)) for w in widths]
    volt = [np.full((bsz, w), clif.v_reset) for w in widths]
    w_eff, b_eff = masked_intra(params)

    use_li = dec.stat != STAT_FR
    li_v = np.full((bsz, m_dim), dec.v_reset_li) if use_li else None
    keep_li_hist = use_li and (record or dec.stat in (STAT_MEAN, STAT_MAX_ABS))
    li_hist = np.zeros((t_len, bsz, m_dim)) if keep_li_hist else None
    x_hist = np.zeros((t_len, bsz, m_dim)) if (use_li and record) else None

    trace = None
    if record:
        trace = ForwardTrace(
            s=s, a_e=a_e, raster=raster,
            drives=[], currents=[], h=[], spikes=[],
            intra_applied=np.zeros((t_len, bsz, m_dim * p_out)),
            li_x=x_hist, li_v=li_hist,
            a_raw=np.zeros((bsz, m_dim)), a=np.zeros((bsz, m_dim)),
        )

    pop_spikes_all = np.zeros((t_len, bsz, m_dim, p_out)) if dec.stat == STAT_FR else None
    intra_next = np.zeros((bsz, m_dim * p_out))
    spikes = None
    for t in range(t_len):
        prev = raster[t]
        if record:
            for rec in (trace.drives, trace.currents, trace.h, trace.spikes):
                rec.append([])
        for layer in range(n_layers):
            drive = prev @ params.weights[layer].T + params.biases[layer]
            if layer == n_layers - 1 and t != 0:
                drive = drive + intra_next
                if record:
                    trace.intra_applied[t] = intra_next
            cur[layer] = clif.alpha_c * cur[layer] + drive
            h = clif.alpha_v * (volt[layer] - clif.v_reset) + clif.v_reset + cur[layer]
            spikes = (h >= clif.v_th).astype(np.float64)
            volt[layer] = h * (1.0 - spikes) + clif.v_reset * spikes
            if record:
                trace.drives[t].append(drive)
                trace.currents[t].append(cur[layer])
                trace.h[t].append(h)
                trace.spikes[t].append(spikes)
            prev = spikes
        pops = spikes.reshape(bsz, m_dim, p_out)
        if pop_spikes_all is not None:
            pop_spikes_all[t] = pops
        if t != t_len - 1:
            intra_next = (np.einsum("mop,bmp->bmo", w_eff, pops) + b_eff).reshape(
                bsz, m_dim * p_out)
        if use_li:
            x_t = np.einsum("mp,bmp->bm", params.dec_w, pops) + params.dec_b
            li_v = dec.alpha_v_li * (li_v - dec.v_reset_li) + dec.v_reset_li + x_t
            if li_hist is not None:
                li_hist[t] = li_v
            if x_hist is not None:
                x_hist[t] = x_t

    if dec.stat == STAT_FR:
        rates = pop_spikes_all.mean(axis=0)
        a_raw = np.einsum("mp,bmp->bm", params.dec_w, rates) + params.dec_b
    elif dec.stat == STAT_LAST:
        a_raw = li_v.copy()
    elif dec.stat == STAT_MEAN:
        a_raw = li_hist.mean(axis=0)
    else:  # max_abs: voltage at the earliest maximal-|v| step
        idx = np.argmax(np.abs(li_hist), axis=0)
        a_raw = np.take_along_axis(li_hist, idx[None, :, :], axis=0)[0]

    if params.clamp_action:
        a = np.clip(a_raw, env.action_low, env.action_high)
    else:
        a = a_raw.copy()
    if record:
        trace.a_raw = a_raw
        trace.a = a
    return a, trace


def dan_forward(s: np.ndarray, dan: "DanParams") -> np.ndarray:
    """Dense baseline actor: two ReLU hidden layers, tanh head scaled to bounds."""
    s = np.asarray(s, dtype=np.float64)
    if dan.obs_shift is not None:
        s = (s - dan.obs_shift) / dan.obs_scale
    y = mlp_forward(s, dan.mlp)
    center = 0.5 * (dan.env.action_low + dan.env.action_high)
    half = 0.5 * (dan.env.action_high - dan.env.action_low)
    return center + half * np.tanh(y)


@dataclass
class DanParams:
    """Conventional dense actor used as the performance/energy baseline."""

    env: EnvSpec
    mlp: MlpParams
    obs_shift: np.ndarray | None = None
    obs_scale: np.ndarray | None = None

    def blocks(self) -> dict[str, np.ndarray]:
        return self.mlp.blocks()

    def set_blocks(self, blocks: dict[str, np.ndarray]) -> None:
        self.mlp.set_blocks(blocks)

    def copy(self) -> "DanParams":
        return DanParams(env=self.env, mlp=self.mlp.copy(),
                         obs_shift=None if self.obs_shift is None else self.obs_shift.copy(),
                         obs_scale=None if self.obs_scale is None else self.obs_scale.copy())

    @property
    def hidden_widths(self) -> list[int]:
        return self.mlp.dims[1:-1]


def new_dan(env: EnvSpec, rng: RngStream, hidden: tuple[int, ...] = (256, 256)) -> DanParams:
    return DanParams(env=env, mlp=mlp_init([env.n, *hidden, env.m], rng))


# ---------------------------------------------------------------------------
# checkpoint I/O
# ---------------------------------------------------------------------------

KIND_SPIKING = "spiking_actor"
KIND_DENSE = "dense_actor"


def _array_doc(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": [float(x) for x in np.asarray(a).ravel()]}


def _doc_array(doc: dict, name: str) -> np.ndarray:
    try:
        shape = tuple(int(x) for x in doc["shape"])
        data = doc["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointCorruptError(f"array {name!r} is malformed") from exc
    want = int(np.prod(shape)) if shape else 1
    if len(data) != want:
        raise CheckpointCorruptError(
            f"array {name!r} has {len(data)} values, shape {shape} needs {want}"
        )
    return np.asarray(data, dtype=np.float64).reshape(shape)


def save_checkpoint(params: SpikingActorParams | DanParams, path: str | os.PathLike) -> None:
    if isinstance(params, SpikingActorParams):
        doc = _spiking_doc(params)
    elif isinstance(params, DanParams):
        doc = _dan_doc(params)
    else:
        raise ContractViolation(f"cannot checkpoint {type(params).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(textdoc.dumps(doc))


def _env_doc(env: EnvSpec) -> dict:
    return {"n": env.n, "m": env.m,
            "action_low": [float(x) for x in env.action_low],
            "action_high": [float(x) for x in env.action_high]}


def _norm_arrays(params) -> dict:
    out = {}
    if params.obs_shift is not None:
        out["obs_shift"] = _array_doc(params.obs_shift)
        out["obs_scale"] = _array_doc(params.obs_scale)
    return out


def _spiking_doc(params: SpikingActorParams) -> dict:
    hyper = {
        "env": _env_doc(params.env),
        "t_len": params.t_len,
        "p_in": params.encoder.p_in,
        "p_out": params.p_out,
        "hidden": params.hidden_widths,
        "encoder_mode": params.encoder.mode,
        "enc_v_th": params.encoder.enc_v_th,
        "decoder_stat": params.decoder.stat,
        "alpha_v_li": params.decoder.alpha_v_li,
        "v_reset_li": params.decoder.v_reset_li,
        "clif": {"v_th": params.clif.v_th, "v_reset": params.clif.v_reset,
                 "alpha_v": params.clif.alpha_v, "alpha_c": params.clif.alpha_c,
                 "reset_mode": params.clif.reset_mode},
        "sur_w": params.sur.w,
        "intra_mask": sorted(params.intra_mask),
        "clamp_action": params.clamp_action,
    }
    arrays = {name: _array_doc(arr) for name, arr in params.blocks().items()}
    arrays.update(_norm_arrays(params))
    return {"format_version": CHECKPOINT_VERSION, "kind": KIND_SPIKING,
            "hyper": hyper, "arrays": arrays}


def _dan_doc(params: DanParams) -> dict:
    hyper = {"env": _env_doc(params.env), "hidden": params.hidden_widths}
    arrays = {name: _array_doc(arr) for name, arr in params.blocks().items()}
    arrays.update(_norm_arrays(params))
    return {"format_version": CHECKPOINT_VERSION, "kind": KIND_DENSE,
            "hyper": hyper, "arrays": arrays}


def load_checkpoint(path: str | os.PathLike) -> SpikingActorParams | DanParams:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CheckpointCorruptError(f"cannot read checkpoint {path}: {exc}") from exc
    try:
        doc = textdoc.loads(text)
    except ValueError as exc:
        raise CheckpointCorruptError(f"checkpoint {path} is not parseable") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CheckpointCorruptError("checkpoint lacks a format_version field")
    if doc["format_version"] != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"unsupported checkpoint version {doc['format_version']!r}, "
            f"expected {CHECKPOINT_VERSION}"
        )
    try:
        kind = doc["kind"]
        hyper = doc["hyper"]
        arrays = doc["arrays"]
    except KeyError as exc:
        raise CheckpointCorruptError(f"checkpoint missing section {exc}") from exc
    if kind == KIND_SPIKING:
        return _load_spiking(hyper, arrays)
    if kind == KIND_DENSE:
        return _load_dan(hyper, arrays)
    raise CheckpointCorruptError(f"unknown checkpoint kind {kind!r}")


def _load_env(hyper: dict) -> EnvSpec:
    try:
        env = hyper["env"]
        return EnvSpec(n=int(env["n"]), m=int(env["m"]),
                       action_low=env["action_low"], action_high=env["action_high"])
    except (KeyError, TypeError) as exc:
        raise CheckpointCorruptError("checkpoint env block is malformed") from exc


def _expect_shape(name: str, arr: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if arr.shape != shape:
        raise CheckpointShapeError(
            f"array {name!r} has shape {arr.shape}, hyperparameters require {shape}"
        )
    return arr


def _load_spiking(hyper: dict, arrays: dict) -> SpikingActorParams:
    env = _load_env(hyper)
    try:
        t_len = int(hyper["t_len"])
        p_in = int(hyper["p_in"])
        p_out = int(hyper["p_out"])
        hidden = [int(x) for x in hyper["hidden"]]
        mode = hyper["encoder_mode"]
        clif_doc = hyper["clif"]
        clif = SpikingConfig(v_th=clif_doc["v_th"], v_reset=clif_doc["v_reset"],
                             alpha_v=clif_doc["alpha_v"], alpha_c=clif_doc["alpha_c"],
                             reset_mode=clif_doc["reset_mode"])
        sur = SurrogateConfig(w=hyper["sur_w"])
        decoder = DecoderConfig(stat=hyper["decoder_stat"],
                                alpha_v_li=hyper["alpha_v_li"],
                                v_reset_li=hyper["v_reset_li"])
        mask = frozenset(hyper["intra_mask"])
        clamp = bool(hyper["clamp_action"])
        enc_v_th = float(hyper["enc_v_th"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointCorruptError(f"checkpoint hyper block is malformed: {exc}") from exc

    named = {name: _doc_array(doc, name) for name, doc in arrays.items()}
    if mode == LAYER:
        encoder = default_encoder(env.n, 1, mode=LAYER, enc_v_th=enc_v_th)
    else:
        mu = _expect_shape("enc_mu", _need(named, "enc_mu"), (env.n, p_in))
        sigma = _expect_shape("enc_sigma", _need(named, "enc_sigma"), (env.n, p_in))
        encoder = EncoderParams(mu=mu, sigma=sigma, p_in=p_in, enc_v_th=enc_v_th, mode=mode)
    widths = [encoder.out_width(env.n), *hidden, env.m * p_out]
    weights, biases = [], []
    for i in range(len(widths) - 1):
        weights.append(_expect_shape(f"w{i}", _need(named, f"w{i}"), (widths[i + 1], widths[i])))
        biases.append(_expect_shape(f"b{i}", _need(named, f"b{i}"), (widths[i + 1],)))
    params = SpikingActorParams(
        env=env, encoder=encoder, weights=weights, biases=biases, clif=clif, sur=sur,
        intra_w=_expect_shape("intra_w", _need(named, "intra_w"), (env.m, p_out, p_out)),
        intra_b=_expect_shape("intra_b", _need(named, "intra_b"), (env.m, p_out)),
        intra_mask=mask,
        dec_w=_expect_shape("dec_w", _need(named, "dec_w"), (env.m, p_out)),
        dec_b=_expect_shape("dec_b", _need(named, "dec_b"), (env.m,)),
        decoder=decoder, t_len=t_len, p_out=p_out, clamp_action=clamp,
    )
    _attach_norm(params, named, env.n)
    return params


def _load_dan(hyper: dict, arrays: dict) -> DanParams:
    env = _load_env(hyper)
    try:
        hidden = [int(x) for x in hyper["hidden"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointCorruptError("checkpoint hyper block is malformed") from exc
    named = {name: _doc_array(doc, name) for name, doc in arrays.items()}
    dims = [env.n, *hidden, env.m]
    weights, biases = [], []
    for i in range(len(dims) - 1):
        weights.append(_expect_shape(f"w{i}", _need(named, f"w{i}"), (dims[i + 1], dims[i])))
        biases.append(_expect_shape(f"b{i}", _need(named, f"b{i}"), (dims[i + 1],)))
    params = DanParams(env=env, mlp=MlpParams(weights, biases))
    _attach_norm(params, named, env.n)
    return params


def _attach_norm(params, named: dict, n: int) -> None:
    if "obs_shift" in named:
        params.obs_shift = _expect_shape("obs_shift", named["obs_shift"], (n,))
        params.obs_scale = _expect_shape("obs_scale", _need(named, "obs_scale"), (n,))


def _need(named: dict, name: str) -> np.ndarray:
    if name not in named:
        raise CheckpointCorruptError(f"checkpoint is missing array {name!r}")
    return named[name]
