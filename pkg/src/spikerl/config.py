"""Run configuration: a flat key = value file with sections, strictly validated.

Example::

    [run]
    env = pendulum
    actor = spiking
    seeds = 0 1 2
    out = runs/pendulum

    [actor]
    t_len = 5
    p_in = 10
    p_out = 10

    [td3]
    total_steps = 30000
    warmup_steps = 1000

Unknown sections or keys are rejected with the offending name; every value
is type-checked before any run starts.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .actor import FULL_INTRA_MASK, EnvSpec, new_dan, new_spiking_actor
from .coding import DecoderConfig
from .errors import ConfigError
from .numerics import RngStream


@dataclass
class RunConfig:
    # [run]
    env: str = "pendulum"
    actor: str = "spiking"
    seeds: tuple[int, ...] = (0,)
    out: str = "runs/default"
    strict: bool = False
    # [actor]
    t_len: int = 5
    p_in: int = 10
    p_out: int = 10
    hidden_width: int = 256
    n_hidden: int = 2
    encoder: str = "pop_det"
    decoder: str = "last"
    alpha_v_li: float = 1.0
    v_reset_li: float = 0.0
    enc_v_th: float = 1.0
    intra_mask: tuple[str, ...] = ("self", "lateral", "bias")
    clamp_action: bool = True
    # [td3]
    gamma: float = 0.99
    actor_lr: float | None = None   # resolved per actor kind
    critic_lr: float = 1e-3
    explore_sigma: float = 0.1
    smooth_sigma: float = 0.2
    noise_clip: float = 0.5
    tau: float = 0.005
    batch: int = 100
    policy_delay: int = 2
    buffer_capacity: int = 1_000_000
    warmup_steps: int = 10_000
    total_steps: int = 100_000
    eval_every: int = 10_000
    eval_episodes: int = 10
    grad_clip: float | None = None
    obs_norm: bool = False
    stop_at_reward: float | None = None

    def __post_init__(self):
        if self.actor not in ("spiking", "dan"):
            raise ConfigError(f"actor must be 'spiking' or 'dan', got {self.actor!r}")
        if self.encoder not in ("pop_det", "pop", "layer"):
            raise ConfigError(f"unknown encoder {self.encoder!r}")
        if self.decoder not in ("last", "max_abs", "mean", "fr"):
            raise ConfigError(f"unknown decoder {self.decoder!r}")
        bad = set(self.intra_mask) - FULL_INTRA_MASK
        if bad:
            raise ConfigError(f"unknown intra_mask entries {sorted(bad)}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")

    def resolved_actor_lr(self) -> float:
        if self.actor_lr is not None:
            return self.actor_lr
        return 1e-4 if self.actor == "spiking" else 1e-3

    def td3_config(self):
        from .td3 import TD3Config

        return TD3Config(
            gamma=self.gamma, actor_lr=self.resolved_actor_lr(),
            critic_lr=self.critic_lr, explore_sigma=self.explore_sigma,
            smooth_sigma=self.smooth_sigma, noise_clip=self.noise_clip,
            tau=self.tau, batch=self.batch, policy_delay=self.policy_delay,
            buffer_capacity=self.buffer_capacity, warmup_steps=self.warmup_steps,
            total_steps=self.total_steps, eval_every=self.eval_every,
            eval_episodes=self.eval_episodes, grad_clip=self.grad_clip,
            obs_norm=self.obs_norm, stop_at_reward=self.stop_at_reward,
            strict=self.strict,
        )

    def env_is_builtin(self) -> bool:
        return "://" not in self.env


_SECTION_FIELDS = {
    "run": ("env", "actor", "seeds", "out", "strict"),
    "actor": ("t_len", "p_in", "p_out", "hidden_width", "n_hidden", "encoder",
              "decoder", "alpha_v_li", "v_reset_li", "enc_v_th", "intra_mask",
              "clamp_action"),
    "td3": ("gamma", "actor_lr", "critic_lr", "explore_sigma", "smooth_sigma",
            "noise_clip", "tau", "batch", "policy_delay", "buffer_capacity",
            "warmup_steps", "total_steps", "eval_every", "eval_episodes",
            "grad_clip", "obs_norm", "stop_at_reward"),
}

_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False,
                "yes": True, "no": False}


def _parse_value(name: str, text: str, target_type, optional: bool):
    text = text.strip()
    if optional and text.lower() in ("none", ""):
        return None
    try:
        if target_type is bool:
            return _BOOL_VALUES[text.lower()]
        if target_type is int:
            return int(float(text)) if ("e" in text.lower() or "." in text) else int(text)
        if target_type is float:
            return float(text)
        if target_type is str:
            return text
        if target_type == tuple[int, ...]:
            return tuple(int(x) for x in text.split())
        if target_type == tuple[str, ...]:
            if text.lower() in ("none", "empty"):
                return ()
            return tuple(text.split())
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"key {name!r}: cannot parse {text!r}") from exc
    raise ConfigError(f"key {name!r} has unsupported type {target_type}")


_FIELD_TYPES = {
    "seeds": tuple[int, ...],
    "intra_mask": tuple[str, ...],
    "actor_lr": float,
    "grad_clip": float,
    "stop_at_reward": float,
}
_OPTIONAL = {"actor_lr", "grad_clip", "stop_at_reward"}


def _field_type(name: str):
    if name in _FIELD_TYPES:
        return _FIELD_TYPES[name]
    for f in fields(RunConfig):
        if f.name == name:
            return f.type if isinstance(f.type, type) else {
                "str": str, "int": int, "float": float, "bool": bool,
            }[f.type]
    raise ConfigError(f"unknown configuration key {name!r}")


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    updates = {}
    for section in parser.sections():
        if section not in _SECTION_FIELDS:
            raise ConfigError(f"config file {path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SECTION_FIELDS[section]:
                raise ConfigError(
                    f"config file {path}: unknown key {key!r} in section [{section}]"
                )
            updates[key] = _parse_value(key, raw, _field_type(key), key in _OPTIONAL)
    return RunConfig(**updates)


def apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    updates = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in {f.name for f in fields(RunConfig)}:
            raise ConfigError(f"unknown configuration key {key!r}")
        updates[key] = value
    return replace(cfg, **updates) if updates else cfg


def resolved_text(cfg: RunConfig, seed: int | None = None) -> str:
    """Config snapshot, re-parseable by load_config; records one seed if given."""
    lines = []
    for section, names in _SECTION_FIELDS.items():
        lines.append(f"[{section}]")
        for name in names:
            value = getattr(cfg, name)
            if name == "seeds" and seed is not None:
                value = (seed,)
            if name == "actor_lr":
                value = cfg.resolved_actor_lr()
            if value is None:
                text = "none"
            elif isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, tuple):
                text = " ".join(str(v) for v in value) if value else "empty"
            elif isinstance(value, float):
                text = format(value, ".17g")
            else:
                text = str(value)
            lines.append(f"{name} = {text}")
        lines.append("")
    return "\n".join(lines)


def build_env(cfg: RunConfig, seed: int):
    if cfg.env_is_builtin():
        from .envs import make_env

        return make_env(cfg.env, seed=seed)
    from .remote import env_connect

    return env_connect(cfg.env)


def build_policy(cfg: RunConfig, env_spec: EnvSpec, seed: int):
    from .td3 import DensePolicy, SpikingPolicy

    rng = RngStream(seed, "init/actor")
    hidden = (cfg.hidden_width,) * cfg.n_hidden
    if cfg.actor == "dan":
        return DensePolicy(new_dan(env_spec, rng, hidden=hidden))
    decoder = DecoderConfig(stat=cfg.decoder, alpha_v_li=cfg.alpha_v_li,
                            v_reset_li=cfg.v_reset_li)
    params = new_spiking_actor(
        env_spec, rng, t_len=cfg.t_len, p_in=cfg.p_in, p_out=cfg.p_out,
        hidden=hidden, encoder_mode=cfg.encoder, enc_v_th=cfg.enc_v_th,
        decoder=decoder, intra_mask=frozenset(cfg.intra_mask),
        clamp_action=cfg.clamp_action,
    )
    return SpikingPolicy(params)
