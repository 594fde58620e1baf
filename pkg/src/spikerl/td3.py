"""TD3 training: twin critics, replay, target smoothing, delayed actor updates.

The actor can be either the spiking network (trained through its recorded
trace) or the dense baseline; both sit behind the small policy adapters
below so the loop itself is actor-agnostic.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import grad as actor_grad
from .actor import (
    DanParams,
    EnvSpec,
    SpikingActorParams,
    dan_forward,
    forward,
    save_checkpoint,
)
from .errors import ContractViolation
from .mlp import MlpParams, mlp_backward, mlp_forward, mlp_forward_cache, mlp_init
from .numerics import AdamOptimizer, RngStream, clip_global_norm


@dataclass
class TD3Config:
    gamma: float = 0.99
    actor_lr: float = 1e-4
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
    strict: bool = False

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise ContractViolation("gamma must lie in (0, 1)")
        if not (0.0 < self.tau <= 1.0):
            raise ContractViolation("tau must lie in (0, 1]")
        for name in ("actor_lr", "critic_lr", "batch", "policy_delay", "buffer_capacity"):
            if getattr(self, name) <= 0:
                raise ContractViolation(f"{name} must be positive")


@dataclass
class Transition:
    s: np.ndarray
    a: np.ndarray
    r: float
    s2: np.ndarray
    done: bool


@dataclass
class CriticParams:
    """Two independent Q networks; never share parameters."""

    q1: MlpParams
    q2: MlpParams

    def copy(self) -> "CriticParams":
        return CriticParams(self.q1.copy(), self.q2.copy())

    def blocks(self) -> dict[str, np.ndarray]:
        out = self.q1.blocks(prefix="q1_")
        out.update(self.q2.blocks(prefix="q2_"))
        return out


def new_critics(env: EnvSpec, rng: RngStream, hidden: tuple[int, ...] = (256, 256)) -> CriticParams:
    dims = [env.n + env.m, *hidden, 1]
    return CriticParams(q1=mlp_init(dims, rng.child("q1")), q2=mlp_init(dims, rng.child("q2")))


def critic_forward(s: np.ndarray, a: np.ndarray, critic: MlpParams) -> np.ndarray:
    """Q(s, a) for one pair (returns a scalar) or a batch (returns (B,))."""
    s = np.asarray(s, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    x = np.concatenate([s, a], axis=-1)
    q = mlp_forward(x, critic)
    return float(q[0]) if q.ndim == 1 else q[:, 0]


class ReplayBuffer:
    """Fixed-capacity ring buffer with uniform with-replacement sampling."""

    def __init__(self, capacity: int, env: EnvSpec):
        self.capacity = int(capacity)
        self.s = np.zeros((self.capacity, env.n))
        self.a = np.zeros((self.capacity, env.m))
        self.r = np.zeros(self.capacity)
        self.s2 = np.zeros((self.capacity, env.n))
        self.done = np.zeros(self.capacity)
        self.size = 0
        self._next = 0

    def __len__(self) -> int:
        return self.size

    def push(self, t: Transition) -> None:
        i = self._next
        self.s[i] = t.s
        self.a[i] = t.a
        self.r[i] = t.r
        self.s2[i] = t.s2
        self.done[i] = float(t.done)
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, k: int, rng: RngStream) -> dict[str, np.ndarray]:
        if self.size == 0:
            raise ContractViolation("cannot sample from an empty replay buffer")
        idx = rng.integers(self.size, size=k)
        return {"s": self.s[idx], "a": self.a[idx], "r": self.r[idx],
                "s2": self.s2[idx], "done": self.done[idx]}


class SpikingPolicy:
    """Adapter: spiking actor behind the uniform policy interface."""

    kind = "spiking"

    def __init__(self, params: SpikingActorParams):
        self.params = params

    def act(self, s: np.ndarray) -> np.ndarray:
        return forward(s, self.params)

    def act_trace(self, s: np.ndarray):
        return forward(s, self.params, record=True)

    def grads(self, trace, dl_da) -> dict[str, np.ndarray]:
        return actor_grad.backward(trace, self.params, dl_da)

    def blocks(self) -> dict[str, np.ndarray]:
        return self.params.blocks()

    def set_blocks(self, blocks) -> None:
        self.params.set_blocks(blocks)

    def clone(self) -> "SpikingPolicy":
        return SpikingPolicy(self.params.copy())


class DensePolicy:
    """Adapter: dense tanh-output baseline actor."""

    kind = "dan"

    def __init__(self, params: DanParams):
        self.params = params

    def act(self, s: np.ndarray) -> np.ndarray:
        return dan_forward(s, self.params)

    def act_trace(self, s: np.ndarray):
        s = np.asarray(s, dtype=np.float64)
        x = s
        if self.params.obs_shift is not None:
            x = (x - self.params.obs_shift) / self.params.obs_scale
        y, cache = mlp_forward_cache(x, self.params.mlp)
        env = self.params.env
        center = 0.5 * (env.action_low + env.action_high)
        half = 0.5 * (env.action_high - env.action_low)
        tanh_y = np.tanh(y)
        return center + half * tanh_y, (cache, tanh_y, half)

    def grads(self, trace, dl_da) -> dict[str, np.ndarray]:
        cache, tanh_y, half = trace
        gy = np.asarray(dl_da) * half * (1.0 - tanh_y ** 2)
        grads, _ = mlp_backward(cache, self.params.mlp, gy)
        return grads

    def blocks(self) -> dict[str, np.ndarray]:
        return self.params.blocks()

    def set_blocks(self, blocks) -> None:
        self.params.set_blocks(blocks)

    def clone(self) -> "DensePolicy":
        return DensePolicy(self.params.copy())


def td3_target(batch: dict[str, np.ndarray], target_policy, target_critics: CriticParams,
               cfg: TD3Config, rng: RngStream, env: EnvSpec) -> np.ndarray:
    """Clipped double-Q regression target with target-policy smoothing."""
    s2 = batch["s2"]
    noise = rng.normal(cfg.smooth_sigma, size=(s2.shape[0], env.m))
    noise = np.clip(noise, -cfg.noise_clip, cfg.noise_clip)
    a2 = np.clip(target_policy.act(s2) + noise, env.action_low, env.action_high)
    x2 = np.concatenate([s2, a2], axis=-1)
    q1 = mlp_forward(x2, target_critics.q1)[:, 0]
    q2 = mlp_forward(x2, target_critics.q2)[:, 0]
    return batch["r"] + cfg.gamma * (1.0 - batch["done"]) * np.minimum(q1, q2)


def soft_update_mlp(live: MlpParams, target: MlpParams, tau: float) -> None:
    for i in range(len(live.weights)):
        target.weights[i] = tau * live.weights[i] + (1.0 - tau) * target.weights[i]
        target.biases[i] = tau * live.biases[i] + (1.0 - tau) * target.biases[i]


def soft_update_policy(live, target, tau: float) -> None:
    live_blocks = live.blocks()
    tgt_blocks = target.blocks()
    target.set_blocks({
        name: tau * live_blocks[name] + (1.0 - tau) * tgt_blocks[name]
        for name in live_blocks
    })


@dataclass
class TD3State:
    """Live and target networks plus optimizers and update counters."""

    policy: object
    critics: CriticParams
    target_policy: object
    target_critics: CriticParams
    actor_opt: AdamOptimizer
    q1_opt: AdamOptimizer
    q2_opt: AdamOptimizer
    update_count: int = 0
    actor_update_count: int = 0


def new_td3_state(policy, critics: CriticParams, cfg: TD3Config) -> TD3State:
    return TD3State(
        policy=policy, critics=critics,
        target_policy=policy.clone(), target_critics=critics.copy(),
        actor_opt=AdamOptimizer(cfg.actor_lr),
        q1_opt=AdamOptimizer(cfg.critic_lr), q2_opt=AdamOptimizer(cfg.critic_lr),
    )


def td3_update(state: TD3State, batch: dict[str, np.ndarray], cfg: TD3Config,
               rng: RngStream, env: EnvSpec) -> tuple[float, float | None]:
    """One critic update; every ``policy_delay``-th call also updates the actor
    and soft-updates all targets. Returns (critic_loss, actor_loss or None)."""
    y = td3_target(batch, state.target_policy, state.target_critics, cfg, rng, env)
    x = np.concatenate([batch["s"], batch["a"]], axis=-1)
    bsz = x.shape[0]

    critic_loss = 0.0
    for critic, opt in ((state.critics.q1, state.q1_opt), (state.critics.q2, state.q2_opt)):
        q, cache = mlp_forward_cache(x, critic)
        err = q[:, 0] - y
        critic_loss += float(np.mean(err ** 2))
        gq = (2.0 / bsz) * err[:, None]
        grads, _ = mlp_backward(cache, critic, gq)
        if not all(np.all(np.isfinite(g)) for g in grads.values()):
            raise ContractViolation(
                "non-finite critic gradient; offending batch stats: "
                f"|r|max={np.max(np.abs(batch['r'])):.3g} y_max={np.max(np.abs(y)):.3g}"
            )
        critic.set_blocks(opt.update(critic.blocks(), grads))

    state.update_count += 1
    actor_loss = None
    if state.update_count % cfg.policy_delay == 0:
        a_pi, trace = state.policy.act_trace(batch["s"])
        x_pi = np.concatenate([batch["s"], a_pi], axis=-1)
        q, cache = mlp_forward_cache(x_pi, state.critics.q1)
        actor_loss = float(-np.mean(q[:, 0]))
        gq = np.full((bsz, 1), -1.0 / bsz)
        _, gx = mlp_backward(cache, state.critics.q1, gq)
        dl_da = gx[:, env.n:]
        grads = state.policy.grads(trace, dl_da)
        if cfg.grad_clip is not None:
            grads = clip_global_norm(grads, cfg.grad_clip)
        state.policy.set_blocks(state.actor_opt.update(state.policy.blocks(), grads))
        state.actor_update_count += 1
        soft_update_policy(state.policy, state.target_policy, cfg.tau)
        soft_update_mlp(state.critics.q1, state.target_critics.q1, cfg.tau)
        soft_update_mlp(state.critics.q2, state.target_critics.q2, cfg.tau)
    return critic_loss, actor_loss


def evaluate(policy, env, episodes: int, seed: int) -> float:
    """Mean undiscounted return of the deterministic policy. Episode ``i``
    resets with seed ``seed + i`` and is capped at the env's episode cap."""
    total = 0.0
    for ep in range(episodes):
        obs = env.reset(seed=seed + ep)
        ep_return = 0.0
        done = False
        steps = 0
        while not done and steps < env.episode_cap:
            obs, r, done = env.step(policy.act(obs))
            ep_return += r
            steps += 1
        total += ep_return
    return total / episodes


@dataclass
class RunLog:
    """Evaluation history of one training run, mirrored to a CSV file."""

    rows: list[tuple[int, float, float, float, float]] = field(default_factory=list)
    csv_path: Path | None = None
    initial_checkpoint: Path | None = None
    final_checkpoint: Path | None = None

    CSV_HEADER = "step,eval_mean_reward,actor_loss,critic_loss,wall_seconds"

    def append(self, step: int, reward: float, actor_loss: float,
               critic_loss: float, wall: float) -> None:
        self.rows.append((step, reward, actor_loss, critic_loss, wall))
        if self.csv_path is not None:
            with open(self.csv_path, "a", encoding="utf-8") as fh:
                fh.write(f"{step},{reward!r},{actor_loss!r},{critic_loss!r},{wall!r}\n")

    def start_csv(self, path: Path) -> None:
        self.csv_path = Path(path)
        with open(self.csv_path, "w", encoding="utf-8") as fh:
            fh.write(self.CSV_HEADER + "\n")

    def best_reward(self) -> float | None:
        return max((row[1] for row in self.rows), default=None)


class RunningNorm:
    """Running mean/std of observations, written into shared shift/scale arrays."""

    def __init__(self, shift: np.ndarray, scale: np.ndarray):
        self.shift = shift
        self.scale = scale
        self.count = 0
        self._mean = np.zeros_like(shift)
        self._m2 = np.zeros_like(shift)

    def update(self, obs: np.ndarray) -> None:
        self.count += 1
        delta = obs - self._mean
        self._mean += delta / self.count
        self._m2 += delta * (obs - self._mean)
        if self.count >= 2:
            std = np.sqrt(self._m2 / self.count)
            self.shift[:] = self._mean
            self.scale[:] = np.maximum(std, 1e-2)


def train(run_cfg, seed: int, out_dir: str | Path) -> RunLog:
    """Train one seed per the resolved run configuration; see config.RunConfig.

    Writes progress.csv, an initial and a final actor checkpoint into
    ``out_dir``. In strict mode wall-clock seconds are logged as 0.0 so that
    rerunning the same seed yields a bitwise-identical log.
    """
    from .config import build_env, build_policy  # local import; config is pure data

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = run_cfg.td3_config()
    env = build_env(run_cfg, seed)
    eval_env = build_env(run_cfg, seed + 999_999) if run_cfg.env_is_builtin() else env
    policy = build_policy(run_cfg, env.spec, seed)
    critics = new_critics(env.spec, RngStream(seed, "init/critic"))

    normalizer = None
    if cfg.obs_norm:
        shift = np.zeros(env.spec.n)
        scale = np.ones(env.spec.n)
        policy.params.obs_shift = shift
        policy.params.obs_scale = scale
        normalizer = RunningNorm(shift, scale)

    state = new_td3_state(policy, critics, cfg)
    if cfg.obs_norm:
        # live and target share the same normalization arrays
        state.target_policy.params.obs_shift = policy.params.obs_shift
        state.target_policy.params.obs_scale = policy.params.obs_scale

    log = RunLog()
    log.start_csv(out_dir / "progress.csv")
    log.initial_checkpoint = out_dir / "actor_initial.ckpt"
    save_checkpoint(policy.params, log.initial_checkpoint)

    explore_rng = RngStream(seed, "explore")
    smooth_rng = RngStream(seed, "target_noise")
    sample_rng = RngStream(seed, "sampler")
    episode_rng = RngStream(seed, "episodes")
    buffer = ReplayBuffer(cfg.buffer_capacity, env.spec)

    low, high = env.spec.action_low, env.spec.action_high
    start_time = time.perf_counter()
    obs = env.reset(seed=int(episode_rng.integers(2 ** 62)))
    episode_steps = 0
    last_actor_loss = float("nan")
    last_critic_loss = float("nan")

    for step in range(1, cfg.total_steps + 1):
        if step <= cfg.warmup_steps:
            action = explore_rng.uniform(low, high, size=env.spec.m)
        else:
            noise = explore_rng.normal(cfg.explore_sigma, size=env.spec.m)
            action = np.clip(policy.act(obs) + noise, low, high)
        obs2, reward, done = env.step(action)
        episode_steps += 1
        timeout = done and episode_steps >= env.episode_cap
        buffer.push(Transition(s=obs, a=action, r=reward, s2=obs2,
                               done=done and not timeout))
        if normalizer is not None:
            normalizer.update(obs)
        obs = obs2
        if done:
            obs = env.reset(seed=int(episode_rng.integers(2 ** 62)))
            episode_steps = 0

        if step > cfg.warmup_steps:
            critic_loss, actor_loss = td3_update(
                state, buffer.sample(cfg.batch, sample_rng), cfg, smooth_rng, env.spec)
            last_critic_loss = critic_loss
            if actor_loss is not None:
                last_actor_loss = actor_loss

        if cfg.eval_every > 0 and step % cfg.eval_every == 0:
            mean_reward = evaluate(policy, eval_env, cfg.eval_episodes, seed)
            if eval_env is env:
                obs = env.reset(seed=int(episode_rng.integers(2 ** 62)))
                episode_steps = 0
            wall = 0.0 if cfg.strict else time.perf_counter() - start_time
            log.append(step, mean_reward, last_actor_loss, last_critic_loss, wall)
            if cfg.stop_at_reward is not None and mean_reward >= cfg.stop_at_reward:
                break

    log.final_checkpoint = out_dir / "actor_final.ckpt"
    save_checkpoint(policy.params, log.final_checkpoint)
    return log
