"""Built-in seeded continuous-control environments.

Both environments are bit-deterministic given (seed, action sequence) and
small enough for desk-scale training:

* ``pendulum``: torque-limited swing-up. Reward uses the pre-transition
  angle and the post-transition angular velocity; this convention is fixed
  here and mirrored by all tests.
* ``reacher``: a 2-D double integrator steering toward a random target.
"""

from __future__ import annotations

import numpy as np

from .actor import EnvSpec
from .errors import ConfigError, ContractViolation
from .numerics import RngStream


def wrap_angle(theta: float) -> float:
    """Map an angle to (-pi, pi]."""
    return float(np.pi - (np.pi - theta) % (2.0 * np.pi))


class PendulumEnv:
    """Swing a pendulum upright; episode ends after 200 steps."""

    GRAVITY = 10.0
    MASS = 1.0
    LENGTH = 1.0
    DT = 0.05
    MAX_SPEED = 8.0
    MAX_TORQUE = 2.0

    episode_cap = 200

    def __init__(self, seed: int = 0):
        self.spec = EnvSpec(n=3, m=1, action_low=[-self.MAX_TORQUE],
                            action_high=[self.MAX_TORQUE])
        self._stream = RngStream(seed, "env/pendulum")
        self.theta = 0.0
        self.theta_dot = 0.0
        self.steps = 0
        self.done = True

    def reset(self, seed: int | None = None) -> np.ndarray:
        rng = self._stream if seed is None else RngStream(seed, "env/pendulum/reset")
        self.theta = float(rng.uniform(-np.pi, np.pi))
        self.theta_dot = float(rng.uniform(-1.0, 1.0))
        self.steps = 0
        self.done = False
        return self._obs()

    def _obs(self) -> np.ndarray:
        return np.array([np.cos(self.theta), np.sin(self.theta), self.theta_dot])

    def step(self, action) -> tuple[np.ndarray, float, bool]:
        if self.done:
            raise ContractViolation("step on a finished episode; call reset first")
        u = float(np.clip(np.asarray(action, dtype=np.float64).reshape(-1)[0],
                          -self.MAX_TORQUE, self.MAX_TORQUE))
        g, mass, length, dt = self.GRAVITY, self.MASS, self.LENGTH, self.DT
        theta_pre = self.theta
        thdot = self.theta_dot + (
            3.0 * g / (2.0 * length) * np.sin(self.theta)
            + 3.0 * u / (mass * length ** 2)
        ) * dt
        thdot = float(np.clip(thdot, -self.MAX_SPEED, self.MAX_SPEED))
        self.theta = self.theta + thdot * dt
        self.theta_dot = thdot
        reward = -(wrap_angle(theta_pre) ** 2 + 0.1 * thdot ** 2 + 0.001 * u ** 2)
        self.steps += 1
        self.done = self.steps >= self.episode_cap
        return self._obs(), float(reward), self.done

    def energy(self) -> float:
        """Mechanical energy of the rod (kinetic + potential, zero at the pivot)."""
        return (self.theta_dot ** 2) / 6.0 + 5.0 * float(np.cos(self.theta))


class ReacherEnv:
    """Point mass accelerating toward a random target in the unit box."""

    DT = 0.05
    TARGET_RADIUS = 0.05
    MIN_TARGET_DIST = 0.1

    episode_cap = 200

    def __init__(self, seed: int = 0):
        self.spec = EnvSpec(n=4, m=2, action_low=[-1.0, -1.0], action_high=[1.0, 1.0])
        self._stream = RngStream(seed, "env/reacher")
        self.pos = np.zeros(2)
        self.vel = np.zeros(2)
        self.target = np.zeros(2)
        self.steps = 0
        self.done = True

    def reset(self, seed: int | None = None) -> np.ndarray:
        rng = self._stream if seed is None else RngStream(seed, "env/reacher/reset")
        target = rng.uniform(-1.0, 1.0, size=2)
        while float(np.linalg.norm(target)) < self.MIN_TARGET_DIST:
            target = rng.uniform(-1.0, 1.0, size=2)
        self.target = target
        self.pos = np.zeros(2)
        self.vel = np.zeros(2)
        self.steps = 0
        self.done = False
        return self._obs()

    def _obs(self) -> np.ndarray:
        return np.concatenate([self.target - self.pos, self.vel])

    def step(self, action) -> tuple[np.ndarray, float, bool]:
        if self.done:
            raise ContractViolation("step on a finished episode; call reset first")
        a = np.clip(np.asarray(action, dtype=np.float64).reshape(2), -1.0, 1.0)
        self.vel = self.vel + a * self.DT
        self.pos = self.pos + self.vel * self.DT
        dist = float(np.linalg.norm(self.target - self.pos))
        reward = -dist - 0.01 * float(np.dot(a, a))
        self.steps += 1
        self.done = self.steps >= self.episode_cap or dist < self.TARGET_RADIUS
        return self._obs(), float(reward), self.done


BUILTIN_ENVS = {"pendulum": PendulumEnv, "reacher": ReacherEnv}


def make_env(name: str, seed: int = 0):
    try:
        return BUILTIN_ENVS[name](seed=seed)
    except KeyError:
        raise ConfigError(
            f"unknown environment {name!r}; built-ins: {sorted(BUILTIN_ENVS)}"
        ) from None


def env_reset(env, seed: int | None = None) -> np.ndarray:
    return env.reset(seed=seed)


def env_step(env, action) -> tuple[np.ndarray, float, bool]:
    return env.step(action)
