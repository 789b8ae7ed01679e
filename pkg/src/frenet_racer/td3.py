"""
TD3: twin critics, clipped target-policy smoothing and delayed actor
updates, on top of :mod:`frenet_racer.nn`.  Also holds the replay buffer
and the per-step racing reward.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .nn import Adam, Array, Mlp, backward, forward_with_cache, mlp_forward

HIDDEN = (400, 300)


@dataclass(frozen=True)
class Td3Config:
    gamma: float = 0.99
    tau: float = 0.005
    expl_noise: float = 0.1
    policy_noise: float = 0.2
    noise_clip: float = 0.5
    policy_delay: int = 2
    batch_size: int = 100
    lr: float = 1e-3
    buffer_capacity: int = 1_000_000
    warmup_steps: int = 1000
    # weight of mean squared actor pre-activation added to the actor loss;
    # 0 is plain TD3, a small value keeps tanh outputs out of saturation
    preact_penalty: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        if self.policy_delay < 1:
            raise ValueError("policy_delay must be >= 1")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ValueError("need 1 <= batch_size <= buffer_capacity")
        if min(self.expl_noise, self.policy_noise, self.noise_clip) < 0.0 or self.lr <= 0.0:
            raise ValueError("noise levels must be non-negative and lr positive")
        if self.preact_penalty < 0.0:
            raise ValueError("preact_penalty must be non-negative")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be non-negative")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class RewardConstants:
    r_collision: float = -1.0
    r_dist: float = 1.0
    r_time: float = -0.01

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def compute_reward(progress_delta: float, collided: bool, constants: RewardConstants) -> float:
    if collided:
        return constants.r_collision
    return constants.r_dist * progress_delta + constants.r_time


class Transition(NamedTuple):
    obs: Array
    action: Array
    reward: float
    next_obs: Array
    done: bool


class Batch(NamedTuple):
    obs: Array
    action: Array
    reward: Array
    next_obs: Array
    done: Array


class ReplayBuffer:
    """Fixed-capacity ring buffer of transitions stored column-wise."""

    def __init__(self, obs_dim: int, act_dim: int, capacity: int):
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim))
        self.action = np.zeros((capacity, act_dim))
        self.reward = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.done = np.zeros(capacity)
        self.ptr = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, obs, action, reward: float, next_obs, done: bool) -> None:
        action = np.asarray(action, dtype=float)
        if np.any(np.abs(action) > 1.0):
            raise ValueError("actions must lie in [-1, 1]")
        i = self.ptr
        self.obs[i] = obs
        self.action[i] = action
        self.reward[i] = reward
        self.next_obs[i] = next_obs
        self.done[i] = float(done)
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def add_transition(self, t: Transition) -> None:
        self.add(t.obs, t.action, t.reward, t.next_obs, t.done)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        if self.size < batch_size:
            raise ValueError(f"buffer holds {self.size} transitions, need {batch_size}")
        idx = rng.integers(0, self.size, size=batch_size)
        return Batch(self.obs[idx], self.action[idx], self.reward[idx],
                     self.next_obs[idx], self.done[idx])


def select_action(actor: Mlp, obs, noise_std: float, rng: np.random.Generator | None = None) -> Array:
    """Deterministic policy output plus optional Gaussian exploration noise, clamped to [-1, 1]."""
    action = mlp_forward(actor, obs)
    if noise_std > 0.0:
        action = action + rng.normal(0.0, noise_std, action.shape)
    return np.clip(action, -1.0, 1.0)


def polyak_update(target: Mlp, source: Mlp, tau: float) -> None:
    for pt, ps in zip(target.params(), source.params()):
        if tau == 1.0:
            pt[...] = ps
        else:
            pt *= 1.0 - tau
            pt += tau * ps


class UpdateResult(NamedTuple):
    critic1_loss: float
    critic2_loss: float
    actor_loss: float | None


class Td3Agent:
    """Actor, twin critics, their targets and optimizer state."""

    def __init__(self, obs_dim: int, act_dim: int, cfg: Td3Config, rng: np.random.Generator,
                 hidden: tuple[int, ...] = HIDDEN):
        self.cfg = cfg
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.actor = Mlp.init((obs_dim, *hidden, act_dim), "tanh", rng, final_scale=0.01)
        self.critic1 = Mlp.init((obs_dim + act_dim, *hidden, 1), "linear", rng)
        self.critic2 = Mlp.init((obs_dim + act_dim, *hidden, 1), "linear", rng)
        self.actor_target = self.actor.copy()
        self.critic1_target = self.critic1.copy()
        self.critic2_target = self.critic2.copy()
        self.actor_opt = Adam(self.actor.params(), lr=cfg.lr)
        self.critic1_opt = Adam(self.critic1.params(), lr=cfg.lr)
        self.critic2_opt = Adam(self.critic2.params(), lr=cfg.lr)
        self.update_count = 0

    def networks(self) -> dict[str, Mlp]:
        return {
            "actor": self.actor, "actor_target": self.actor_target,
            "critic1": self.critic1, "critic1_target": self.critic1_target,
            "critic2": self.critic2, "critic2_target": self.critic2_target,
        }

    def optimizers(self) -> dict[str, Adam]:
        return {"actor": self.actor_opt, "critic1": self.critic1_opt, "critic2": self.critic2_opt}

    def act(self, obs, noise_std: float = 0.0, rng: np.random.Generator | None = None) -> Array:
        return select_action(self.actor, obs, noise_std, rng)

    def td_target(self, batch: Batch, rng: np.random.Generator) -> Array:
        cfg = self.cfg
        noise = np.clip(rng.normal(0.0, cfg.policy_noise, batch.action.shape),
                        -cfg.noise_clip, cfg.noise_clip)
        next_action = np.clip(mlp_forward(self.actor_target, batch.next_obs) + noise, -1.0, 1.0)
        critic_in = np.concatenate([batch.next_obs, next_action], axis=1)
        q1 = mlp_forward(self.critic1_target, critic_in)[:, 0]
        q2 = mlp_forward(self.critic2_target, critic_in)[:, 0]
        return batch.reward + cfg.gamma * (1.0 - batch.done) * np.minimum(q1, q2)

    def critic_step(self, batch: Batch, target: Array) -> tuple[float, float]:
        critic_in = np.concatenate([batch.obs, batch.action], axis=1)
        n = target.shape[0]
        losses = []
        for critic, opt in ((self.critic1, self.critic1_opt), (self.critic2, self.critic2_opt)):
            cache = forward_with_cache(critic, critic_in)
            err = cache.output[:, 0] - target
            losses.append(float(np.mean(err * err)))
            grads, _ = backward(critic, cache, (2.0 / n) * err[:, None])
            opt.step(grads)
        return losses[0], losses[1]

    def actor_step(self, obs: Array) -> float:
        actor_cache = forward_with_cache(self.actor, obs)
        critic_in = np.concatenate([obs, actor_cache.output], axis=1)
        critic_cache = forward_with_cache(self.critic1, critic_in)
        n = obs.shape[0]
        _, d_in = backward(self.critic1, critic_cache, np.full((n, 1), -1.0 / n))
        loss = float(-np.mean(critic_cache.output))
        pre_grad = None
        lam = self.cfg.preact_penalty
        if lam > 0.0:
            pre = actor_cache.inputs[-1] @ self.actor.weights[-1] + self.actor.biases[-1]
            loss += lam * float(np.sum(pre * pre)) / n
            pre_grad = (2.0 * lam / n) * pre
        grads, _ = backward(self.actor, actor_cache, d_in[:, self.obs_dim:], pre_grad)
        self.actor_opt.step(grads)
        return loss

    def update(self, buffer: ReplayBuffer, rng: np.random.Generator) -> UpdateResult | None:
        """One TD3 iteration; ``None`` while the buffer is smaller than a batch."""
        cfg = self.cfg
        if len(buffer) < cfg.batch_size:
            return None
        self.update_count += 1
        batch = buffer.sample(cfg.batch_size, rng)
        target = self.td_target(batch, rng)
        c1, c2 = self.critic_step(batch, target)
        actor_loss = None
        if self.update_count % cfg.policy_delay == 0:
            actor_loss = self.actor_step(batch.obs)
            polyak_update(self.actor_target, self.actor, cfg.tau)
            polyak_update(self.critic1_target, self.critic1, cfg.tau)
            polyak_update(self.critic2_target, self.critic2, cfg.tau)
        return UpdateResult(c1, c2, actor_loss)


def td3_update(agent: Td3Agent, buffer: ReplayBuffer, rng: np.random.Generator) -> UpdateResult | None:
    return agent.update(buffer, rng)
