"""DDPG actor-critic training for sensing path planning.

Each robot owns an actor (observation -> heading/speed, sigmoid head), a
critic (observation+action -> value, identity head), target copies with
soft updates, and a ring replay buffer. The reward trades off fresh
coverage against energy, collisions, and footprint overlap with
neighbors (Jaccard penalty above a threshold).
"""

from dataclasses import dataclass
import math

import numpy as np

from . import kernels, model_core, world as world_mod
from .model_core import MlpModel, ParamVector, SgdConfig
from .world import Action

K_NEIGHBORS = 3
OBS_DIM = 2 + 1 + 2 * K_NEIGHBORS + 2 + 1  # 12
ACTION_DIM = 2

_ACT_LO = 1e-9
_ACT_HI = 1.0 - 1e-9


@dataclass(frozen=True)
class DdpgConfig:
    gamma: float = 0.99
    batch_size: int = 128
    actor_lr: float = 1e-3
    critic_lr: float = 1e-3
    tau: float = 0.01
    noise_sigma: float = 0.1
    noise_sigma_final: float = 0.01
    episodes: int = 300
    buffer_capacity: int = 50_000
    hidden: int = 64
    n_hidden: int = 3
    update_every: int = 1

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0,1]")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must be in [0,1]")


@dataclass(frozen=True)
class RewardWeights:
    coverage: float = 1.0
    energy: float = 0.1
    collision: float = 5.0
    overlap: float = 2.0
    jaccard_threshold: float = 0.2


def sensing_reward(delta, weights=RewardWeights()):
    """w_c*new_cells - w_e*energy - w_x*collision - w_j*max(0, J - J_thr)."""
    return (
        weights.coverage * delta.new_cells
        - weights.energy * delta.energy_spent
        - weights.collision * (1.0 if delta.collision else 0.0)
        - weights.overlap * max(0.0, delta.max_jaccard - weights.jaccard_threshold)
    )


def reward_terms(delta, weights=RewardWeights()):
    """The four addends of sensing_reward, in order."""
    return (
        weights.coverage * delta.new_cells,
        -weights.energy * delta.energy_spent,
        -weights.collision * (1.0 if delta.collision else 0.0),
        -weights.overlap * max(0.0, delta.max_jaccard - weights.jaccard_threshold),
    )


def open_cells_mask(world):
    return ~world.coverage & ~world.obstacles


def observe(world, i, open_mask=None):
    """12-dim normalized observation for robot i."""
    cfg = world.config
    r = world.robots[i]
    if open_mask is None:
        open_mask = open_cells_mask(world)
    obs = np.zeros(OBS_DIM)
    obs[0:2] = 2.0 * r.position / cfg.arena_size - 1.0
    obs[2] = r.energy / cfg.initial_energy
    others = [(float(np.linalg.norm(o.position - r.position)), o)
              for o in world.robots if o.id != r.id]
    others.sort(key=lambda t: (t[0], t[1].id))
    for k, (_, o) in enumerate(others[:K_NEIGHBORS]):
        obs[3 + 2 * k : 5 + 2 * k] = (o.position - r.position) / cfg.arena_size
    dx, dy, dist = kernels.nearest_open_cell(
        float(r.position[0]), float(r.position[1]), open_mask,
        cfg.n_cells, float(cfg.cell_size))
    if dist >= 0.0:
        bearing = math.atan2(dy, dx) - r.heading
        bearing = (bearing + math.pi) % (2 * math.pi) - math.pi
        obs[9] = bearing / math.pi
        obs[10] = dist / (cfg.arena_size * math.sqrt(2))
    if r.footprint.size:
        obs[11] = float(world.coverage[r.footprint].mean())
    return obs


def act(actor, obs, noise_sigma, rng):
    """Deterministic actor output plus Gaussian noise, clamped into (0,1)."""
    out = model_core.forward(actor, np.asarray(obs, dtype=np.float64))
    if noise_sigma > 0.0:
        out = out + rng.normal(0.0, noise_sigma, size=out.shape)
    out = np.clip(out, _ACT_LO, _ACT_HI)
    return Action(float(out[0]), float(out[1]))


def critic_target(reward, done, q_next, gamma):
    """TD target y = r + gamma * q_next on non-terminal transitions."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must be in (0,1]")
    return reward if done else reward + gamma * q_next


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions."""

    def __init__(self, capacity, obs_dim=OBS_DIM, action_dim=ACTION_DIM):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.rewards = np.zeros(capacity)
        self.next_obs = np.zeros((capacity, obs_dim))
        self.dones = np.zeros(capacity)
        self.size = 0
        self._head = 0

    def push(self, obs, action, reward, next_obs, done):
        h = self._head
        self.obs[h] = obs
        self.actions[h] = action
        self.rewards[h] = reward
        self.next_obs[h] = next_obs
        self.dones[h] = 1.0 if done else 0.0
        self._head = (h + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size, rng):
        idx = rng.integers(0, self.size, size=batch_size)
        return (self.obs[idx], self.actions[idx], self.rewards[idx],
                self.next_obs[idx], self.dones[idx])


def soft_update(target, online, tau):
    target.values *= 1.0 - tau
    target.values += tau * online.values


def make_actor(rng, cfg=DdpgConfig()):
    shapes = model_core.mlp_shapes(OBS_DIM, ACTION_DIM, cfg.hidden, cfg.n_hidden)
    return MlpModel(model_core.random_init(shapes, rng), model_core.SIGMOID)


def make_critic(rng, cfg=DdpgConfig()):
    shapes = model_core.mlp_shapes(OBS_DIM + ACTION_DIM, 1, cfg.hidden, cfg.n_hidden)
    return MlpModel(model_core.random_init(shapes, rng), model_core.IDENTITY)


def ddpg_update(actor, critic, target_actor, target_critic, buffer, cfg, rng):
    """One DDPG step: critic MSE regression to TD targets, actor ascent
    along the critic's action gradient, then soft target updates.

    Returns False (no-op) while the buffer is short of a batch.
    """
    if buffer.size < cfg.batch_size:
        return False
    obs, actions, rewards, next_obs, dones = buffer.sample(cfg.batch_size, rng)

    a_next = model_core.forward(target_actor, next_obs)
    q_next = model_core.forward(target_critic, np.hstack([next_obs, a_next]))[:, 0]
    y = rewards + cfg.gamma * (1.0 - dones) * q_next

    x = np.hstack([obs, actions])
    q, cacts = model_core.forward_cache(critic, x)
    cgrad, _ = model_core.backward(critic, cacts, q - y[:, None])
    critic.params = model_core.sgd_step(
        critic.params, cgrad, SgdConfig(cfg.critic_lr, cfg.batch_size))

    a_pred, aacts = model_core.forward_cache(actor, obs)
    q2, c2acts = model_core.forward_cache(critic, np.hstack([obs, a_pred]))
    _, dq_dx = model_core.backward(critic, c2acts, -np.ones_like(q2))
    da = dq_dx[:, obs.shape[1]:]
    agrad, _ = model_core.backward(actor, aacts, da)
    actor.params = model_core.sgd_step(
        actor.params, agrad, SgdConfig(cfg.actor_lr, cfg.batch_size))

    soft_update(target_actor.params, actor.params, cfg.tau)
    soft_update(target_critic.params, critic.params, cfg.tau)
    return True


class DdpgTrainer:
    """Per-robot learner owning its nets, buffer, and RNG."""

    def __init__(self, seed, cfg=DdpgConfig(), reward_weights=RewardWeights()):
        self.cfg = cfg
        self.reward_weights = reward_weights
        self.rng = np.random.default_rng(seed)
        self.actor = make_actor(self.rng, cfg)
        self.critic = make_critic(self.rng, cfg)
        self.target_actor = self.actor.copy()
        self.target_critic = self.critic.copy()
        self.buffer = ReplayBuffer(cfg.buffer_capacity)
        self.episode = 0
        self.recent_obs = []  # bounded history for distillation datasets
        self._step_count = 0

    @property
    def noise_sigma(self):
        frac = min(1.0, self.episode / max(1, self.cfg.episodes - 1))
        return self.cfg.noise_sigma + frac * (self.cfg.noise_sigma_final
                                              - self.cfg.noise_sigma)

    def select_action(self, obs, explore=True):
        sigma = self.noise_sigma if explore else 0.0
        return act(self.actor, obs, sigma, self.rng)

    def record(self, obs, action, reward, next_obs, done):
        self.buffer.push(obs, (action.heading_frac, action.speed_frac),
                         reward, next_obs, done)
        self.recent_obs.append(np.asarray(obs))
        if len(self.recent_obs) > 512:
            del self.recent_obs[:-512]
        self._step_count += 1
        if self._step_count % self.cfg.update_every == 0:
            self.update()

    def update(self):
        return ddpg_update(self.actor, self.critic, self.target_actor,
                           self.target_critic, self.buffer, self.cfg, self.rng)

    def end_episode(self):
        self.episode += 1


def run_training_episode(trainer, world, steps, dt=1.0, explore=True):
    """Drive one robot-per-trainer world for `steps` ticks, learning online.

    Returns per-trainer episode reward sums.
    """
    n = len(world.robots)
    trainers = trainer if isinstance(trainer, (list, tuple)) else [trainer]
    if len(trainers) != n:
        raise ValueError("need one trainer per robot")
    open_mask = open_cells_mask(world)
    obs = [observe(world, i, open_mask) for i in range(n)]
    totals = np.zeros(n)
    for t in range(steps):
        actions = [tr.select_action(o, explore) for tr, o in zip(trainers, obs)]
        world_mod.step(world, actions, dt)
        open_mask = open_cells_mask(world)
        done = t == steps - 1
        for i, tr in enumerate(trainers):
            nobs = observe(world, i, open_mask)
            r = sensing_reward(world.deltas[i], tr.reward_weights)
            tr.record(obs[i], actions[i], r, nobs, done)
            totals[i] += r
            obs[i] = nobs
    for tr in trainers:
        tr.end_episode()
    return totals


def train_single_robot(world_cfg, cfg, seed, episodes, steps_per_episode, dt=1.0):
    """Train one robot across fresh worlds; returns coverage fraction per
    episode (the learning-signal smoke metric)."""
    import dataclasses

    trainer = DdpgTrainer(seed, cfg)
    history = []
    for ep in range(episodes):
        w = world_mod.spawn(dataclasses.replace(world_cfg, seed=world_cfg.seed + ep))
        run_training_episode(trainer, w, steps_per_episode, dt)
        history.append(w.covered_cells / w.coverage.size)
    return history
