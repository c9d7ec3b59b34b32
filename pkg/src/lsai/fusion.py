"""Branch fusion of a pruned sub-model into a local policy network.

The local net is viewed as a layer graph; at each candidate inter-layer
position r the sub-model's hidden activation is projected through a
learnable affine transform and summed into the local net's pre-activation.
Transforms start at zero, so an untrained branch reproduces the base
network exactly. The adopted branch is the one minimizing an
energy-plus-collision rollout objective.
"""

from dataclasses import dataclass, field

import numpy as np

from . import model_core, policy_rl, world as world_mod
from .model_core import MlpModel, ParamVector, SgdConfig
from .world import Action


@dataclass
class ModelGraph:
    layers: tuple
    injection_points: tuple

    @classmethod
    def of(cls, model):
        n = len(model.params.shapes)
        return cls(model.params.shapes, tuple(range(1, n)))


@dataclass
class FusionBranch:
    r: int
    weight: np.ndarray  # (base width at r) x (sub width at r)
    bias: np.ndarray
    combine_op: str = "sum"

    def copy(self):
        return FusionBranch(self.r, self.weight.copy(), self.bias.copy(),
                            self.combine_op)

    def n_bytes(self):
        shape = model_core.LayerShape(self.weight.shape[1], self.weight.shape[0])
        return model_core.serialized_size((shape,))


@dataclass
class FusedModel:
    base: MlpModel
    sub: object  # splitting.SubModel
    branch: FusionBranch


@dataclass
class BranchObjective:
    energy_used: float
    collision_count: int
    value: float


@dataclass(frozen=True)
class FusionConfig:
    branch_train_steps: int = 50
    transform_lr: float = 1e-3
    batch_size: int = 32
    rollout_steps: int = 30
    alpha: float = 1.0  # per joule
    beta: float = 10.0  # per collision
    rollout_noise: float = 0.0
    fusion_capacity: int = 64
    deadline_s: float = 30.0
    fallback_fraction: float = 0.1  # of the normal episode budget


def enumerate_branches(sai, sub):
    """One zero-initialized branch per inter-layer position of the base net."""
    sub_model = sub.model()
    if sai.input_dim != sub_model.input_dim:
        raise ValueError("base and sub-model input dims differ")
    base_shapes = sai.params.shapes
    sub_shapes = sub_model.params.shapes
    branches = []
    for r in range(1, len(base_shapes)):
        if r >= len(sub_shapes):
            break  # sub-model has no hidden activation this deep
        base_w = base_shapes[r - 1].output_dim
        sub_w = sub_shapes[r - 1].output_dim
        branches.append(FusionBranch(r, np.zeros((base_w, sub_w)), np.zeros(base_w)))
    return branches


def _sub_activation(fused, x):
    """Sub-model hidden activation at the branch position."""
    _, acts = model_core.forward_cache(fused.sub.model(), x)
    return acts[fused.branch.r]


def fused_forward_cache(fused, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != fused.base.input_dim:
        raise ValueError("input dim mismatch")
    h_sub = _sub_activation(fused, x)
    layers = fused.base.params.layer_views()
    br = fused.branch
    acts = [x]
    h = x
    inj = h_sub @ br.weight.T + br.bias
    for i, (w, b) in enumerate(layers):
        z = h @ w.T + b
        if i == br.r - 1:
            z = z + inj
        last = i == len(layers) - 1
        h = z if (last and fused.base.out_activation == model_core.IDENTITY) else model_core.sigmoid(z)
        acts.append(h)
    return h, acts, h_sub


def fused_forward(fused, x):
    return fused_forward_cache(fused, x)[0]


def train_branch(branch, fused, dataset, steps, cfg):
    """Fit only the branch transform by MSE on (input, target) pairs; base
    and sub parameters are never touched."""
    if steps == 0:
        return branch.copy()
    if not dataset:
        raise ValueError("train_branch: empty dataset with steps > 0")
    xs = np.asarray([np.asarray(x, dtype=np.float64) for x, _ in dataset])
    ys = np.asarray([np.asarray(t, dtype=np.float64) for _, t in dataset])
    n = xs.shape[0]
    br = branch.copy()
    work = FusedModel(fused.base, fused.sub, br)
    layers = fused.base.params.layer_views()
    for step in range(steps):
        idx = np.arange(step * cfg.batch_size, (step + 1) * cfg.batch_size) % n
        y, acts, h_sub = fused_forward_cache(work, xs[idx])
        d = y - ys[idx]
        bsz = xs[idx].shape[0]
        # backprop down to the pre-activation at the branch layer
        for i in range(len(layers) - 1, br.r - 1, -1):
            h = acts[i + 1]
            last = i == len(layers) - 1
            if not (last and fused.base.out_activation == model_core.IDENTITY):
                d = d * h * (1.0 - h)
            d = d @ layers[i][0]
        h_r = acts[br.r]
        d = d * h_r * (1.0 - h_r)  # branch layer activation is sigmoid
        gw = (d.T @ h_sub) / bsz
        gb = d.mean(axis=0)
        br.weight -= cfg.transform_lr * gw
        br.bias -= cfg.transform_lr * gb
    return br


def evaluate_branch(fused, world_snapshot, rollout_steps, alpha, beta, rng_seed,
                    robot_index=0, noise_sigma=0.0, dt=1.0):
    """Roll the fused actor in a cloned world; other robots hold position.

    Returns the energy/collision objective, deterministic per seed.
    """
    if rollout_steps < 1:
        raise ValueError("rollout_steps must be >= 1")
    w = world_snapshot.clone()
    rng = np.random.default_rng(rng_seed)
    energy = 0.0
    collisions = 0
    open_mask = policy_rl.open_cells_mask(w)
    for _ in range(rollout_steps):
        obs = policy_rl.observe(w, robot_index, open_mask)
        out = fused_forward(fused, obs)
        if noise_sigma > 0.0:
            out = np.clip(out + rng.normal(0.0, noise_sigma, out.shape), 1e-9, 1 - 1e-9)
        actions = [None] * len(w.robots)
        actions[robot_index] = Action(float(out[0]), float(out[1]))
        world_mod.step(w, actions, dt)
        open_mask = policy_rl.open_cells_mask(w)
        energy += w.deltas[robot_index].energy_spent
        if w.deltas[robot_index].collision:
            collisions += 1
    return BranchObjective(energy, collisions, alpha * energy + beta * collisions)


def fuse_update(sai, sub, world_snapshot, cfg, dataset, robot_index=0, seed=0):
    """Enumerate, train, and evaluate branches; return the argmin FusedModel.

    Ties break toward the smaller branch index. Base and sub parameters are
    left untouched; only the winning transform is new.
    """
    branches = enumerate_branches(sai, sub)
    best = None
    best_obj = None
    for branch in branches:
        fused = FusedModel(sai, sub, branch)
        if cfg.branch_train_steps > 0 and dataset:
            branch = train_branch(branch, fused, dataset,
                                  cfg.branch_train_steps,
                                  cfg)
            fused = FusedModel(sai, sub, branch)
        obj = evaluate_branch(fused, world_snapshot, cfg.rollout_steps,
                              cfg.alpha, cfg.beta, seed,
                              robot_index=robot_index,
                              noise_sigma=cfg.rollout_noise)
        if best_obj is None or obj.value < best_obj.value:
            best, best_obj = fused, obj
    return best, best_obj


def should_fallback(robots_at_edge, elapsed_s, cfg):
    """Fusion is skipped for overloaded edges or missed deadlines."""
    return robots_at_edge > cfg.fusion_capacity or elapsed_s > cfg.deadline_s


def fallback_retrain(world_cfg, ddpg_cfg, seed, iterations, steps_per_episode=100):
    """Fresh local policy trained for a reduced episode budget."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    import dataclasses

    trainer = policy_rl.DdpgTrainer(seed, ddpg_cfg)
    for ep in range(iterations):
        w = world_mod.spawn(dataclasses.replace(world_cfg, seed=world_cfg.seed + ep))
        policy_rl.run_training_episode(trainer, w, steps_per_episode)
    return trainer.actor
