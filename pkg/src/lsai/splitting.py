"""Magnitude-based splitting of the global model into per-robot sub-models.

A sparsity level selects the floor(s*N) smallest-magnitude entries, those
are zeroed through a binary mask, and the survivors are fine-tuned on the
robot's own trajectory data with gradients masked so pruned entries stay
exactly zero. The ramp over rounds is linear.
"""

from dataclasses import dataclass

import numpy as np

from . import model_core
from .model_core import MlpModel, ParamVector, SgdConfig


@dataclass
class SparsityMask:
    bits: np.ndarray  # uint8 0/1, aligned to ParamVector.values
    sparsity: float

    def __post_init__(self):
        self.bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        if not 0.0 <= self.sparsity < 1.0:
            raise ValueError(f"sparsity {self.sparsity} outside [0,1)")

    @property
    def n_zeros(self):
        return int(self.bits.size - self.bits.sum())


@dataclass
class SubModel:
    robot_id: int
    params: ParamVector
    mask: SparsityMask
    out_activation: str = model_core.SIGMOID

    def model(self):
        return MlpModel(self.params, self.out_activation)


@dataclass(frozen=True)
class PruneSchedule:
    rounds: int = 3
    final_sparsity: float = 0.5
    fine_tune_steps: int = 30

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 0.0 <= self.final_sparsity < 1.0:
            raise ValueError("final_sparsity must be in [0,1)")
        if self.fine_tune_steps < 0:
            raise ValueError("fine_tune_steps must be >= 0")

    def sparsity_at(self, round_idx):
        # linear ramp, 1-based round index, ends exactly at final_sparsity
        return self.final_sparsity * (round_idx + 1) / self.rounds


def build_mask(params, sparsity):
    """Zero the floor(s*N) globally smallest |w|; ties prune lower index first."""
    if not 0.0 <= sparsity < 1.0:
        raise ValueError(f"sparsity {sparsity} outside [0,1)")
    n = params.values.size
    k = int(np.floor(sparsity * n))
    bits = np.ones(n, dtype=np.uint8)
    if k > 0:
        order = np.argsort(np.abs(params.values), kind="stable")
        bits[order[:k]] = 0
    return SparsityMask(bits, sparsity)


def apply_mask(params, mask):
    if mask.bits.size != params.values.size:
        raise ValueError("mask length does not match param vector")
    return ParamVector(params.values * mask.bits, params.shapes)


def _as_arrays(dataset):
    xs = np.asarray([np.asarray(x, dtype=np.float64) for x, _ in dataset])
    ys = np.asarray([np.asarray(t, dtype=np.float64) for _, t in dataset])
    return xs, ys


def fine_tune(sub, dataset, steps, cfg):
    """Masked SGD on (input, target) pairs; pruned coordinates never move."""
    if steps == 0:
        return sub
    if not dataset:
        raise ValueError("fine_tune: empty dataset with steps > 0")
    xs, ys = _as_arrays(dataset)
    n = xs.shape[0]
    params = sub.params.copy()
    bits = sub.mask.bits
    for step in range(steps):
        idx = np.arange(step * cfg.batch_size, (step + 1) * cfg.batch_size) % n
        model = MlpModel(params, sub.out_activation)
        y, acts = model_core.forward_cache(model, xs[idx])
        grad, _ = model_core.backward(model, acts, y - ys[idx])
        grad.values *= bits
        params = model_core.sgd_step(params, grad, cfg)
    return SubModel(sub.robot_id, params, sub.mask, sub.out_activation)


def mean_loss(params, out_activation, dataset):
    xs, ys = _as_arrays(dataset)
    y = model_core.forward(MlpModel(params, out_activation), xs)
    return float(np.mean(0.5 * np.sum((y - ys) ** 2, axis=1)))


def split_for_robot(lai, schedule, trajectory_data, robot_id, cfg=None,
                    out_activation=model_core.SIGMOID, warnings=None):
    """Iteratively prune (ramped sparsity) and fine-tune for one robot.

    Masks are ranked on the global model's own values, so every robot gets
    the same mask at a given sparsity; customization comes from the robot's
    trajectory data during fine-tuning.
    """
    cfg = cfg or SgdConfig(learning_rate=1e-3, batch_size=32)
    steps = schedule.fine_tune_steps
    if steps > 0 and not trajectory_data:
        if warnings is not None:
            warnings.append(f"robot {robot_id}: no trajectory data, fine-tuning skipped")
        steps = 0
    params = lai.copy()
    sub = None
    for r in range(schedule.rounds):
        mask = build_mask(lai, schedule.sparsity_at(r))
        sub = SubModel(robot_id, apply_mask(params, mask), mask, out_activation)
        if steps > 0:
            sub = fine_tune(sub, trajectory_data, steps, cfg)
        params = sub.params
    return sub
