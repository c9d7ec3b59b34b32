"""Attention-weighted model aggregation at the edge.

Each uploaded local model is scored by the cosine alignment of its update
delta with the mean update, scores are softmax-normalized into weights,
and the new global model is the weighted sum. Plain uniform averaging
(FedAvg) is the comparison baseline and falls out of uniform weights.
"""

from dataclasses import dataclass, field

import numpy as np

from .model_core import ParamVector

EPS_NORM = 1e-12


@dataclass(frozen=True)
class AttentionScore:
    robot_id: int
    score: float

    def __post_init__(self):
        if not np.isfinite(self.score) or abs(self.score) > 1.0 + 1e-12:
            raise ValueError(f"attention score out of [-1,1]: {self.score}")


@dataclass
class AttentionWeights:
    weights: dict  # robot_id -> weight in [0,1], sums to 1
    temperature: float


@dataclass
class EligibilityRecord:
    """Per-robot standing at the edge: EMA of past scores plus last position."""

    robot_id: int
    historical_score: float = 0.0
    last_known_position: tuple = (0.0, 0.0)

    def update(self, score, decay=0.9):
        self.historical_score = decay * self.historical_score + (1.0 - decay) * score
        self.historical_score = float(np.clip(self.historical_score, -1.0, 1.0))


def attention_score(local, global_prev, mean_update, robot_id=0):
    """Cosine between this robot's update delta and the mean update."""
    if local.shapes != global_prev.shapes or local.shapes != mean_update.shapes:
        raise ValueError("attention_score: shape mismatch between models")
    delta = local.values - global_prev.values
    m = mean_update.values
    na = np.linalg.norm(delta)
    nb = np.linalg.norm(m)
    if na < EPS_NORM or nb < EPS_NORM:
        return AttentionScore(robot_id, 0.0)
    cos = float(np.dot(delta, m) / (na * nb))
    return AttentionScore(robot_id, float(np.clip(cos, -1.0, 1.0)))


def mean_update(locals_, global_prev):
    """Mean of (theta_i - theta_g) over uploads."""
    if not locals_:
        raise ValueError("mean_update: no models")
    acc = np.zeros_like(global_prev.values)
    for p in locals_:
        if p.shapes != global_prev.shapes:
            raise ValueError("mean_update: shape mismatch")
        acc += p.values - global_prev.values
    return ParamVector(acc / len(locals_), global_prev.shapes)


def attention_weights(scores, temperature=0.5):
    """Softmax of scores/temperature; weights sum to one."""
    if not scores:
        raise ValueError("attention_weights: empty score list")
    if not temperature > 0:
        raise ValueError("attention_weights: temperature must be > 0")
    s = np.array([sc.score for sc in scores]) / temperature
    s -= s.max()  # shift invariance / overflow guard
    e = np.exp(s)
    w = e / e.sum()
    return AttentionWeights(
        weights={sc.robot_id: float(wi) for sc, wi in zip(scores, w)},
        temperature=temperature,
    )


def aggregate(weighted_models):
    """Weighted elementwise sum of (ParamVector, weight) pairs."""
    if not weighted_models:
        raise ValueError("aggregate: empty model list")
    shapes = weighted_models[0][0].shapes
    wsum = sum(w for _, w in weighted_models)
    if abs(wsum - 1.0) > 1e-6:
        raise ValueError(f"aggregate: weights sum to {wsum}, expected 1")
    acc = np.zeros(weighted_models[0][0].values.size)
    for p, w in weighted_models:
        if p.shapes != shapes:
            raise ValueError("aggregate: shape mismatch")
        acc += w * p.values
    return ParamVector(acc, shapes)


def fedavg(models):
    """Uniform-mean baseline."""
    n = len(models)
    return aggregate([(m, 1.0 / n) for m in models])


def select_participants(records, edge_position, radius, min_history, rng=None):
    """Robots in range of the edge with adequate historical standing.

    Falls back to the nearest max(2, available) robots with the history
    filter relaxed when fewer than 2 qualify.
    """
    if not radius > 0:
        raise ValueError("select_participants: radius must be > 0")
    ex, ey = edge_position
    in_range = []
    for r in records:
        dx = r.last_known_position[0] - ex
        dy = r.last_known_position[1] - ey
        d = np.hypot(dx, dy)
        if d <= radius:
            in_range.append((d, r))
    qualified = {r.robot_id for d, r in in_range if r.historical_score >= min_history}
    if len(qualified) >= 2:
        return qualified
    # relax the history filter; top up to 2 from the nearest robots overall
    if len(in_range) >= 2:
        return {r.robot_id for _, r in in_range}
    ranked = sorted(
        records,
        key=lambda r: (np.hypot(r.last_known_position[0] - ex, r.last_known_position[1] - ey), r.robot_id),
    )
    return {r.robot_id for r in ranked[: min(len(ranked), 2)]}
