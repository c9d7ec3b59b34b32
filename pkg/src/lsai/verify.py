"""Self-contained oracle suites behind the `verify` subcommand.

Each suite checks an operation against an independent reference: finite
differences for gradients, a hand softmax for attention, a full sort for
pruning, brute-force set arithmetic for Jaccard, exhaustive re-evaluation
for fusion branch selection, and repeated runs for determinism.
"""

import numpy as np

from . import aggregation, fusion, model_core, splitting, world as world_mod
from .model_core import MlpModel, ParamVector


def _gradcheck(n_nets=20, h=1e-5, tol=1e-4, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_nets):
        dims = rng.integers(1, 9, size=4)
        shapes = tuple(model_core.LayerShape(int(a), int(b))
                       for a, b in zip(dims[:-1], dims[1:]))
        params = model_core.random_init(shapes, rng)
        model = MlpModel(params, model_core.SIGMOID if rng.random() < 0.5
                         else model_core.IDENTITY)
        x = rng.normal(size=int(dims[0]))
        t = rng.normal(size=int(dims[-1]))
        grad = model_core.backprop(model, x, t)
        fd = np.zeros_like(params.values)
        for i in range(params.values.size):
            for s, sign in ((h, 1.0), (-h, -1.0)):
                q = params.copy()
                q.values[i] += s
                y = model_core.forward(MlpModel(q, model.out_activation), x)
                fd[i] += sign * 0.5 * np.sum((y - t) ** 2)
        fd /= 2 * h
        denom = np.maximum(np.abs(fd), 1e-6)
        worst = max(worst, float(np.max(np.abs(fd - grad.values) / denom)))
    return worst < tol, f"max rel err {worst:.2e} (tol {tol})"


def suite_gradcheck():
    return _gradcheck()


def suite_softmax(trials=200, seed=1):
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        n = int(rng.integers(1, 10))
        s = rng.uniform(-0.5, 0.5, n)
        temp = float(rng.uniform(0.1, 2.0))
        scores = [aggregation.AttentionScore(i, float(v)) for i, v in enumerate(s)]
        w = aggregation.attention_weights(scores, temp)
        vals = np.array([w.weights[i] for i in range(n)])
        # independent reference
        ref = np.exp(s / temp)
        ref /= ref.sum()
        if abs(vals.sum() - 1.0) > 1e-9 or np.max(np.abs(vals - ref)) > 1e-9:
            return False, "softmax mismatch"
        c = float(rng.uniform(-0.5, 0.5))
        shifted = [aggregation.AttentionScore(i, float(v + c)) for i, v in enumerate(s)]
        w2 = aggregation.attention_weights(shifted, temp)
        v2 = np.array([w2.weights[i] for i in range(n)])
        if np.max(np.abs(v2 - vals)) > 1e-12:
            return False, "shift invariance violated"
    return True, f"{trials} random score vectors"


def suite_prune(seed=2):
    rng = np.random.default_rng(seed)
    shapes = (model_core.LayerShape(8, 8), model_core.LayerShape(8, 4))
    for s in np.arange(0.0, 0.95, 0.1):
        params = model_core.random_init(shapes, rng)
        mask = splitting.build_mask(params, float(s))
        want = int(np.floor(s * params.values.size))
        if mask.n_zeros != want:
            return False, f"zero count {mask.n_zeros} != floor(s*N) {want}"
        # sort oracle: zeroed entries must be exactly the smallest |w|
        order = np.argsort(np.abs(params.values), kind="stable")
        oracle = np.ones(params.values.size, dtype=np.uint8)
        oracle[order[:want]] = 0
        if not np.array_equal(oracle, mask.bits):
            return False, f"mask disagrees with sort oracle at s={s}"
    return True, "sparsity grid 0..0.9 vs sort oracle"


def suite_jaccard(trials=200, seed=3):
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        n = int(rng.integers(0, 200))
        m = int(rng.integers(0, 200))
        a = set(rng.integers(0, 500, n).tolist())
        b = set(rng.integers(0, 500, m).tolist())
        got = world_mod.jaccard(a, b)
        want = (len(a & b) / len(a | b)) if (a or b) else 0.0
        if abs(got - want) > 1e-12:
            return False, f"jaccard {got} != {want}"
    return True, f"{trials} random set pairs vs set arithmetic"


def suite_fusion_argmin(seeds=(0, 1, 2), sparsity=0.5):
    from .policy_rl import OBS_DIM, ACTION_DIM

    for seed in seeds:
        rng = np.random.default_rng(seed)
        shapes = model_core.mlp_shapes(OBS_DIM, ACTION_DIM, hidden=8)
        sai = MlpModel(model_core.random_init(shapes, rng))
        lai = model_core.random_init(shapes, rng)
        mask = splitting.build_mask(lai, sparsity)
        sub = splitting.SubModel(0, splitting.apply_mask(lai, mask), mask)
        wcfg = world_mod.WorldConfig(arena_size=50, cell_size=5.0, n_robots=2,
                                     n_targets=2, sensing_radius=10.0,
                                     max_speed=1.5, seed=seed)
        snap = world_mod.spawn(wcfg)
        cfg = fusion.FusionConfig(branch_train_steps=10, rollout_steps=10)
        data = [(rng.uniform(-1, 1, OBS_DIM), rng.uniform(0, 1, ACTION_DIM))
                for _ in range(16)]
        best, best_obj = fusion.fuse_update(sai, sub, snap, cfg, data, 0, seed)
        # brute force: re-train and re-evaluate every branch independently
        values = []
        for br in fusion.enumerate_branches(sai, sub):
            fz = fusion.FusedModel(sai, sub, br)
            br2 = fusion.train_branch(br, fz, data, cfg.branch_train_steps, cfg)
            fz2 = fusion.FusedModel(sai, sub, br2)
            obj = fusion.evaluate_branch(fz2, snap, cfg.rollout_steps,
                                         cfg.alpha, cfg.beta, seed, 0)
            values.append((br.r, obj.value))
        r_best = min(values, key=lambda t: (t[1], t[0]))[0]
        if best.branch.r != r_best or best_obj.value > min(v for _, v in values):
            return False, f"seed {seed}: picked r={best.branch.r}, oracle r={r_best}"
    return True, f"{len(seeds)} seeds, exhaustive branch re-evaluation"


def suite_determinism():
    wcfg = world_mod.WorldConfig(arena_size=100, cell_size=5.0, n_robots=3,
                                 n_targets=3, seed=11)
    outs = []
    for _ in range(2):
        w = world_mod.spawn(wcfg)
        rng = np.random.default_rng(4)
        for _ in range(20):
            acts = [world_mod.Action(float(rng.random()), float(rng.random()))
                    for _ in w.robots]
            world_mod.step(w, acts, 1.0)
        outs.append((w.covered_cells, w.sensed_count,
                     tuple(float(r.position[0]) for r in w.robots),
                     tuple(float(r.energy) for r in w.robots)))
    ok = outs[0] == outs[1]
    return ok, "two seeded world runs bit-identical" if ok else f"{outs}"


SUITES = [
    ("gradcheck", suite_gradcheck),
    ("softmax", suite_softmax),
    ("prune", suite_prune),
    ("jaccard", suite_jaccard),
    ("fusion-argmin", suite_fusion_argmin),
    ("determinism", suite_determinism),
]


def run_all(report=print):
    ok_all = True
    for name, fn in SUITES:
        ok, detail = fn()
        ok_all &= ok
        report(f"suite={name} status={'pass' if ok else 'fail'} detail={detail}")
    return ok_all
