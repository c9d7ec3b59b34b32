"""Method pipelines, metrics, and the sweep harness.

Three ways to run the same sensing mission on one simulated clock:

  lsai         per-robot DDPG + edge rounds of attention aggregation,
               magnitude splitting, and branch fusion; robots keep acting
               with their current policies while models are in flight.
  centralized  robots upload raw observation batches to a cloud trainer
               over a backhaul link and replay the downlinked action
               schedule open-loop; while the next exchange is in flight
               they keep replaying the tail of the previous schedule, so
               each schedule executes from a position the cloud never saw.
  distributed  per-robot DDPG with uniform model averaging over radio
               neighbors each round; no global model.

Every run is fully determined by (method config, world config, seed).
"""

from dataclasses import dataclass, field, replace
import csv
import io
import json
import math
import time

import numpy as np

from . import aggregation, comms, fusion, model_core, policy_rl, splitting, world as world_mod
from .comms import CommsConfig, Packet
from .fusion import FusionConfig
from .model_core import MlpModel, SgdConfig
from .policy_rl import DdpgConfig, RewardWeights
from .world import Action, WorldConfig

METHODS = (comms.EDGE_LSAI, comms.CENTRALIZED, comms.DISTRIBUTED)

CSV_COLUMNS = [
    "scenario_id", "method", "n_robots", "n_targets", "seed",
    "sensing_accuracy", "path_efficiency", "response_time_s", "censored",
    "energy_total_j", "collisions", "bytes_transmitted", "rounds", "wall_ms",
]

PACKET_COLUMNS = ["round", "src", "dst", "bytes", "created_at_s", "delivered_at_s"]


@dataclass
class Metrics:
    sensing_accuracy: float
    path_efficiency: float
    response_time: float  # seconds; inf when censored
    energy_total: float
    collisions: int
    bytes_transmitted: int


@dataclass
class RoundReport:
    round: int
    attention_weights: dict = field(default_factory=dict)
    bytes: int = 0
    completion_times: dict = field(default_factory=dict)
    accuracy: float = 0.0
    coverage_cells: int = 0
    warnings: list = field(default_factory=list)
    packets: list = field(default_factory=list)  # (src, dst, bytes, created, delivered)


@dataclass(frozen=True)
class MethodConfig:
    method: str = comms.EDGE_LSAI
    rounds: int = 4
    act_seconds: float = 60.0
    mission_seconds: float = 260.0
    train_episodes: int = 1
    dt: float = 1.0
    participants_fraction: float = 1.0
    response_threshold: float = 0.5
    edge_radius: float = 300.0
    min_history: float = 0.0
    temperature: float = 0.5
    ema_decay: float = 0.9
    sparsity: float = 0.5
    prune_rounds: int = 2
    fine_tune_steps: int = 15
    distill_samples: int = 64
    ddpg: DdpgConfig = DdpgConfig()
    fusion: FusionConfig = FusionConfig(rollout_steps=20)
    reward: RewardWeights = RewardWeights()
    comms: CommsConfig = CommsConfig()

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 < self.participants_fraction <= 1.0:
            raise ValueError("participants_fraction must be in (0,1]")
        if not 0.0 < self.response_threshold <= 1.0:
            raise ValueError("response_threshold must be in (0,1]")
        if self.train_episodes < 1:
            raise ValueError("train_episodes must be >= 1")


# -- metrics ------------------------------------------------------------------

def sensing_accuracy(world):
    """Sensed targets over all targets."""
    return world.sensed_count / len(world.targets)


def path_efficiency(world):
    """Unique covered cells over the footprint-sweep upper bound, in [0,1].

    The bound is the cell count a robot sweeping virgin ground would touch:
    sum_i distance_i * 2 * sensing_radius / cell_area. Zero movement -> 0.
    """
    c = world.config
    if world.distance_total <= 0.0:
        return 0.0
    bound = world.distance_total * 2.0 * c.sensing_radius / (c.cell_size ** 2)
    return min(1.0, world.covered_cells / bound)


def response_time(world, threshold, recognition_times=None):
    """Clock at which the sensed fraction first reached threshold; inf if
    it never did.

    By default a target counts at its physical first-sensed clock, which
    is right for architectures whose on-board models interpret sensor
    data where it is collected. `recognition_times` overrides this with
    the clocks at which the decision point actually learned of each
    target (None entries = never reported), so communication delays are
    part of the response."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0,1]")
    k = math.ceil(threshold * len(world.targets))
    if recognition_times is not None:
        times = sorted(t for t in recognition_times if t is not None)
    else:
        times = sorted(t.first_sensed_time for t in world.targets if t.sensed)
    if len(times) < k:
        return math.inf
    return times[k - 1]


# -- shared mission plumbing --------------------------------------------------

class _Mission:
    def __init__(self, mcfg, world_cfg, seed):
        self.mcfg = mcfg
        self.world_cfg = replace(world_cfg, seed=seed)
        self.seed = seed
        self.world = world_mod.spawn(self.world_cfg)
        self.reports = []
        self.bytes_total = 0
        self.open_mask = policy_rl.open_cells_mask(self.world)
        self.recorder = None
        self.recognized_times = None  # decision-point recognition clocks

    def enable_trace(self):
        self.recorder = world_mod.TraceRecorder(self.world)

    def remaining(self):
        return self.mcfg.mission_seconds - self.world.clock

    def has_time(self):
        return self.remaining() >= 0.75 * self.mcfg.dt

    def act_ticks(self, phase_seconds):
        ticks = min(phase_seconds, max(0.0, self.remaining())) / self.mcfg.dt
        return int(round(ticks))


def _advance(mission, actions_fn, ticks, on_transition=None):
    """Step the world `ticks` times pulling actions from actions_fn(obs_list)."""
    w = mission.world
    n = len(w.robots)
    obs = [policy_rl.observe(w, i, mission.open_mask) for i in range(n)]
    for _ in range(ticks):
        actions = actions_fn(obs)
        world_mod.step(w, actions, mission.mcfg.dt)
        if mission.recorder is not None:
            mission.recorder.record(w)
        mission.open_mask = policy_rl.open_cells_mask(w)
        nobs = [policy_rl.observe(w, i, mission.open_mask) for i in range(n)]
        if on_transition is not None:
            on_transition(obs, actions, nobs)
        obs = nobs


def _distill_dataset(model, observations, k):
    """(obs, model(obs)) pairs from the most recent k observations."""
    if not observations:
        return []
    obs = observations[-k:]
    xs = np.asarray(obs)
    ys = model_core.forward(model, xs)
    return list(zip(xs, ys))


def _comm_phase_log(report, link):
    for p in link.log:
        report.packets.append((p.src, p.dst, p.size, p.created_at, p.delivered_at))
    link.log.clear()


def _episode_world_seed(seed, ep, total):
    """Training episodes run on derived world seeds; the final (measured)
    episode uses the run seed itself so results stay comparable across
    training budgets."""
    return seed if ep == total - 1 else seed + 100003 * (ep + 1)


def _train_episodes(mcfg, world_cfg, seed, trace, episode_fn):
    """Drive `train_episodes` missions with persistent learner state.

    episode_fn(mission, ep) runs one full mission and returns its round
    count. Metrics are taken from the last mission; reports, bytes, and
    round counts accumulate over all of them.
    """
    reports, total_bytes, total_rounds = [], 0, 0
    m = None
    for ep in range(mcfg.train_episodes):
        last = ep == mcfg.train_episodes - 1
        m = _Mission(mcfg, world_cfg,
                     _episode_world_seed(seed, ep, mcfg.train_episodes))
        if trace and last:
            m.enable_trace()
        total_rounds += episode_fn(m, ep)
        reports.extend(m.reports)
        total_bytes += m.bytes_total
    m.reports = reports
    m.bytes_total = total_bytes
    return m, total_rounds


# -- LSAI pipeline ------------------------------------------------------------

def _run_lsai(mcfg, world_cfg, seed, trace=False):
    n = world_cfg.n_robots
    trainers = [policy_rl.DdpgTrainer([seed, 1000 + i], mcfg.ddpg, mcfg.reward)
                for i in range(n)]
    fused = [None] * n
    records = {i: aggregation.EligibilityRecord(i) for i in range(n)}
    edge_pos = (world_cfg.arena_size / 2.0, world_cfg.arena_size / 2.0)
    lai_cell = _Lai(aggregation.fedavg([t.actor.params for t in trainers]))
    part_rng = np.random.default_rng([seed, 77])
    schedule = splitting.PruneSchedule(mcfg.prune_rounds, mcfg.sparsity,
                                       mcfg.fine_tune_steps)

    def episode(m, ep):
        w = m.world

        def actions_fn(obs):
            out = []
            for i, tr in enumerate(trainers):
                if fused[i] is not None:
                    raw = fusion.fused_forward(fused[i], obs[i])
                    raw = np.clip(raw + tr.rng.normal(0.0, tr.noise_sigma, 2),
                                  1e-9, 1 - 1e-9)
                    out.append(Action(float(raw[0]), float(raw[1])))
                else:
                    out.append(tr.select_action(obs[i]))
            return out

        def learn(obs, actions, nobs):
            for i, tr in enumerate(trainers):
                r = policy_rl.sensing_reward(w.deltas[i], mcfg.reward)
                tr.record(obs[i], actions[i], r, nobs[i], False)

        return _lsai_episode(m, ep, mcfg, world_cfg, seed, trainers, fused,
                             records, edge_pos, part_rng, schedule,
                             actions_fn, learn, lai_cell)

    return _train_episodes(mcfg, world_cfg, seed, trace, episode)


class _Lai:
    """Mutable cell so the aggregated global model persists across episodes."""

    def __init__(self, params):
        self.params = params


def _lsai_episode(m, ep, mcfg, world_cfg, seed, trainers, fused, records,
                  edge_pos, part_rng, schedule, actions_fn, learn, lai_cell):
    w = m.world
    rnd = 0
    while m.has_time():
        report = RoundReport(rnd)
        _advance(m, actions_fn, m.act_ticks(mcfg.act_seconds), learn)
        if rnd >= mcfg.rounds or not m.has_time():
            report.accuracy = sensing_accuracy(w)
            report.coverage_cells = w.covered_cells
            m.reports.append(report)
            continue

        for i, r in enumerate(w.robots):
            records[i].last_known_position = tuple(r.position)
        part = aggregation.select_participants(
            list(records.values()), edge_pos, mcfg.edge_radius, mcfg.min_history)
        if mcfg.participants_fraction < 1.0 and len(part) > 2:
            keep = max(2, int(round(mcfg.participants_fraction * len(part))))
            part = set(part_rng.choice(sorted(part), size=keep, replace=False).tolist())
        part = sorted(part)

        if part:
            lai = lai_cell.params
            uploads = {i: trainers[i].actor.params for i in part}
            mean_up = aggregation.mean_update(list(uploads.values()), lai)
            scores = [aggregation.attention_score(uploads[i], lai, mean_up, i)
                      for i in part]
            weights = aggregation.attention_weights(scores, mcfg.temperature)
            lai = aggregation.aggregate(
                [(uploads[i], weights.weights[i]) for i in part])
            lai_cell.params = lai
            for s in scores:
                records[s.robot_id].update(s.score, mcfg.ema_decay)
            report.attention_weights = dict(weights.weights)

            lai_model = MlpModel(lai, model_core.SIGMOID)
            branch_bytes = 0
            for i in part:
                data = _distill_dataset(lai_model, trainers[i].recent_obs,
                                        mcfg.distill_samples)
                sub = splitting.split_for_robot(
                    lai, schedule, data, i, warnings=report.warnings)
                if fusion.should_fallback(len(part), 0.0, mcfg.fusion):
                    trainers[i].actor = fusion.fallback_retrain(
                        world_cfg, mcfg.ddpg, [seed, 5000 + i],
                        max(1, int(mcfg.fusion.fallback_fraction * mcfg.ddpg.episodes)))
                    fused[i] = None
                    continue
                fz, _obj = fusion.fuse_update(
                    trainers[i].actor, sub, w, mcfg.fusion, data,
                    robot_index=i,
                    seed=seed * 1000 + (ep * mcfg.rounds + rnd) * 10 + i)
                # deploy: the local actor stays on board as the base network
                # (keeping each robot's individually trained behavior) and the
                # selected branch injects the globally informed sub features
                # into it; ddpg_update keeps refining the base in place
                fused[i] = fz
                branch_bytes = fz.branch.n_bytes()

            topo = comms.make_topology(
                comms.EDGE_LSAI, mcfg.comms,
                {i: tuple(w.robots[i].position) for i in part}, edge_pos)
            shapes = trainers[0].actor.params.shapes
            up_bytes = {i: comms.payload_size("lsai_uplink", model_shapes=shapes)
                        for i in part}
            down_bytes = {i: comms.payload_size("lsai_downlink",
                                                model_shapes=lai.shapes,
                                                branch_bytes=branch_bytes)
                          for i in part}
            completions, total, unreachable = comms.round_trip_model_exchange(
                topo, part, up_bytes, down_bytes, t0=w.clock)
            if unreachable:
                report.warnings.append(f"unreachable: {unreachable}")
            m.bytes_total += total
            report.bytes = total
            report.completion_times = completions
            _comm_phase_log(report, topo.uplink)
            _comm_phase_log(report, topo.downlink)
            makespan = max(completions.values()) - w.clock if completions else 0.0
            comm_ticks = m.act_ticks(makespan)
            if comm_ticks:
                _advance(m, actions_fn, comm_ticks, learn)

        for tr in trainers:
            tr.end_episode()
        report.accuracy = sensing_accuracy(w)
        report.coverage_cells = w.covered_cells
        m.reports.append(report)
        rnd += 1
    return rnd


# -- centralized pipeline -----------------------------------------------------

def _run_centralized(mcfg, world_cfg, seed, trace=False):
    n = world_cfg.n_robots
    cloud = policy_rl.DdpgTrainer([seed, 9], mcfg.ddpg, mcfg.reward)
    cloud_pos = (world_cfg.arena_size / 2.0, world_cfg.arena_size / 2.0)

    def episode(m, ep):
        return _centralized_episode(m, mcfg, n, cloud, cloud_pos)

    return _train_episodes(mcfg, world_cfg, seed, trace, episode)


def _cloud_rollout(cloud, snapshot, ticks, n, dt):
    """Roll the cloud policy forward on its world snapshot, one action per
    robot per tick, producing the open-loop schedules it downlinks."""
    scheds = [[] for _ in range(n)]
    mask = policy_rl.open_cells_mask(snapshot)
    for _ in range(ticks):
        acts = []
        for i in range(n):
            a = cloud.select_action(policy_rl.observe(snapshot, i, mask))
            acts.append(a)
            scheds[i].append(a)
        world_mod.step(snapshot, acts, dt)
        mask = policy_rl.open_cells_mask(snapshot)
    return scheds


def _centralized_episode(m, mcfg, n, cloud, cloud_pos):
    w = m.world
    staged = []  # transitions awaiting upload
    obs_counts = [0] * n
    recognized = [None] * len(w.targets)

    rnd = 0
    # robots launch carrying a plan the cloud computed from the known initial
    # deployment, so they are never without instructions while the first
    # exchange is in flight
    init = w.clone()
    init.config = replace(init.config, process_noise=0.0)
    pending = _cloud_rollout(cloud, init, m.act_ticks(mcfg.act_seconds),
                             n, mcfg.dt)

    def scheduled(_obs):
        return [q.pop(0) if q else None for q in pending]

    def record(obs, actions, nobs):
        for i in range(n):
            if actions[i] is None:
                continue  # robot had no instruction this tick
            r = policy_rl.sensing_reward(w.deltas[i], mcfg.reward)
            staged.append((obs[i],
                           (actions[i].heading_frac, actions[i].speed_frac),
                           r, nobs[i], False))
            obs_counts[i] += 1

    while m.has_time():
        if rnd >= mcfg.rounds:
            # no more decision rounds: play out whatever was downlinked,
            # then the robots have no further instructions
            _advance(m, scheduled, m.act_ticks(mcfg.act_seconds), record)
            continue
        report = RoundReport(rnd)
        stale = w.clone()  # what the cloud knows: the world as uploaded
        # the cloud plans with expected dynamics: it cannot predict the
        # actuator noise the robots will actually realize while replaying
        # the downlinked schedule open-loop
        stale.config = replace(stale.config, process_noise=0.0)
        # comm phase: raw observations up, next action schedule down; robots
        # keep executing the tail of the previous schedule in the meantime
        topo = comms.make_topology(comms.CENTRALIZED, mcfg.comms,
                                   {i: tuple(w.robots[i].position) for i in range(n)},
                                   cloud_pos)
        up_bytes = {i: comms.payload_size("centralized_uplink",
                                          n_observations=max(1, obs_counts[i]))
                    for i in range(n)}
        act_ticks = m.act_ticks(mcfg.act_seconds)
        total = 0
        uplink_done = w.clock
        for i in range(n):
            pkt = comms.Packet(f"robot{i}", "hub", up_bytes[i], w.clock)
            uplink_done = max(uplink_done, topo.uplink.send(pkt))
            total += pkt.size
        # raw data is only interpreted at the cloud: a sensed target counts
        # as recognized when the uplink carrying its detection lands there
        for ti, tgt in enumerate(w.targets):
            if tgt.sensed and recognized[ti] is None:
                recognized[ti] = uplink_done

        # cloud learns from the pooled observations but with the same update
        # budget a single local learner gets: one step per mission tick
        for tr_ in staged:
            cloud.buffer.push(*tr_)
        updates = len(staged) // n
        staged = []
        for _ in range(updates):
            cloud.update()

        # schedule: the cloud rolls its policy forward on the uploaded
        # snapshot — it does not know where the robots will actually be by
        # the time the downlink lands — covering both the execution window
        # and the next round's communication window
        # the plan spans two execution windows so the robots cannot run out
        # of instructions however long the next exchange takes
        sched_ticks = 2 * act_ticks
        new_scheds = _cloud_rollout(cloud, stale, sched_ticks, n, mcfg.dt)

        down_bytes = {i: comms.payload_size("centralized_downlink",
                                            n_actions=max(1, sched_ticks))
                      for i in range(n)}
        completions = {}
        for i in range(n):
            pkt = comms.Packet("hub", f"robot{i}", down_bytes[i], uplink_done)
            completions[i] = topo.downlink.send(pkt)
            total += pkt.size
        m.bytes_total += total
        report.bytes = total
        report.completion_times = completions
        _comm_phase_log(report, topo.uplink)
        _comm_phase_log(report, topo.downlink)
        obs_counts = [0] * n

        # while the exchange is in flight the robots replay the remainder of
        # last round's schedule (nothing at all in round zero)
        makespan = max(completions.values()) - w.clock
        freeze_ticks = m.act_ticks(makespan)
        if freeze_ticks:
            _advance(m, scheduled, freeze_ticks, record)

        # downlink lands: the fresh (already stale) schedule replaces any
        # leftover instructions and executes open-loop from wherever the
        # robots actually are now
        for i in range(n):
            pending[i] = list(new_scheds[i])
        _advance(m, scheduled, act_ticks, record)
        cloud.end_episode()
        report.accuracy = sensing_accuracy(w)
        report.coverage_cells = w.covered_cells
        m.reports.append(report)
        rnd += 1
    m.recognized_times = recognized
    return rnd


# -- distributed pipeline -----------------------------------------------------

def _run_distributed(mcfg, world_cfg, seed, trace=False):
    n = world_cfg.n_robots
    trainers = [policy_rl.DdpgTrainer([seed, 1000 + i], mcfg.ddpg, mcfg.reward)
                for i in range(n)]

    def episode(m, ep):
        return _distributed_episode(m, mcfg, n, trainers)

    return _train_episodes(mcfg, world_cfg, seed, trace, episode)


def _distributed_episode(m, mcfg, n, trainers):
    w = m.world

    def actions_fn(obs):
        return [tr.select_action(o) for tr, o in zip(trainers, obs)]

    def learn(obs, actions, nobs):
        for i, tr in enumerate(trainers):
            r = policy_rl.sensing_reward(w.deltas[i], mcfg.reward)
            tr.record(obs[i], actions[i], r, nobs[i], False)

    rnd = 0
    while m.has_time():
        report = RoundReport(rnd)
        _advance(m, actions_fn, m.act_ticks(mcfg.act_seconds), learn)
        if rnd >= mcfg.rounds or not m.has_time():
            report.accuracy = sensing_accuracy(w)
            report.coverage_cells = w.covered_cells
            m.reports.append(report)
            continue

        # peer exchange over per-robot radio links, one send per neighbor
        shapes = trainers[0].actor.params.shapes
        sai_bytes = comms.payload_size("distributed", model_shapes=shapes)
        positions = [r.position for r in w.robots]
        neighbors = [[j for j in range(n) if j != i
                      and np.linalg.norm(positions[i] - positions[j]) <= mcfg.comms.radio_range]
                     for i in range(n)]
        makespan = 0.0
        for i in range(n):
            link = comms.Link(mcfg.comms.link(), f"radio{i}")
            link.busy_until = w.clock
            for j in neighbors[i]:
                pkt = Packet(f"robot{i}", f"robot{j}", sai_bytes, w.clock)
                delivered = link.send(pkt)
                makespan = max(makespan, delivered - w.clock)
                m.bytes_total += sai_bytes
                report.bytes += sai_bytes
                report.packets.append((pkt.src, pkt.dst, pkt.size,
                                       pkt.created_at, pkt.delivered_at))
        comm_ticks = m.act_ticks(makespan)
        if comm_ticks:
            _advance(m, actions_fn, comm_ticks, learn)

        # uniform-mean merge of each robot's actor with its neighbors'
        current = [tr.actor.params for tr in trainers]
        for i in range(n):
            group = [current[i]] + [current[j] for j in neighbors[i]]
            trainers[i].actor = MlpModel(aggregation.fedavg(group),
                                         model_core.SIGMOID)
        for tr in trainers:
            tr.end_episode()
        report.accuracy = sensing_accuracy(w)
        report.coverage_cells = w.covered_cells
        m.reports.append(report)
        rnd += 1
    return rnd


_RUNNERS = {
    comms.EDGE_LSAI: _run_lsai,
    comms.CENTRALIZED: _run_centralized,
    comms.DISTRIBUTED: _run_distributed,
}


def run_method(mcfg, world_cfg, seed, trace_path=None):
    """Execute one mission; returns (Metrics, [RoundReport])."""
    mission, rounds = _RUNNERS[mcfg.method](mcfg, world_cfg, seed,
                                            trace=trace_path is not None)
    if trace_path is not None:
        mission.recorder.write(trace_path)
    w = mission.world
    metrics = Metrics(
        sensing_accuracy=sensing_accuracy(w),
        path_efficiency=path_efficiency(w),
        response_time=response_time(w, mcfg.response_threshold,
                                    mission.recognized_times),
        energy_total=w.energy_spent_total,
        collisions=len(w.collision_log),
        bytes_transmitted=mission.bytes_total,
    )
    return metrics, mission.reports


# -- sweep / emission ---------------------------------------------------------

def _row(mcfg, world_cfg, seed, metrics, rounds, wall_ms):
    censored = 1 if math.isinf(metrics.response_time) else 0
    return {
        "scenario_id": f"{mcfg.method}_r{world_cfg.n_robots}_s{seed}",
        "method": mcfg.method,
        "n_robots": world_cfg.n_robots,
        "n_targets": world_cfg.n_targets,
        "seed": seed,
        "sensing_accuracy": f"{metrics.sensing_accuracy:.6f}",
        "path_efficiency": f"{metrics.path_efficiency:.6f}",
        "response_time_s": "inf" if censored else f"{metrics.response_time:.6f}",
        "censored": censored,
        "energy_total_j": f"{metrics.energy_total:.6f}",
        "collisions": metrics.collisions,
        "bytes_transmitted": metrics.bytes_transmitted,
        "rounds": rounds,
        "wall_ms": wall_ms,
    }


def run_one(mcfg, world_cfg, seed, timing=False):
    t0 = time.perf_counter()
    metrics, reports = run_method(mcfg, world_cfg, seed)
    wall = int((time.perf_counter() - t0) * 1000) if timing else 0
    return _row(mcfg, world_cfg, seed, metrics, len(reports), wall), reports


def sweep(methods, robot_counts, seeds, world_cfg, base_mcfg, timing=False,
          jobs=1, progress=None):
    """Cross product of methods x robot counts x seeds.

    Returns (rows, summary). Failed runs become rows with scenario_id
    suffix '_failed'; the sweep continues.
    """
    if not methods or not robot_counts or not seeds:
        raise ValueError("sweep: methods, robot_counts, and seeds must be nonempty")
    tasks = [(meth, nr, sd) for meth in methods for nr in robot_counts
             for sd in seeds]

    def one(task):
        meth, nr, sd = task
        mcfg = replace(base_mcfg, method=meth)
        wcfg = replace(world_cfg, n_robots=nr)
        try:
            row, _ = run_one(mcfg, wcfg, sd, timing)
            return row
        except Exception as exc:  # noqa: BLE001 - row-level fault isolation
            row = {c: "" for c in CSV_COLUMNS}
            row.update({"scenario_id": f"{meth}_r{nr}_s{sd}_failed",
                        "method": meth, "n_robots": nr, "seed": sd,
                        "n_targets": world_cfg.n_targets})
            row["wall_ms"] = 0
            row["_error"] = str(exc)
            return row

    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_task, [(world_cfg, base_mcfg, timing, t)
                                               for t in tasks]))
    else:
        rows = []
        for t in tasks:
            rows.append(one(t))
            if progress:
                progress(rows[-1])

    rows.sort(key=lambda r: (r["method"], int(r["n_robots"]), int(r["seed"])))
    summary = summarize(rows, response_cap=base_mcfg.mission_seconds)
    return rows, summary


def _sweep_task(packed):
    world_cfg, base_mcfg, timing, (meth, nr, sd) = packed
    mcfg = replace(base_mcfg, method=meth)
    wcfg = replace(world_cfg, n_robots=nr)
    try:
        row, _ = run_one(mcfg, wcfg, sd, timing)
        return row
    except Exception as exc:  # noqa: BLE001
        row = {c: "" for c in CSV_COLUMNS}
        row.update({"scenario_id": f"{meth}_r{nr}_s{sd}_failed",
                    "method": meth, "n_robots": nr, "seed": sd,
                    "n_targets": world_cfg.n_targets})
        row["wall_ms"] = 0
        row["_error"] = str(exc)
        return row


def summarize(rows, response_cap=None):
    """Per (method, n_robots) means and standard deviations.

    Censored runs enter response_time_mean at `response_cap` (the mission
    budget) when given; otherwise an all-censored-free cell reports the
    plain mean and any censoring makes the mean infinite.
    """
    cells = {}
    for r in rows:
        if r["scenario_id"].endswith("_failed"):
            continue
        key = (r["method"], int(r["n_robots"]))
        cells.setdefault(key, []).append(r)
    out = {}
    for (meth, nr), group in sorted(cells.items()):
        acc = np.array([float(g["sensing_accuracy"]) for g in group])
        eff = np.array([float(g["path_efficiency"]) for g in group])
        resp = np.array([float(g["response_time_s"]) for g in group])
        if response_cap is not None:
            resp = np.minimum(resp, response_cap)
        out[f"{meth}_r{nr}"] = {
            "method": meth,
            "n_robots": nr,
            "n_seeds": len(group),
            "sensing_accuracy_mean": float(acc.mean()),
            "sensing_accuracy_std": float(acc.std()),
            "path_efficiency_mean": float(eff.mean()),
            "path_efficiency_std": float(eff.std()),
            "response_time_mean": float(resp.mean()) if np.isfinite(resp).all() else math.inf,
            "censored_runs": int(sum(int(g["censored"]) for g in group)),
        }
    return out


def write_results_csv(rows, path_or_buf):
    close = False
    if isinstance(path_or_buf, (str, bytes)):
        f = open(path_or_buf, "w", newline="")
        close = True
    else:
        f = path_or_buf
    try:
        wr = csv.DictWriter(f, fieldnames=CSV_COLUMNS, extrasaction="ignore",
                            lineterminator="\n")
        wr.writeheader()
        for r in rows:
            wr.writerow(r)
    finally:
        if close:
            f.close()


def write_summary_json(summary, path):
    with open(path, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")


def write_packet_log(reports, path, method=""):
    with open(path, "w", newline="") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(PACKET_COLUMNS)
        for rep in reports:
            for src, dst, size, created, delivered in rep.packets:
                wr.writerow([rep.round, src, dst, size,
                             f"{created:.6f}", f"{delivered:.6f}"])


def write_round_reports(reports, path):
    with open(path, "w") as f:
        for rep in reports:
            f.write(json.dumps({
                "round": rep.round,
                "attention_weights": {str(k): v for k, v in
                                      sorted(rep.attention_weights.items())},
                "bytes": rep.bytes,
                "completion_times": {str(k): v for k, v in
                                     sorted(rep.completion_times.items())},
                "accuracy": rep.accuracy,
                "coverage_cells": rep.coverage_cells,
                "warnings": rep.warnings,
            }, sort_keys=True) + "\n")
