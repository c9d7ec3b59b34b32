"""2D sensing arena: kinematics, disk footprints, coverage, targets, energy.

The arena is a square grid of cells; a robot's footprint at a tick is the
set of cells whose centers fall inside its sensing radius. Targets are
sensed the first time their cell is inside any footprint. Stepping is
single-threaded and deterministic.
"""

from collections import deque
from dataclasses import dataclass, field
import math

import numpy as np

from . import kernels


@dataclass(frozen=True)
class Action:
    """Policy output, both components in (0,1): heading fraction of a full
    turn and speed as a fraction of max speed."""

    heading_frac: float
    speed_frac: float


@dataclass(frozen=True)
class WorldConfig:
    arena_size: float = 200.0
    cell_size: float = 5.0
    n_robots: int = 8
    n_targets: int = 10
    max_speed: float = 1.5
    sensing_radius: float = 15.0
    obstacle_fraction: float = 0.0
    seed: int = 0
    # energy model
    e_idle: float = 1.0  # J/s
    e_move: float = 0.5  # J/m
    initial_energy: float = 50_000.0
    # safety / kinematics
    d_min: float = 2.0
    max_turn_rate: float = math.pi / 2  # rad/s
    # actuator/process noise: heading jitter std in rad per sqrt(second),
    # drawn from a seeded stream. 0 keeps stepping exactly kinematic.
    process_noise: float = 0.0

    def __post_init__(self):
        n = self.arena_size / self.cell_size
        if abs(n - round(n)) > 1e-9 or round(n) < 4:
            raise ValueError("arena must divide into >= 4x4 whole cells")
        if self.n_targets < 1:
            raise ValueError("n_targets must be >= 1")
        if not self.max_speed > 0:
            raise ValueError("max_speed must be > 0")
        if not 0.0 <= self.obstacle_fraction < 1.0:
            raise ValueError("obstacle_fraction must be in [0,1)")
        if self.process_noise < 0.0:
            raise ValueError("process_noise must be >= 0")

    @property
    def n_cells(self):
        return int(round(self.arena_size / self.cell_size))


@dataclass
class RobotState:
    id: int
    position: np.ndarray
    heading: float
    energy: float
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))
    trajectory: deque = field(default_factory=lambda: deque(maxlen=256))
    footprint: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def alive(self):
        return self.energy > 0.0

    def copy(self):
        r = RobotState(self.id, self.position.copy(), self.heading, self.energy,
                       self.velocity.copy())
        r.trajectory = deque(self.trajectory, maxlen=self.trajectory.maxlen)
        r.footprint = self.footprint.copy()
        return r


@dataclass
class Target:
    position: np.ndarray
    sensed: bool = False
    first_sensed_time: float = -1.0


@dataclass
class StepDelta:
    """Per-robot outcome of the last tick, the substrate for rewards."""

    new_cells: int = 0
    distance: float = 0.0
    energy_spent: float = 0.0
    collision: bool = False
    max_jaccard: float = 0.0


class WorldState:
    def __init__(self, config, robots, targets, obstacles):
        self.config = config
        self.robots = robots
        self.targets = targets
        self.obstacles = obstacles  # bool, flat n_cells*n_cells
        n2 = config.n_cells * config.n_cells
        self.coverage = np.zeros(n2, dtype=bool)
        self.clock = 0.0
        self.collision_log = []  # (time, i, j) with i < j
        self.deltas = [StepDelta() for _ in robots]
        self.energy_spent_total = 0.0
        self.distance_total = 0.0
        self.noise_rng = np.random.default_rng([config.seed, 313])

    def clone(self):
        w = WorldState.__new__(WorldState)
        w.config = self.config
        w.robots = [r.copy() for r in self.robots]
        w.targets = [Target(t.position.copy(), t.sensed, t.first_sensed_time)
                     for t in self.targets]
        w.obstacles = self.obstacles  # immutable after spawn
        w.coverage = self.coverage.copy()
        w.clock = self.clock
        w.collision_log = list(self.collision_log)
        w.deltas = [StepDelta(d.new_cells, d.distance, d.energy_spent, d.collision,
                              d.max_jaccard) for d in self.deltas]
        w.energy_spent_total = self.energy_spent_total
        w.distance_total = self.distance_total
        w.noise_rng = np.random.default_rng()
        w.noise_rng.bit_generator.state = self.noise_rng.bit_generator.state
        return w

    @property
    def sensed_count(self):
        return sum(1 for t in self.targets if t.sensed)

    @property
    def covered_cells(self):
        return int(self.coverage.sum())

    def cell_of(self, pos):
        c = self.config
        ix = min(c.n_cells - 1, int(pos[0] / c.cell_size))
        iy = min(c.n_cells - 1, int(pos[1] / c.cell_size))
        return iy * c.n_cells + ix


def footprint(position, sensing_radius, config):
    """Cells whose centers are within sensing_radius of position."""
    return kernels.disk_cells(float(position[0]), float(position[1]),
                              float(sensing_radius), config.n_cells,
                              float(config.cell_size))


def jaccard(a, b):
    """|a n b| / |a u b| over cell sets; 0 when both are empty."""
    a = np.unique(np.asarray(list(a) if isinstance(a, (set, frozenset)) else a, dtype=np.int64))
    b = np.unique(np.asarray(list(b) if isinstance(b, (set, frozenset)) else b, dtype=np.int64))
    if a.size == 0 and b.size == 0:
        return 0.0
    inter = np.intersect1d(a, b, assume_unique=True).size
    union = a.size + b.size - inter
    return inter / union


def spawn(config):
    """Seed-deterministic world: obstacles, robots, and targets placed on
    distinct non-obstacle cells."""
    rng = np.random.default_rng(config.seed)
    n2 = config.n_cells * config.n_cells
    n_obst = int(np.floor(config.obstacle_fraction * n2))
    obstacles = np.zeros(n2, dtype=bool)
    if n_obst:
        obstacles[rng.choice(n2, size=n_obst, replace=False)] = True
    free = np.nonzero(~obstacles)[0]
    need = config.n_robots + config.n_targets
    if free.size < need:
        raise ValueError(
            f"arena too small: {free.size} free cells for {need} entities")
    picks = rng.choice(free, size=need, replace=False)

    def center(cell):
        ix = cell % config.n_cells
        iy = cell // config.n_cells
        return np.array([(ix + 0.5) * config.cell_size, (iy + 0.5) * config.cell_size])

    robots = []
    for i in range(config.n_robots):
        r = RobotState(i, center(picks[i]), rng.uniform(0.0, 2 * math.pi),
                       config.initial_energy)
        r.trajectory.append((0.0, r.position.copy()))
        robots.append(r)
    targets = [Target(center(c)) for c in picks[config.n_robots:]]

    world = WorldState(config, robots, targets, obstacles)
    _sense(world)
    return world


def _sense(world):
    """Recompute footprints, fold them into coverage, and mark targets."""
    cfg = world.config
    union = np.zeros(world.coverage.size, dtype=bool)
    for i, r in enumerate(world.robots):
        cells = footprint(r.position, cfg.sensing_radius, cfg)
        r.footprint = cells
        fresh = ~world.coverage[cells]
        world.deltas[i].new_cells = int(fresh.sum())
        world.coverage[cells] = True
        union[cells] = True
    for t in world.targets:
        if not t.sensed and union[world.cell_of(t.position)]:
            t.sensed = True
            t.first_sensed_time = world.clock


def _wrap_angle(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


def step(world, actions, dt):
    """Advance one tick. actions[i] may be None to hold robot i in place."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if len(actions) != len(world.robots):
        raise ValueError("need one action per robot")
    cfg = world.config
    for i, (r, a) in enumerate(zip(world.robots, actions)):
        d = world.deltas[i]
        d.new_cells = 0
        d.distance = 0.0
        d.energy_spent = 0.0
        d.collision = False
        d.max_jaccard = 0.0
        if not r.alive:
            r.velocity[:] = 0.0
            continue
        moved = 0.0
        if a is not None:
            desired = 2 * math.pi * float(a.heading_frac)
            turn = _wrap_angle(desired - r.heading)
            limit = cfg.max_turn_rate * dt
            r.heading = (r.heading + float(np.clip(turn, -limit, limit))) % (2 * math.pi)
            if cfg.process_noise > 0.0:
                jitter = world.noise_rng.normal(0.0, cfg.process_noise * math.sqrt(dt))
                r.heading = (r.heading + jitter) % (2 * math.pi)
            speed = float(a.speed_frac) * cfg.max_speed
            cand = r.position + speed * dt * np.array([math.cos(r.heading),
                                                       math.sin(r.heading)])
            cand = np.clip(cand, 0.0, cfg.arena_size)
            if not world.obstacles[world.cell_of(cand)]:
                moved = float(np.linalg.norm(cand - r.position))
                r.position = cand
        r.velocity = (moved / dt) * np.array([math.cos(r.heading), math.sin(r.heading)])
        spent = cfg.e_idle * dt + cfg.e_move * moved
        r.energy = max(0.0, r.energy - spent)
        r.trajectory.append((world.clock + dt, r.position.copy()))
        d.distance = moved
        d.energy_spent = spent
        world.energy_spent_total += spent
        world.distance_total += moved

    world.clock += dt
    _sense(world)

    xs = np.array([r.position[0] for r in world.robots])
    ys = np.array([r.position[1] for r in world.robots])
    pairs = kernels.collision_pairs(xs, ys, cfg.d_min)
    for i, j in pairs:
        world.collision_log.append((world.clock, int(i), int(j)))
        world.deltas[i].collision = True
        world.deltas[j].collision = True

    n = len(world.robots)
    # footprints with centers farther than 2r + cell diagonal cannot intersect
    cutoff = 2 * cfg.sensing_radius + cfg.cell_size * math.sqrt(2)
    for i in range(n):
        best = 0.0
        for j in range(n):
            if j == i:
                continue
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            if dx * dx + dy * dy > cutoff * cutoff:
                continue
            best = max(best, jaccard(world.robots[i].footprint,
                                     world.robots[j].footprint))
        world.deltas[i].max_jaccard = best
    return world


# -- trace export / replay ----------------------------------------------------

TRACE_HEADER = "# lsai-trace v1"


class TraceRecorder:
    """Line-oriented snapshot log for replay and debugging."""

    def __init__(self, world):
        c = world.config
        self.lines = [
            TRACE_HEADER,
            f"config arena_size={c.arena_size} cell_size={c.cell_size} "
            f"sensing_radius={c.sensing_radius} n_cells={c.n_cells}",
            "targets " + "|".join(f"{t.position[0]:.6f}:{t.position[1]:.6f}"
                                  for t in world.targets),
        ]
        self.tick = 0
        self.record(world)

    def record(self, world):
        robots = "|".join(f"{r.position[0]:.6f}:{r.position[1]:.6f}:{r.energy:.6f}"
                          for r in world.robots)
        self.lines.append(
            f"tick k={self.tick} clock={world.clock:.6f} "
            f"coverage={world.covered_cells} sensed={world.sensed_count} robots={robots}"
        )
        self.tick += 1

    def write(self, path):
        with open(path, "w") as f:
            f.write("\n".join(self.lines) + "\n")


def verify_trace(path):
    """Recompute coverage and sensed counts from robot positions in a trace
    and compare to recorded values. Returns (ok, message)."""
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f if ln.strip()]
    if not lines or lines[0] != TRACE_HEADER:
        return False, "not a trace file"
    if len(lines) < 4:
        return False, "trace truncated: missing config/targets/ticks"
    cfgkv = dict(kv.split("=") for kv in lines[1].split()[1:])
    cell = float(cfgkv["cell_size"])
    radius = float(cfgkv["sensing_radius"])
    n_cells = int(cfgkv["n_cells"])

    class _C:
        pass

    cfg = _C()
    cfg.cell_size = cell
    cfg.n_cells = n_cells
    targets = []
    for tok in lines[2].split(" ", 1)[1].split("|"):
        x, y = tok.split(":")
        targets.append((float(x), float(y)))

    def cell_of(x, y):
        ix = min(n_cells - 1, int(x / cell))
        iy = min(n_cells - 1, int(y / cell))
        return iy * n_cells + ix

    coverage = np.zeros(n_cells * n_cells, dtype=bool)
    sensed = [False] * len(targets)
    expected_k = 0
    for ln in lines[3:]:
        parts = ln.split()
        if parts[0] != "tick":
            return False, f"unexpected record {parts[0]!r}"
        kv = dict(p.split("=", 1) for p in parts[1:])
        k = int(kv["k"])
        if k != expected_k:
            return False, f"trace truncated or reordered: missing tick {expected_k}"
        expected_k += 1
        union = np.zeros(coverage.size, dtype=bool)
        for tok in kv["robots"].split("|"):
            x, y, _e = (float(v) for v in tok.split(":"))
            cells = kernels.disk_cells(x, y, radius, n_cells, cell)
            coverage[cells] = True
            union[cells] = True
        for ti, (tx, ty) in enumerate(targets):
            if not sensed[ti] and union[cell_of(tx, ty)]:
                sensed[ti] = True
        if int(kv["coverage"]) != int(coverage.sum()):
            return False, (f"coverage mismatch at tick {k}: "
                           f"recorded {kv['coverage']}, recomputed {int(coverage.sum())}")
        if int(kv["sensed"]) != sum(sensed):
            return False, (f"sensed mismatch at tick {k}: "
                           f"recorded {kv['sensed']}, recomputed {sum(sensed)}")
    return True, f"ok: {expected_k} ticks verified"
