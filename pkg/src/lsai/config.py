"""Sectioned key-value scenario files.

Sections: world, ddpg, aggregation, splitting, fusion, comms, experiment.
Every key maps onto a config dataclass field; unknown sections or keys are
rejected with their full path so typos fail loudly.
"""

import configparser
from dataclasses import dataclass, fields, replace

from .comms import CommsConfig
from .experiment import MethodConfig
from .fusion import FusionConfig
from .policy_rl import DdpgConfig, RewardWeights
from .world import WorldConfig


class ConfigError(Exception):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass
class Scenario:
    world: WorldConfig
    method: MethodConfig


# section -> (target, {key: field or (sub-config, field)})
_AGGREGATION_KEYS = {
    "temperature": "temperature",
    "ema_decay": "ema_decay",
    "edge_radius": "edge_radius",
    "min_history": "min_history",
    "participants_fraction": "participants_fraction",
}
_SPLITTING_KEYS = {
    "sparsity": "sparsity",
    "prune_rounds": "prune_rounds",
    "fine_tune_steps": "fine_tune_steps",
    "distill_samples": "distill_samples",
}
_EXPERIMENT_KEYS = {
    "method": "method",
    "rounds": "rounds",
    "act_seconds": "act_seconds",
    "mission_seconds": "mission_seconds",
    "train_episodes": "train_episodes",
    "dt": "dt",
    "response_threshold": "response_threshold",
}
_REWARD_KEYS = {
    "reward_coverage": "coverage",
    "reward_energy": "energy",
    "reward_collision": "collision",
    "reward_overlap": "overlap",
    "jaccard_threshold": "jaccard_threshold",
}


def _coerce(section, key, raw, ftype):
    try:
        if ftype is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes"):
                return True
            if low in ("0", "false", "no"):
                return False
            raise ValueError(raw)
        return ftype(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r} as {ftype.__name__}")


def _apply(section, items, cls, defaults, keymap=None):
    fmap = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, raw in items:
        name = keymap.get(key) if keymap is not None else key
        if name is None or name not in fmap:
            raise ConfigError(f"{section}.{key}", "unknown key")
        f = fmap[name]
        ftype = {"int": int, "float": float, "bool": bool, "str": str}.get(
            f.type if isinstance(f.type, str) else f.type.__name__, str)
        kwargs[name] = _coerce(section, key, raw, ftype)
    try:
        return replace(defaults, **kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(section, str(exc))


def load_scenario(path, overrides=None):
    """Parse and validate a scenario file into (WorldConfig, MethodConfig)."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as f:
            parser.read_file(f)
    except OSError as exc:
        raise ConfigError(path, f"cannot read: {exc}")
    except configparser.Error as exc:
        raise ConfigError(path, f"parse error: {exc}")

    known = {"world", "ddpg", "aggregation", "splitting", "fusion", "comms",
             "experiment"}
    for sec in parser.sections():
        if sec not in known:
            raise ConfigError(sec, "unknown section")

    def items(sec):
        return parser.items(sec) if parser.has_section(sec) else []

    ddpg_items = []
    reward_items = []
    for key, raw in items("ddpg"):
        (reward_items if key in _REWARD_KEYS else ddpg_items).append((key, raw))

    world = _apply("world", items("world"), WorldConfig, WorldConfig())
    ddpg = _apply("ddpg", ddpg_items, DdpgConfig, DdpgConfig())
    reward = _apply("ddpg", reward_items, RewardWeights, RewardWeights(),
                    keymap=_REWARD_KEYS)
    fus = _apply("fusion", items("fusion"), FusionConfig, FusionConfig())
    com = _apply("comms", items("comms"), CommsConfig, CommsConfig())

    method = MethodConfig(ddpg=ddpg, reward=reward, fusion=fus, comms=com)
    method = _apply("aggregation", items("aggregation"), MethodConfig, method,
                    keymap=_AGGREGATION_KEYS)
    method = _apply("splitting", items("splitting"), MethodConfig, method,
                    keymap=_SPLITTING_KEYS)
    method = _apply("experiment", items("experiment"), MethodConfig, method,
                    keymap=_EXPERIMENT_KEYS)

    if overrides:
        try:
            method = replace(method, **overrides)
        except (ValueError, TypeError) as exc:
            raise ConfigError("experiment", str(exc))
    return Scenario(world, method)
