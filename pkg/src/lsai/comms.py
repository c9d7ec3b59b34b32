"""Simulated terminal/edge/cloud links: FIFO serialization, delays, bytes.

A link delivers packets in creation order at size/bandwidth plus a fixed
processing delay, plus a backhaul delay on cloud links. Round exchange
schedules every upload, applies an aggregation barrier, then schedules
every downlink.
"""

from dataclasses import dataclass, field

import numpy as np

OBS_DIM_BYTES = 12 * 8  # one float64 observation row
PACKET_HEADER_BYTES = 16


@dataclass(frozen=True)
class LinkConfig:
    bandwidth: float = 1_000_000.0  # bytes/second
    processing_delay: float = 0.05
    backhaul_delay: float = 0.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be > 0")
        if self.processing_delay < 0 or self.backhaul_delay < 0:
            raise ValueError("delays must be >= 0")


@dataclass
class Packet:
    src: str
    dst: str
    size: int
    created_at: float
    delivered_at: float = None


def transmit(link, packet, link_busy_until):
    """FIFO transmission; returns (delivered_at, new_busy_until)."""
    if packet.size < 0:
        raise ValueError("packet size must be >= 0")
    start = max(packet.created_at, link_busy_until)
    tx = packet.size / link.bandwidth
    delivered = start + tx + link.processing_delay + link.backhaul_delay
    packet.delivered_at = delivered
    return delivered, start + tx


class Link:
    """Stateful wrapper holding the FIFO cursor and a packet log."""

    def __init__(self, config, name=""):
        self.config = config
        self.name = name
        self.busy_until = 0.0
        self.log = []

    def send(self, packet):
        delivered, self.busy_until = transmit(self.config, packet, self.busy_until)
        self.log.append(packet)
        return delivered


EDGE_LSAI = "lsai"
CENTRALIZED = "centralized"
DISTRIBUTED = "distributed"


@dataclass
class Topology:
    kind: str
    uplink: Link
    downlink: Link
    node_positions: dict = field(default_factory=dict)
    hub_position: tuple = (0.0, 0.0)
    reach_radius: float = float("inf")

    def reachable(self, robot_id):
        if robot_id not in self.node_positions:
            return True
        x, y = self.node_positions[robot_id]
        return np.hypot(x - self.hub_position[0], y - self.hub_position[1]) <= self.reach_radius


@dataclass(frozen=True)
class CommsConfig:
    bandwidth: float = 1_000_000.0
    processing_delay: float = 0.05
    backhaul_delay: float = 2.0  # cloud links only
    radio_range: float = 80.0  # terminal-terminal mesh

    def link(self, cloud=False):
        return LinkConfig(self.bandwidth, self.processing_delay,
                          self.backhaul_delay if cloud else 0.0)


def make_topology(kind, cfg, node_positions=None, hub_position=(0.0, 0.0),
                  reach_radius=float("inf")):
    cloud = kind == CENTRALIZED
    up = Link(cfg.link(cloud), f"{kind}-up")
    down = Link(cfg.link(cloud), f"{kind}-down")
    return Topology(kind, up, down, node_positions or {}, hub_position, reach_radius)


def round_trip_model_exchange(topology, participants, model_bytes, downlink_bytes,
                              t0=0.0, compute_delay=0.0):
    """Uploads, aggregation barrier, downlinks, all FIFO on shared links.

    Returns (per-robot completion time, total bytes, unreachable ids).
    Robot order is ascending id for determinism.
    """
    if not participants:
        raise ValueError("round_trip_model_exchange: no participants")
    ids = sorted(participants)
    unreachable = [i for i in ids if not topology.reachable(i)]
    ids = [i for i in ids if topology.reachable(i)]
    total = 0
    up_done = t0
    for i in ids:
        pkt = Packet(f"robot{i}", "hub", model_bytes[i], t0)
        up_done = max(up_done, topology.uplink.send(pkt))
        total += pkt.size
    barrier = up_done + compute_delay
    completions = {}
    for i in ids:
        pkt = Packet("hub", f"robot{i}", downlink_bytes[i], barrier)
        completions[i] = topology.downlink.send(pkt)
        total += pkt.size
    return completions, total, unreachable


def payload_size(mode, *, model_shapes=None, branch_bytes=0, n_observations=0,
                 n_actions=0):
    """Bytes on the wire for each exchange mode."""
    from . import model_core

    if mode in ("lsai_uplink", "distributed"):
        return model_core.serialized_size(model_shapes)
    if mode == "lsai_downlink":
        return model_core.serialized_size(model_shapes) + branch_bytes
    if mode == "centralized_uplink":
        return PACKET_HEADER_BYTES + n_observations * OBS_DIM_BYTES
    if mode == "centralized_downlink":
        return PACKET_HEADER_BYTES + n_actions * 2 * 8
    raise ValueError(f"unknown payload mode {mode!r}")
