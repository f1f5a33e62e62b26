"""CBR traffic and per-run statistics."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

from .engine import TRAFFIC, seconds, ticks
from .packets import DataPacket

if TYPE_CHECKING:
    from .network import Network


@dataclass(frozen=True)
class CbrFlow:
    src: int
    dst: int
    packet_size: int = 512
    interval: float = 1.0
    start: float = 0.0
    end: float = math.inf

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError("flow source and destination must differ")
        if self.interval <= 0:
            raise ValueError("flow interval must be positive")

    @property
    def offered_bps(self) -> float:
        return self.packet_size * 8 / self.interval


def spawn_flows(n_connections: int, nodes: Sequence[int], rng: random.Random,
                packet_size: int = 512, interval: float = 1.0,
                stagger: float = 1.0) -> list[CbrFlow]:
    """Draw distinct ordered (src, dst) pairs uniformly without replacement.

    Start times are spread uniformly over ``[0, stagger)`` seconds.
    """
    pairs = list(itertools.permutations(nodes, 2))
    if n_connections > len(pairs):
        raise ValueError(f"{n_connections} connections exceed {len(pairs)} possible pairs")
    chosen = rng.sample(pairs, n_connections)
    return [CbrFlow(s, d, packet_size, interval, rng.random() * stagger) for s, d in chosen]


class FlowDriver:
    """Schedules the per-flow packet ticks."""

    def __init__(self, net: "Network", flows: Sequence[CbrFlow]):
        self.net = net
        self.flows = list(flows)
        self.offered = [0] * len(self.flows)

    def start(self) -> None:
        for i, f in enumerate(self.flows):
            self.net.sched.at(ticks(f.start), TRAFFIC, self.flow_tick, i, target=f.src)

    def flow_tick(self, ev) -> None:
        i = ev.payload
        f = self.flows[i]
        net = self.net
        now = net.sched.now
        node = net.nodes[f.src]
        if not node.alive or seconds(now) >= f.end:
            return
        self.offered[i] += 1
        pkt = DataPacket(net.next_uid(), i, f.src, f.dst, f.packet_size, now)
        net.offer(pkt)
        node.agent.send(pkt)
        net.sched.at(now + ticks(f.interval), TRAFFIC, self.flow_tick, i, target=f.src)


@dataclass
class RunStatistics:
    config_hash: str
    seed: int
    version: str
    protocol: str
    horizon: float
    death_times: dict[int, float] = field(default_factory=dict)
    offered: int = 0
    delivered: int = 0
    dropped: int = 0
    in_flight: int = 0
    counters: dict[str, int] = field(default_factory=dict)
    energy: list[dict[str, float]] = field(default_factory=list)
    flows: list[tuple[int, int]] = field(default_factory=list)
    flow_offered: list[int] = field(default_factory=list)
    flow_delivered: list[int] = field(default_factory=list)
    flow_dropped: list[int] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    events: int = 0
    end_time: float = 0.0
    trace_hash: Optional[str] = None

    @property
    def network_lifetime(self) -> float:
        return network_lifetime(self)

    @property
    def first_dead_node(self) -> Optional[int]:
        if not self.death_times:
            return None
        return min(self.death_times, key=lambda n: (self.death_times[n], n))

    @property
    def exceeded_horizon(self) -> bool:
        return not self.death_times

    def energy_total(self, mode: str) -> float:
        return sum(e[mode] for e in self.energy)


def network_lifetime(stats: RunStatistics) -> float:
    """Time of the first battery exhaustion; ``inf`` if no node died."""
    if not stats.death_times:
        return math.inf
    return min(stats.death_times.values())
