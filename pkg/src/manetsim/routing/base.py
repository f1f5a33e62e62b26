"""Shared machinery for the on-demand parts of every protocol: a per-
destination packet buffer and a route-discovery timer with binary
exponential retries."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator

from ..engine import TIMER
from ..packets import DataPacket, Frame

if TYPE_CHECKING:
    from ..network import Network

# 2 * NODE_TRAVERSAL_TIME (40 ms) * NET_DIAMETER (35), in ticks
NET_TRAVERSAL_TIME = 2_800_000


@dataclass(frozen=True)
class DiscoveryParams:
    net_traversal: int = NET_TRAVERSAL_TIME
    retries: int = 2
    buffer_limit: int = 64
    ttl: int = 35
    jitter: int = 10_000  # max rebroadcast jitter, ticks


class RoutingAgent:
    name = "base"

    def __init__(self, node_id: int, net: "Network", params, rng):
        self.id = node_id
        self.net = net
        self.p = params
        self.rng = rng
        self.counters = net.counters
        self.buffer: dict[int, deque[DataPacket]] = {}
        self.discovery: dict[int, list] = {}

    # lifecycle
    def start(self) -> None:
        pass

    def stop(self) -> None:
        for d in self.discovery.values():
            self.net.sched.cancel(d[1])
        self.discovery.clear()

    # protocol surface
    def send(self, pkt: DataPacket) -> None:
        raise NotImplementedError

    def receive(self, msg, prev_hop: int) -> None:
        raise NotImplementedError

    def on_link_failure(self, frame: Frame) -> None:
        raise NotImplementedError

    def _discover(self, dest: int, attempt: int) -> None:
        raise NotImplementedError

    # helpers
    @property
    def now(self) -> int:
        return self.net.sched.now

    def jitter(self) -> int:
        return self.rng.randint(0, self.p.discovery.jitter)

    def buffered(self) -> Iterator[DataPacket]:
        for q in self.buffer.values():
            yield from q

    def deliver(self, pkt: DataPacket) -> None:
        self.net.deliver(pkt)

    def drop(self, pkt: DataPacket, reason: str) -> None:
        self.net.drop(pkt, reason)

    def hold(self, pkt: DataPacket) -> None:
        """Buffer ``pkt`` until a route to its destination is found."""
        q = self.buffer.setdefault(pkt.dst, deque())
        if len(q) >= self.p.discovery.buffer_limit:
            self.drop(pkt, "buffer_full")
        else:
            q.append(pkt)
        if pkt.dst not in self.discovery:
            self.discovery[pkt.dst] = [0, None]
            self._discover(pkt.dst, 0)
            if pkt.dst in self.discovery:  # discovery may resolve synchronously
                self._arm_discovery(pkt.dst)

    def _arm_discovery(self, dest: int) -> None:
        d = self.discovery[dest]
        timeout = self.p.discovery.net_traversal * (2 ** d[0])
        d[1] = self.net.sched.after(timeout, TIMER, self._discovery_timeout, dest, target=self.id)

    def _discovery_timeout(self, ev) -> None:
        dest = ev.payload
        d = self.discovery.get(dest)
        if d is None or d[1] is not ev:
            return
        if d[0] < self.p.discovery.retries:
            d[0] += 1
            self._discover(dest, d[0])
            if dest in self.discovery:
                self._arm_discovery(dest)
            return
        del self.discovery[dest]
        self.counters["discovery_failures"] += 1
        for pkt in self.buffer.pop(dest, ()):
            self.drop(pkt, "no_route")

    def route_found(self, dest: int) -> None:
        """Stop discovery for ``dest`` and release its buffered packets."""
        d = self.discovery.pop(dest, None)
        if d is not None:
            self.net.sched.cancel(d[1])
        for pkt in self.buffer.pop(dest, ()):
            self.send(pkt)
