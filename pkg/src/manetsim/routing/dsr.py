"""Dynamic Source Routing.

Route maintenance uses the MAC ACK as the hop-by-hop acknowledgement: a
frame whose MAC retries are exhausted is resubmitted ``maintenance_retry``
more times before the link is declared broken and a route error is sent
back to the packet's source.  Only the target answers route requests
unless ``cache_reply`` is set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..packets import DATA, DataPacket, Frame
from .base import DiscoveryParams, RoutingAgent
from .srcroute import Route, RouteCache, RouteError, header_bytes, is_simple


@dataclass(frozen=True)
class DsrParams:
    cache_lifetime: int = 300_000_000
    dup_window: int = 30_000_000
    maintenance_retry: int = 2
    cache_reply: bool = False
    discovery: DiscoveryParams = field(default_factory=DiscoveryParams)


@dataclass(frozen=True, slots=True)
class DsrRreq:
    initiator: int
    target: int
    request_id: int
    record: Route

    @property
    def size(self) -> int:
        return 8 + 4 * len(self.record)


@dataclass(frozen=True, slots=True)
class DsrRrep:
    route: Route

    @property
    def size(self) -> int:
        return 4 + 4 * len(self.route)


def rerr_size(m: RouteError) -> int:
    return 12 + header_bytes(m.route)


class Dsr(RoutingAgent):
    name = "DSR"

    def __init__(self, node_id, net, params: DsrParams, rng):
        super().__init__(node_id, net, params, rng)
        self.cache = RouteCache(node_id, params.cache_lifetime)
        self.request_id = 0
        self.seen: dict[tuple[int, int], int] = {}

    # -- sending ---------------------------------------------------------------

    def send(self, pkt: DataPacket) -> str:
        if pkt.dst == self.id:
            self.deliver(pkt)
            return "local"
        route = self.cache.lookup(pkt.dst, self.now)
        if route is None:
            self.counters["dsr_cache_miss"] += 1
            self.hold(pkt)
            return "discovery"
        self.counters["dsr_cache_hit"] += 1
        pkt.route = route
        self._unicast_data(pkt, route[1])
        return "sent"

    def _unicast_data(self, pkt: DataPacket, nxt: int) -> None:
        hdr = header_bytes(pkt.route)
        self.counters["dsr_header_bytes"] += hdr
        self.net.unicast(self.id, nxt, pkt, pkt.size + hdr, DATA)

    def _discover(self, dest: int, attempt: int) -> None:
        self.request_id += 1
        m = DsrRreq(self.id, dest, self.request_id, (self.id,))
        self.seen[(self.id, self.request_id)] = self.now
        self.counters["rreq_originated"] += 1
        self.net.broadcast(self.id, m, m.size)

    # -- receiving -------------------------------------------------------------

    def receive(self, msg, prev_hop: int) -> None:
        t = type(msg)
        if t is DataPacket:
            self.forward_data(msg.hop(self.id))
        elif t is DsrRreq:
            self.handle_rreq(msg)
        elif t is DsrRrep:
            self.handle_rrep(msg)
        elif t is RouteError:
            self.handle_route_error(msg)

    def _recently_seen(self, key: tuple[int, int]) -> bool:
        now = self.now
        t = self.seen.get(key)
        if t is not None and now - t <= self.p.dup_window:
            return True
        if len(self.seen) > 512:
            w = self.p.dup_window
            self.seen = {k: v for k, v in self.seen.items() if now - v <= w}
        self.seen[key] = now
        return False

    def handle_rreq(self, m: DsrRreq) -> str:
        if m.target == self.id:
            route = m.record + (self.id,)
            if not is_simple(route):
                return "discard"
            self.cache.add(tuple(reversed(route)), self.now)
            self._reply(route)
            return "reply"
        if self.id in m.record or self._recently_seen((m.initiator, m.request_id)):
            self.counters["rreq_duplicates"] += 1
            return "discard"
        if self.p.cache_reply:
            cached = self.cache.lookup(m.target, self.now)
            if cached is not None:
                route = m.record + cached
                if is_simple(route):
                    self.counters["rrep_from_cache"] += 1
                    self._reply(route)
                    return "reply"
        if len(m.record) >= self.p.discovery.ttl:
            return "discard"
        fwd = DsrRreq(m.initiator, m.target, m.request_id, m.record + (self.id,))
        self.counters["rreq_forwarded"] += 1
        self.net.broadcast(self.id, fwd, fwd.size, self.jitter())
        return "rebroadcast"

    def _reply(self, route: Route) -> None:
        rep = DsrRrep(route)
        self.counters["rrep_sent"] += 1
        i = route.index(self.id)
        self.net.unicast(self.id, route[i - 1], rep, rep.size)

    def handle_rrep(self, m: DsrRrep) -> str:
        route = m.route
        if self.id not in route:
            return "discard"
        i = route.index(self.id)
        if i == 0:
            self.cache.add(route, self.now)
            self.counters["rrep_received"] += 1
            self.route_found(route[-1])
            return "consume"
        self.cache.add(route[i:], self.now)
        self.counters["rrep_forwarded"] += 1
        self.net.unicast(self.id, route[i - 1], m, m.size)
        return "forward"

    def forward_data(self, pkt: DataPacket) -> str:
        route = pkt.route
        if route is None or self.id not in route:
            self.drop(pkt, "not_on_route")
            return "discard"
        i = route.index(self.id)
        if i == len(route) - 1:
            self.deliver(pkt)
            return "deliver"
        self._unicast_data(pkt, route[i + 1])
        return "forward"

    # -- maintenance -------------------------------------------------------------

    def on_link_failure(self, frame: Frame) -> None:
        if frame.attempts < self.p.maintenance_retry:
            frame.attempts += 1
            self.counters["dsr_maintenance_retx"] += 1
            self.net.resend(frame, front=True)
            return
        nb = frame.dst
        self.link_broken(nb, [frame] + self.net.nodes[self.id].mac.purge(nb))

    def link_broken(self, nb: int, frames: list[Frame]) -> None:
        self.counters["dsr_cache_purged"] += self.cache.purge_link(self.id, nb)
        reported = set()
        for f in frames:
            p = f.payload
            if isinstance(p, DataPacket):
                if p.src == self.id:
                    self.send(p.clone())
                    continue
                if p.src not in reported and p.route is not None and self.id in p.route:
                    reported.add(p.src)
                    i = p.route.index(self.id)
                    back = tuple(reversed(p.route[:i + 1]))
                    self._send_route_error(RouteError(self.id, nb, back))
                self.drop(p, "link")
            elif isinstance(p, RouteError):
                self.counters["rerr_undeliverable"] += 1

    def _send_route_error(self, m: RouteError) -> None:
        self.counters["rerr_sent"] += 1
        self.net.unicast(self.id, m.route[1], m, rerr_size(m))

    def handle_route_error(self, m: RouteError) -> str:
        self.counters["dsr_cache_purged"] += self.cache.purge_link(m.a, m.b)
        route = m.route
        if self.id not in route:
            return "discard"
        i = route.index(self.id)
        if i == len(route) - 1:
            return "consume"
        self.counters["rerr_forwarded"] += 1
        self.net.unicast(self.id, route[i + 1], m, rerr_size(m))
        return "forward"
