"""Zone Routing Protocol.

Three cooperating parts:

* IARP: every node periodically floods its direct-neighbor list with TTL
  ``r - 1``.  A node's zone is a breadth-first search of depth ``r`` over
  its own neighbors plus the neighbor lists it has heard.
* IERP/BRP: a destination outside the zone triggers a query that is relayed
  only to peripheral (depth ``r``) nodes, source-routed along IARP paths.
  The query carries the accumulated path and a bitmap of covered nodes.
  A border node whose zone holds the target replies with the full route.
* Data travels source-routed outside the zone and hop-by-hop on IARP next
  hops once the destination is inside the current node's zone.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..engine import TIMER
from ..packets import DATA, DataPacket, Frame
from .base import DiscoveryParams, RoutingAgent
from .srcroute import Route, RouteCache, RouteError, header_bytes, splice


@dataclass(frozen=True)
class ZrpParams:
    zone_radius: int = 2
    iarp_period: int = 10_000_000
    stale_periods: int = 3
    iarp_jitter: int = 50_000
    route_lifetime: int = 300_000_000
    discovery: DiscoveryParams = field(default_factory=DiscoveryParams)

    def __post_init__(self):
        if self.zone_radius < 1:
            raise ValueError("zone_radius must be >= 1")
        if self.iarp_period <= 0:
            raise ValueError("iarp_period must be positive")


@dataclass(frozen=True, slots=True)
class IarpAdvert:
    origin: int
    seq: int
    neighbors: tuple[int, ...]
    ttl: int

    @property
    def size(self) -> int:
        return 12 + 4 * len(self.neighbors)


@dataclass(frozen=True, slots=True)
class IerpQuery:
    originator: int
    target: int
    qid: int
    path: Route
    covered: int  # bitmap over node ids
    via: Route  # remaining IARP hops to the peripheral node

    def size(self, n_nodes: int) -> int:
        return 16 + 4 * len(self.path) + 4 * len(self.via) + math.ceil(n_nodes / 8)


@dataclass(frozen=True, slots=True)
class IerpReply:
    originator: int
    target: int
    qid: int
    route: Route
    back: Route  # path from the replying border node to the originator

    @property
    def size(self) -> int:
        return 12 + 4 * len(self.route) + header_bytes(self.back)


def zone_bfs(owner: int, adjacency, radius: int) -> tuple[dict[int, int], dict[int, int]]:
    """Depth and BFS parent of every node within ``radius`` hops of ``owner``.

    ``adjacency(u)`` returns u's neighbors.  Neighbors are visited in sorted
    order so parents (and hence next hops) are deterministic.
    """
    depth = {owner: 0}
    parent = {owner: owner}
    q = deque([owner])
    while q:
        u = q.popleft()
        du = depth[u]
        if du == radius:
            continue
        for v in sorted(adjacency(u)):
            if v not in depth:
                depth[v] = du + 1
                parent[v] = u
                q.append(v)
    return depth, parent


class Zrp(RoutingAgent):
    name = "ZRP"

    def __init__(self, node_id, net, params: ZrpParams, rng):
        super().__init__(node_id, net, params, rng)
        self.r = params.zone_radius
        self.stale = params.stale_periods * params.iarp_period
        self.heard: dict[int, int] = {}  # direct neighbor -> last receipt tick
        # origin -> (seq, neighbor tuple, receipt tick)
        self.link_state: dict[int, tuple[int, tuple[int, ...], int]] = {}
        self.flood_seen: dict[int, tuple[int, int]] = {}  # origin -> (seq, best ttl)
        self.adv_seq = 0
        self.qid = 0
        self.bc_seen: set[tuple[int, int]] = set()
        self.ierp = RouteCache(node_id, params.route_lifetime)
        self.timer = None
        self._version = 0
        self._zone_key = None
        self._depth: dict[int, int] = {}
        self._parent: dict[int, int] = {}
        self._valid_until = -1

    # -- IARP -----------------------------------------------------------------

    def start(self) -> None:
        phase = int(self.rng.random() * self.p.iarp_period)
        self.timer = self.net.sched.after(phase, TIMER, self._advertise, target=self.id)

    def stop(self) -> None:
        super().stop()
        self.net.sched.cancel(self.timer)
        self.timer = None

    def _advertise(self, ev) -> None:
        self.adv_seq += 1
        now = self.now
        nbrs = tuple(sorted(n for n, t in self.heard.items() if now - t <= self.stale))
        m = IarpAdvert(self.id, self.adv_seq, nbrs, self.r - 1)
        self.flood_seen[self.id] = (m.seq, m.ttl)
        self._send_advert(m, 0)
        self.counters["iarp_adverts"] += 1
        self.timer = self.net.sched.after(self.p.iarp_period, TIMER, self._advertise,
                                          target=self.id)

    def _send_advert(self, m: IarpAdvert, jitter: int) -> None:
        self.counters["iarp_frames"] += 1
        self.counters["iarp_bytes"] += m.size + self.net.mac_params.header_bytes
        self.net.broadcast(self.id, m, m.size, jitter)

    def _touch(self, nb: int) -> None:
        now = self.now
        t = self.heard.get(nb)
        if t is None or now - t > self.stale:
            self._version += 1
        self.heard[nb] = now

    def handle_advert(self, m: IarpAdvert) -> str:
        if m.origin == self.id:
            return "discard"
        now = self.now
        cur = self.link_state.get(m.origin)
        if cur is None or m.seq > cur[0]:
            if cur is None or cur[1] != m.neighbors or now - cur[2] > self.stale:
                self._version += 1
            self.link_state[m.origin] = (m.seq, m.neighbors, now)
        seen = self.flood_seen.get(m.origin)
        if seen is not None and (m.seq < seen[0] or (m.seq == seen[0] and m.ttl <= seen[1])):
            return "discard"
        self.flood_seen[m.origin] = (m.seq, m.ttl)
        if m.ttl <= 0:
            return "absorb"
        self.counters["iarp_rebroadcasts"] += 1
        fwd = IarpAdvert(m.origin, m.seq, m.neighbors, m.ttl - 1)
        self._send_advert(fwd, self.rng.randint(0, self.p.iarp_jitter))
        return "rebroadcast"

    # -- zone table -------------------------------------------------------------

    def _refresh_zone(self) -> None:
        now = self.now
        if self._zone_key == self._version and now <= self._valid_until:
            return
        stale = self.stale
        for n in [n for n, t in self.heard.items() if now - t > stale]:
            del self.heard[n]
        for o in [o for o, e in self.link_state.items() if now - e[2] > stale]:
            del self.link_state[o]
        me = self.id
        heard = self.heard
        ls = self.link_state

        def adjacency(u):
            if u == me:
                return heard.keys()
            e = ls.get(u)
            return e[1] if e is not None else ()

        self._depth, self._parent = zone_bfs(me, adjacency, self.r)
        times = list(heard.values()) + [e[2] for e in ls.values()]
        self._valid_until = min(times) + stale if times else math.inf
        self._zone_key = self._version

    def zone_membership(self) -> set[int]:
        self._refresh_zone()
        return set(self._depth)

    def peripheral_nodes(self) -> set[int]:
        self._refresh_zone()
        return {n for n, d in self._depth.items() if d == self.r}

    def in_zone(self, dest: int) -> bool:
        self._refresh_zone()
        return dest in self._depth

    def zone_path(self, dest: int) -> Route:
        """IARP path from this node to ``dest`` (which must be in the zone)."""
        self._refresh_zone()
        parent = self._parent
        out = [dest]
        while out[-1] != self.id:
            out.append(parent[out[-1]])
        return tuple(reversed(out))

    def next_hop(self, dest: int) -> Optional[int]:
        self._refresh_zone()
        if dest not in self._depth or dest == self.id:
            return None
        parent = self._parent
        n = dest
        while parent[n] != self.id:
            n = parent[n]
        return n

    # -- data ---------------------------------------------------------------------

    def send(self, pkt: DataPacket) -> str:
        if pkt.dst == self.id:
            self.deliver(pkt)
            return "local"
        if len(pkt.trace) > 2 * self.net.n:
            self.drop(pkt, "ttl")
            return "drop"
        nh = self.next_hop(pkt.dst)
        if nh is not None:
            pkt.route = None
            self.counters["zrp_intrazone_tx"] += 1
            self.net.unicast(self.id, nh, pkt, pkt.size, DATA)
            return "intrazone"
        route = self.ierp.lookup(pkt.dst, self.now)
        if route is not None:
            pkt.route = route
            self._source_routed(pkt, route[1])
            return "ierp"
        self.hold(pkt)
        return "query"

    def _source_routed(self, pkt: DataPacket, nxt: int) -> None:
        hdr = header_bytes(pkt.route)
        self.counters["zrp_header_bytes"] += hdr
        self.net.unicast(self.id, nxt, pkt, pkt.size + hdr, DATA)

    def forward_data(self, pkt: DataPacket) -> str:
        if pkt.dst == self.id:
            self.deliver(pkt)
            return "deliver"
        route = pkt.route
        if route is None or self.in_zone(pkt.dst):
            return self.send(pkt)
        if self.id not in route:
            self.drop(pkt, "not_on_route")
            return "discard"
        i = route.index(self.id)
        if i == len(route) - 1:
            return self.send(pkt)
        self._source_routed(pkt, route[i + 1])
        return "forward"

    def receive(self, msg, prev_hop: int) -> None:
        self._touch(prev_hop)
        t = type(msg)
        if t is DataPacket:
            self.forward_data(msg.hop(self.id))
        elif t is IarpAdvert:
            self.handle_advert(msg)
        elif t is IerpQuery:
            self.handle_query(msg)
        elif t is IerpReply:
            self.handle_reply(msg)
        elif t is RouteError:
            self.handle_route_error(msg)

    # -- IERP / bordercast ------------------------------------------------------------

    def _discover(self, dest: int, attempt: int) -> None:
        self.qid += 1
        self.counters["zrp_queries"] += 1
        q = IerpQuery(self.id, dest, self.qid, (self.id,), 0, ())
        self.bordercast(q)

    def bordercast(self, q: IerpQuery) -> str:
        """Process ``q`` at this node as a border node: reply or relay onward."""
        if q.target == self.id or self.in_zone(q.target):
            return self._reply(q)
        key = (q.originator, q.qid)
        if key in self.bc_seen:
            self.counters["zrp_query_duplicates"] += 1
            return "discard"
        self.bc_seen.add(key)
        self.counters["zrp_bordercast_nodes"] += 1
        zone_bits = 0
        for n in self.zone_membership():
            zone_bits |= 1 << n
        targets = [p for p in sorted(self.peripheral_nodes()) if not (q.covered >> p) & 1]
        if not targets:
            self.counters["zrp_query_dead"] += 1
            return "dead"
        covered = q.covered | zone_bits
        for p in targets:
            via = self.zone_path(p)[1:]
            self.counters["zrp_bordercast_relays"] += 1
            self._send_query(IerpQuery(q.originator, q.target, q.qid, q.path, covered, via))
        return "relay"

    def _send_query(self, q: IerpQuery) -> None:
        self.net.unicast(self.id, q.via[0], q, q.size(self.net.n))

    def handle_query(self, q: IerpQuery) -> str:
        if not q.via or q.via[0] != self.id:
            return "discard"
        path = splice(q.path, (q.path[-1], self.id))
        via = q.via[1:]
        q = IerpQuery(q.originator, q.target, q.qid, path, q.covered, via)
        if via:
            self.counters["zrp_query_hops"] += 1
            self._send_query(q)
            return "relay"
        return self.bordercast(q)

    def _reply(self, q: IerpQuery) -> str:
        ext = (self.id,) if q.target == self.id else self.zone_path(q.target)
        route = splice(q.path, ext)
        if q.originator == self.id:
            self.ierp.add(route, self.now)
            self.route_found(q.target)
            return "local"
        back = tuple(reversed(q.path))
        m = IerpReply(q.originator, q.target, q.qid, route, back)
        self.counters["zrp_replies"] += 1
        self.net.unicast(self.id, back[1], m, m.size)
        return "reply"

    def handle_reply(self, m: IerpReply) -> str:
        back = m.back
        if self.id not in back:
            return "discard"
        i = back.index(self.id)
        if i == len(back) - 1:
            self.counters["zrp_replies_received"] += 1
            self.ierp.add(m.route, self.now)
            self.route_found(m.target)
            return "consume"
        self.net.unicast(self.id, back[i + 1], m, m.size)
        return "forward"

    # -- maintenance ------------------------------------------------------------------

    def on_link_failure(self, frame: Frame) -> None:
        nb = frame.dst
        if self.heard.pop(nb, None) is not None:
            self._version += 1
        self.counters["zrp_ierp_purged"] += self.ierp.purge_link(self.id, nb)
        reported = set()
        for f in [frame] + self.net.nodes[self.id].mac.purge(nb):
            p = f.payload
            if isinstance(p, DataPacket):
                if p.src == self.id:
                    self.send(p.clone())
                    continue
                if p.route is not None and p.src not in reported:
                    reported.add(p.src)
                    # a transient intrazone loop can repeat nodes in the trace
                    trace = tuple(reversed(p.trace))
                    back = splice(trace[:1], trace)
                    if len(back) > 1:
                        self._send_route_error(RouteError(self.id, nb, back))
                self.drop(p, "link")
            elif isinstance(p, IerpQuery):
                self.counters["zrp_query_lost"] += 1

    def _send_route_error(self, m: RouteError) -> None:
        self.counters["rerr_sent"] += 1
        self.net.unicast(self.id, m.route[1], m, 12 + header_bytes(m.route))

    def handle_route_error(self, m: RouteError) -> str:
        self.counters["zrp_ierp_purged"] += self.ierp.purge_link(m.a, m.b)
        route = m.route
        if self.id not in route:
            return "discard"
        i = route.index(self.id)
        if i == len(route) - 1:
            return "consume"
        self.net.unicast(self.id, route[i + 1], m, 12 + header_bytes(m.route))
        return "forward"
