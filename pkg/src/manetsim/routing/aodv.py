"""Ad hoc On-demand Distance Vector routing.

Link breaks are learned from MAC retry exhaustion only (no HELLO beacons)
and there is no local repair.  Whenever a route is invalidated, by link
break, RERR or lifetime expiry, its destination sequence number is bumped,
so a node can only re-learn that destination from a strictly fresher
advertisement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..packets import DATA, DataPacket, Frame
from .base import DiscoveryParams, RoutingAgent

RREQ_BYTES = 24
RREP_BYTES = 20
RERR_BYTES = 20


@dataclass(frozen=True)
class AodvParams:
    active_route_timeout: int = 3_000_000
    my_route_timeout: int = 6_000_000
    delete_period: int = 15_000_000
    path_discovery_time: int = 5_600_000
    discovery: DiscoveryParams = field(default_factory=DiscoveryParams)


@dataclass(frozen=True, slots=True)
class Rreq:
    src: int
    src_seq: int
    broadcast_id: int
    dest: int
    dest_seq: int  # last known sequence number for dest, 0 if unknown
    hop_count: int
    ttl: int


@dataclass(frozen=True, slots=True)
class Rrep:
    dest: int
    dest_seq: int
    hop_count: int
    originator: int
    lifetime: int


@dataclass(frozen=True, slots=True)
class Rerr:
    unreachable: tuple[tuple[int, int], ...]


class AodvRoute:
    __slots__ = ("dest", "next_hop", "hop_count", "seq", "valid_seq", "expiry", "valid",
                 "precursors")

    def __init__(self, dest: int, next_hop: int, hop_count: int, seq: int, valid_seq: bool,
                 expiry: int):
        self.dest = dest
        self.next_hop = next_hop
        self.hop_count = hop_count
        self.seq = seq
        self.valid_seq = valid_seq
        self.expiry = expiry
        self.valid = True
        self.precursors: set[int] = set()

    def __repr__(self) -> str:
        state = "valid" if self.valid else "invalid"
        return (f"AodvRoute({self.dest} via {self.next_hop}, hops={self.hop_count}, "
                f"seq={self.seq}, {state}, exp={self.expiry})")


class Aodv(RoutingAgent):
    name = "AODV"

    def __init__(self, node_id, net, params: AodvParams, rng):
        super().__init__(node_id, net, params, rng)
        self.seq = 0
        self.broadcast_id = 0
        self.routes: dict[int, AodvRoute] = {}
        self.seen: dict[tuple[int, int], int] = {}

    # -- route table --------------------------------------------------------

    def lookup(self, dest: int) -> Optional[AodvRoute]:
        """The valid, unexpired route to ``dest``, expiring stale ones."""
        r = self.routes.get(dest)
        if r is None:
            return None
        if r.valid:
            if r.expiry > self.now:
                return r
            self._invalidate(r)
            return None
        if r.expiry <= self.now:
            del self.routes[dest]
        return None

    def _invalidate(self, r: AodvRoute, seq: int = 0) -> None:
        r.valid = False
        r.seq = max(r.seq + 1, seq)
        r.expiry = self.now + self.p.delete_period

    def _update(self, dest: int, next_hop: int, hop_count: int, seq: int, lifetime: int) -> bool:
        """Install a route if it is fresher, or equally fresh and either
        shorter or replacing an invalid entry."""
        now = self.now
        r = self.routes.get(dest)
        if r is not None and r.valid and r.expiry <= now:
            self._invalidate(r)
        if r is None:
            self.routes[dest] = AodvRoute(dest, next_hop, hop_count, seq, True, now + lifetime)
            return True
        if seq > r.seq or (seq == r.seq and (not r.valid or hop_count < r.hop_count)):
            r.next_hop = next_hop
            r.hop_count = hop_count
            r.seq = seq
            r.valid_seq = True
            r.valid = True
            r.expiry = now + lifetime
            return True
        return False

    def _touch_neighbor(self, nb: int) -> None:
        """Hearing ``nb`` directly yields a one-hop route to it."""
        now = self.now
        life = now + self.p.active_route_timeout
        r = self.routes.get(nb)
        if r is None:
            self.routes[nb] = AodvRoute(nb, nb, 1, 0, False, life)
            return
        if not r.valid or r.expiry <= now or r.next_hop != nb or r.hop_count != 1:
            # keep the sequence number: it never decreases
            r.next_hop = nb
            r.hop_count = 1
            r.valid = True
        if life > r.expiry:
            r.expiry = life

    def _refresh(self, r: Optional[AodvRoute]) -> None:
        if r is not None and r.valid:
            life = self.now + self.p.active_route_timeout
            if life > r.expiry:
                r.expiry = life

    # -- data ----------------------------------------------------------------

    def send(self, pkt: DataPacket) -> None:
        if pkt.dst == self.id:
            self.deliver(pkt)
            return
        r = self.lookup(pkt.dst)
        if r is not None:
            self._forward(pkt, r)
        else:
            self.hold(pkt)

    def _forward(self, pkt: DataPacket, r: AodvRoute) -> None:
        self._refresh(r)
        self._refresh(self.routes.get(r.next_hop))
        self._refresh(self.routes.get(pkt.src))
        self.net.unicast(self.id, r.next_hop, pkt, pkt.size, DATA)

    def _discover(self, dest: int, attempt: int) -> None:
        self.originate_rreq(dest)

    def originate_rreq(self, dest: int) -> Rreq:
        self.seq += 1
        self.broadcast_id += 1
        known = self.routes.get(dest)
        m = Rreq(self.id, self.seq, self.broadcast_id, dest, known.seq if known else 0, 0,
                 self.p.discovery.ttl)
        self.seen[(self.id, self.broadcast_id)] = self.now + self.p.path_discovery_time
        self.counters["rreq_originated"] += 1
        self.net.broadcast(self.id, m, RREQ_BYTES)
        return m

    # -- control -------------------------------------------------------------

    def receive(self, msg, prev_hop: int) -> None:
        self._touch_neighbor(prev_hop)
        t = type(msg)
        if t is DataPacket:
            self._on_data(msg.hop(self.id), prev_hop)
        elif t is Rreq:
            self.handle_rreq(msg, prev_hop)
        elif t is Rrep:
            self.handle_rrep(msg, prev_hop)
        elif t is Rerr:
            self.handle_rerr(msg, prev_hop)

    def _on_data(self, pkt: DataPacket, prev_hop: int) -> None:
        if pkt.dst == self.id:
            self.deliver(pkt)
            return
        r = self.lookup(pkt.dst)
        if r is None:
            self.drop(pkt, "no_route")
            old = self.routes.get(pkt.dst)
            seq = old.seq if old is not None else 0
            self._send_rerr(((pkt.dst, seq),), {prev_hop})
            return
        r.precursors.add(prev_hop)
        self._forward(pkt, r)

    def _seen(self, key: tuple[int, int]) -> bool:
        exp = self.seen.get(key)
        if exp is not None and exp > self.now:
            return True
        if len(self.seen) > 512:
            now = self.now
            self.seen = {k: v for k, v in self.seen.items() if v > now}
        self.seen[key] = self.now + self.p.path_discovery_time
        return False

    def handle_rreq(self, m: Rreq, prev_hop: int) -> str:
        if self._seen((m.src, m.broadcast_id)):
            self.counters["rreq_duplicates"] += 1
            return "discard"
        hops = m.hop_count + 1
        self._update(m.src, prev_hop, hops, m.src_seq, self.p.active_route_timeout)
        rev = self.lookup(m.src)
        if m.dest == self.id:
            self.seq = max(self.seq, m.dest_seq)
            if rev is None:
                return "discard"
            self._send_rrep(Rrep(self.id, self.seq, 0, m.src, self.p.my_route_timeout), rev)
            return "reply"
        r = self.lookup(m.dest)
        if r is not None and r.valid_seq and r.seq >= m.dest_seq and rev is not None:
            r.precursors.add(rev.next_hop)
            rev.precursors.add(r.next_hop)
            self.counters["rrep_intermediate"] += 1
            self._send_rrep(Rrep(m.dest, r.seq, r.hop_count, m.src, r.expiry - self.now), rev)
            return "reply"
        if m.ttl <= 1:
            return "discard"
        known = max(m.dest_seq, r.seq if r is not None else 0)
        fwd = Rreq(m.src, m.src_seq, m.broadcast_id, m.dest, known, hops, m.ttl - 1)
        self.counters["rreq_forwarded"] += 1
        self.net.broadcast(self.id, fwd, RREQ_BYTES, self.jitter())
        return "forward"

    def _send_rrep(self, m: Rrep, rev: AodvRoute) -> None:
        self.counters["rrep_sent"] += 1
        self.net.unicast(self.id, rev.next_hop, m, RREP_BYTES)

    def handle_rrep(self, m: Rrep, prev_hop: int) -> str:
        if m.dest == self.id:
            return "discard"
        hops = m.hop_count + 1
        self._update(m.dest, prev_hop, hops, m.dest_seq, max(m.lifetime, 1))
        if m.originator == self.id:
            if self.lookup(m.dest) is not None:
                self.route_found(m.dest)
            return "consume"
        rev = self.lookup(m.originator)
        if rev is None:
            self.counters["rrep_no_reverse"] += 1
            return "discard"
        fwd = self.routes.get(m.dest)
        if fwd is not None:
            fwd.precursors.add(rev.next_hop)
        rev.precursors.add(prev_hop)
        self._refresh(rev)
        self.counters["rrep_forwarded"] += 1
        self.net.unicast(self.id, rev.next_hop,
                         Rrep(m.dest, m.dest_seq, hops, m.originator, m.lifetime), RREP_BYTES)
        return "forward"

    # -- maintenance -----------------------------------------------------------

    def on_link_failure(self, frame: Frame) -> None:
        nb = frame.dst
        failed = [frame] + self.net.nodes[self.id].mac.purge(nb)
        self.break_link(nb)
        for f in failed:
            p = f.payload
            if isinstance(p, DataPacket):
                if p.src == self.id:
                    self.send(p.clone())
                else:
                    self.drop(p, "link")

    def break_link(self, nb: int) -> list[tuple[int, int]]:
        """Invalidate every route through ``nb`` and report it upstream."""
        lost = []
        users: set[int] = set()
        for r in self.routes.values():
            if r.valid and r.next_hop == nb:
                self._invalidate(r)
                lost.append((r.dest, r.seq))
                users |= r.precursors
                r.precursors = set()
        if lost and users:
            self._send_rerr(tuple(lost), users)
        return lost

    def _send_rerr(self, lost: tuple, users: set[int]) -> None:
        self.counters["rerr_sent"] += 1
        m = Rerr(lost)
        if len(users) == 1:
            self.net.unicast(self.id, next(iter(users)), m, RERR_BYTES)
        else:
            self.net.broadcast(self.id, m, RERR_BYTES)

    def handle_rerr(self, m: Rerr, prev_hop: int) -> None:
        lost = []
        users: set[int] = set()
        for dest, seq in m.unreachable:
            r = self.routes.get(dest)
            if r is not None and r.valid and r.next_hop == prev_hop:
                self._invalidate(r, seq)
                lost.append((dest, r.seq))
                users |= r.precursors
                r.precursors = set()
        if lost and users:
            self._send_rerr(tuple(lost), users)


def check_loop_freedom(agents: dict[int, Aodv], now: int) -> list[str]:
    """Check every valid route chain in a routing-table snapshot.

    Along next-hop pointers toward a fixed destination the key
    ``(seq, -hop_count)`` must strictly increase, and no pointer cycle may
    exist.  Returns a list of violation descriptions (empty when clean).
    """
    problems = []
    for x, agent in agents.items():
        for dest, r in agent.routes.items():
            if not r.valid or r.expiry <= now:
                continue
            visited = {x}
            cur, entry = x, r
            while True:
                nxt = entry.next_hop
                if nxt == dest:
                    break
                if nxt in visited:
                    problems.append(f"cycle toward {dest} through {sorted(visited)}")
                    break
                visited.add(nxt)
                nb = agents.get(nxt)
                e2 = nb.routes.get(dest) if nb is not None else None
                if e2 is None or not e2.valid or e2.expiry <= now:
                    break
                if (e2.seq, -e2.hop_count) <= (entry.seq, -entry.hop_count):
                    problems.append(f"dest {dest}: {cur}{(entry.seq, entry.hop_count)} -> "
                                    f"{nxt}{(e2.seq, e2.hop_count)} not increasing")
                    break
                cur, entry = nxt, e2
    return problems
