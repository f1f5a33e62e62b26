"""Builders shared by the scripted-scenario tests."""

import random

from manetsim.energy import EnergyLedger, EnergyParams
from manetsim.engine import Scheduler
from manetsim.mac import MacParams
from manetsim.mobility import MobilityParams, Motion, Terrain
from manetsim.network import Network
from manetsim.radio import RadioParams


class ScriptedRng:
    """Stands in for a MAC rng; hands out preset backoff slot counts."""

    def __init__(self, slots):
        self.slots = list(slots)
        self.drawn = []

    def randint(self, a, b):
        s = self.slots.pop(0) if self.slots else 0
        assert a <= s <= b, f"scripted slot {s} outside [{a}, {b}]"
        self.drawn.append((s, b))
        return s


def static_net(positions, energy=None, mac=None, rngs=None, stop_at_first_death=True):
    """A bare network on fixed positions with no routing agents attached."""
    sched = Scheduler()
    n = len(positions)
    radio = RadioParams()
    motion = Motion(sched, Terrain(), MobilityParams(model="none"), positions,
                    [random.Random(i) for i in range(n)])
    energy = energy or EnergyParams()
    ledgers = [EnergyLedger.from_params(energy, radio.radiated_power) for _ in range(n)]
    rngs = rngs or [random.Random(100 + i) for i in range(n)]
    net = Network(sched, radio, mac or MacParams(), motion, ledgers, rngs, stop_at_first_death)
    return net


def line(n, spacing=200.0, y=750.0):
    return [(100.0 + i * spacing, y) for i in range(n)]


def bfs_depths(adj, root, limit=None):
    """Plain BFS oracle: node -> hop count from ``root``."""
    depth = {root: 0}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            if limit is not None and depth[u] >= limit:
                continue
            for v in sorted(adj.get(u, ())):
                if v not in depth:
                    depth[v] = depth[u] + 1
                    nxt.append(v)
        frontier = nxt
    return depth


def geometric_adjacency(positions, rng_m=250.0):
    adj = {i: set() for i in range(len(positions))}
    for i, (xi, yi) in enumerate(positions):
        for j, (xj, yj) in enumerate(positions):
            if i != j and (xi - xj) ** 2 + (yi - yj) ** 2 <= rng_m ** 2:
                adj[i].add(j)
    return adj


# Hidden terminal: A=0, B=1, C=2 on a line; A and C are 400 m apart.
HIDDEN_POSITIONS = [(100.0, 100.0), (300.0, 100.0), (500.0, 100.0)]
HIDDEN_PAYLOAD = 64            # + 32 B header -> 96 B -> 384 us at 2 Mbps
HIDDEN_C_SEND = 200            # C queues its frame at t = 200 us
HIDDEN_SLOTS = {0: [0, 0], 2: [0, 30]}
HIDDEN_END = 5_000


def hidden_terminal_run():
    """A and C both unicast one frame to B; the first attempts overlap at B."""
    net = static_net(HIDDEN_POSITIONS,
                     rngs=[ScriptedRng(HIDDEN_SLOTS[0]), random.Random(1), ScriptedRng(HIDDEN_SLOTS[2])])
    sched = net.sched
    got = []

    class Sink:
        def __init__(self, nid):
            self.nid = nid

        def receive(self, msg, prev):
            got.append((sched.now, self.nid, msg, prev))

        def on_link_failure(self, frame):
            got.append((sched.now, "fail", frame.src))

        def stop(self):
            pass

        def buffered(self):
            return []

    for node in net.nodes:
        node.agent = Sink(node.id)
    net.start_energy()
    net.unicast(0, 1, "from-A", HIDDEN_PAYLOAD)
    sched.at(HIDDEN_C_SEND, "timer", lambda ev: net.unicast(2, 1, "from-C", HIDDEN_PAYLOAD))
    sched.run(until=HIDDEN_END)
    for node in net.nodes:
        node.ledger.settle(HIDDEN_END)
    return net, got


def hidden_terminal_oracle():
    """Hand-built timeline of the scenario above (ticks = us).

    Airtimes: data 96 B -> 384, ACK 32 B -> 128.  ACK timeout after a data
    frame ends = SIFS 10 + 128 + slot 20 = 158.  DIFS 50, slot 20.
      A try 1  [50, 434)      backoff slot 0 from t=0
      C try 1  [250, 634)     backoff slot 0 from t=200; C cannot hear A
      -> overlap at B: both frames lost, no ACKs
      A timeout 434+158=592; retry slot 0 -> [642, 1026) intact at B
      B ACK to A [1036, 1164) (SIFS after 1026), heard by A and C
      C timeout 634+158=792; retry slot 30 -> 792+50+600=1442 -> [1442, 1826)
      B ACK to C [1836, 1964), heard by A and C
    """
    tx = {0: [(50, 434), (642, 1026)], 1: [(1036, 1164), (1836, 1964)],
          2: [(250, 634), (1442, 1826)]}
    # reception intervals per node: everything an in-range neighbour sends
    heard = {0: tx[1], 1: tx[0] + tx[2], 2: tx[1]}
    return tx, heard


def union_length(intervals):
    total, cur_s, cur_e = 0, None, None
    for s, e in sorted(intervals):
        if cur_e is None or s > cur_e:
            if cur_e is not None:
                total += cur_e - cur_s
            cur_s, cur_e = s, e
        else:
            cur_e = max(cur_e, e)
    if cur_e is not None:
        total += cur_e - cur_s
    return total
