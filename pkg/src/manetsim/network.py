"""Nodes, the shared channel and run-wide bookkeeping."""

from __future__ import annotations

import math
from collections import Counter
from typing import Callable, Optional

import numpy as np

from .energy import IDLE, RX, TX, EnergyLedger, crossing_ticks
from .engine import BATTERY_DEATH, FRAME_DELIVERY, TICKS_PER_SECOND, TIMER, Scheduler
from .mac import Mac, MacParams
from .packets import BROADCAST, CTRL, DATA, DataPacket, Frame
from .radio import RadioParams, airtime_ticks, range_distance


class Node:
    __slots__ = ("id", "alive", "ledger", "mac", "agent", "transmitting", "tx_end",
                 "tx_recs", "receptions", "busy_until", "idle_proj", "death_ev")

    def __init__(self, node_id: int, ledger: EnergyLedger):
        self.id = node_id
        self.alive = True
        self.ledger = ledger
        self.mac: Optional[Mac] = None
        self.agent = None
        self.transmitting = False
        self.tx_end = 0
        self.tx_recs: list = []
        # each reception is [frame, end_tick, intact]
        self.receptions: list[list] = []
        self.busy_until = 0
        self.idle_proj = math.inf
        self.death_ev = None

    def __repr__(self) -> str:
        return f"Node({self.id}{'' if self.alive else ', dead'})"


class Network:
    """The radio channel plus everything routing agents need from the world.

    Energy is settled on every change of a node's radio activity.  A node
    in TX or RX knows when that activity ends, so a battery crossing inside
    it is scheduled exactly; idle nodes share one watch timer set to the
    earliest idle-exhaustion time.
    """

    def __init__(self, sched: Scheduler, radio: RadioParams, mac_params: MacParams,
                 motion, ledgers: list[EnergyLedger], mac_rngs, stop_at_first_death: bool = True):
        self.sched = sched
        self.radio = radio
        self.bit_rate = radio.bit_rate
        self.mac_params = mac_params
        self.motion = motion
        self.range = range_distance(radio)
        self._range2 = self.range * self.range
        self.stop_at_first_death = stop_at_first_death
        self.nodes = [Node(i, led) for i, led in enumerate(ledgers)]
        for node, rng in zip(self.nodes, mac_rngs):
            node.mac = Mac(node, self, mac_params, rng)
            node.mac.on_failure = self._link_failure
        self.n = len(self.nodes)
        self._alive = np.ones(self.n, dtype=bool)
        self._airtime: dict[int, int] = {}
        self._nbr_cache: dict[int, tuple[list[Node], int, float]] = {}
        self._epoch = -1
        self.watch_time = math.inf
        self.watch_ev = None
        self.deaths: list[tuple[int, int]] = []
        self.counters: Counter = Counter()
        self.outcome: dict[int, str] = {}
        self.offered_uids: set[int] = set()
        self.flow_delivered: Counter = Counter()
        self.flow_dropped: Counter = Counter()
        self.delivery_log: list[DataPacket] = []
        self.keep_deliveries = False
        self._uid = 0
        self.on_death: Optional[Callable[[Node], None]] = None

    # -- geometry ---------------------------------------------------------

    def airtime(self, size: int) -> int:
        a = self._airtime.get(size)
        if a is None:
            a = self._airtime[size] = airtime_ticks(size, self.bit_rate)
        return a

    def neighbors(self, i: int, t: Optional[int] = None) -> list[Node]:
        """Alive nodes within radio range of node ``i`` at tick ``t``.

        A computed set stays valid until the pair nearest the range boundary
        could have crossed it, given the fastest leg speed seen so far.
        """
        if t is None:
            t = self.sched.now
        motion = self.motion
        if motion.epoch != self._epoch:
            self._nbr_cache.clear()
            self._epoch = motion.epoch
        c = self._nbr_cache.get(i)
        if c is not None and c[1] <= t <= c[2]:
            return c[0]
        pos = motion.positions(t)
        d = pos - pos[i]
        d2 = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1]
        mask = (d2 <= self._range2) & self._alive
        mask[i] = False
        nodes = self.nodes
        out = [nodes[j] for j in np.flatnonzero(mask)]
        valid = math.inf
        if motion.mobile and motion.vmax > 0.0:
            others = self._alive.copy()
            others[i] = False
            if others.any():
                slack = np.abs(np.sqrt(d2[others]) - self.range).min() - 1e-6
                valid = t + max(0, int(slack / (2.0 * motion.vmax) * TICKS_PER_SECOND))
        self._nbr_cache[i] = (out, t, valid)
        return out

    def adjacency(self, t: Optional[int] = None) -> dict[int, set[int]]:
        return {n.id: {m.id for m in self.neighbors(n.id, t)} for n in self.nodes if n.alive}

    # -- channel ----------------------------------------------------------

    def transmit(self, node: Node, frame: Frame, on_end) -> int:
        sched = self.sched
        now = sched.now
        end = now + self.airtime(frame.size)
        node.transmitting = True
        node.tx_end = end
        if end > node.busy_until:
            node.busy_until = end
        for rec in node.receptions:  # half duplex
            rec[2] = False
        self._radio_update(node, now)
        recs = []
        for r in self.neighbors(node.id, now):
            rr = r.receptions
            led = r.ledger
            if end > r.busy_until:
                r.busy_until = end
            if r.transmitting or rr:
                for other in rr:
                    other[2] = False
                rec = [frame, end, False]
                rr.append(rec)
                # mode unchanged; only an earlier death is possible
                if led.remaining * TICKS_PER_SECOND <= led.power[led.mode] * (end - led.last_change):
                    self._radio_update(r, now)
            else:
                rec = [frame, end, True]
                rr.append(rec)
                self._idle_to_rx(r, led, now, end)
            recs.append((r, rec))
        node.tx_recs = recs
        c = self.counters
        c["frames_tx"] += 1
        c["bytes_tx"] += frame.size
        if frame.kind == CTRL:
            c["ctrl_packets"] += 1
            c["ctrl_bytes"] += frame.size
        elif frame.kind == DATA:
            c["data_frames_tx"] += 1
        sched.at(end, FRAME_DELIVERY, self._tx_end, (node, frame, recs, on_end), target=node.id)
        return end

    def _tx_end(self, ev) -> None:
        node, frame, recs, on_end = ev.payload
        now = self.sched.now
        if node.alive:
            node.transmitting = False
            node.tx_recs = []
            self._radio_update(node, now)
        dst = frame.dst
        for r, rec in recs:
            if not r.alive:
                continue
            rr = r.receptions
            rr.remove(rec)
            if not rr and not r.transmitting:
                self._rx_to_idle(r, now)
            if not rec[2]:
                if dst == r.id or dst == BROADCAST:
                    self.counters["rx_collisions"] += 1
                continue
            if dst == r.id or dst == BROADCAST:
                up = r.mac.receive(frame)
                if up is not None and r.agent is not None:
                    r.agent.receive(up.payload, up.src)
        if on_end is not None and node.alive:
            on_end(frame)

    # -- energy -----------------------------------------------------------

    def _radio_update(self, node: Node, now: int) -> None:
        led = node.ledger
        if node.transmitting:
            mode = TX
        elif node.receptions:
            mode = RX
        else:
            mode = IDLE
        if mode is IDLE and led.mode is IDLE:
            return
        led.set_mode(mode, now)
        if node.death_ev is not None:
            self.sched.cancel(node.death_ev)
            node.death_ev = None
        if mode is IDLE:
            node.idle_proj = now + led.ticks_left(IDLE)
            if node.idle_proj < self.watch_time:
                self._arm_watch(node.idle_proj)
            return
        node.idle_proj = math.inf
        # busy_until bounds the activity's end; only look closer if the
        # battery could run out before it
        p = led.power[mode]
        if led.remaining * TICKS_PER_SECOND > p * (node.busy_until - now):
            return
        end = node.tx_end if mode is TX else max(rec[1] for rec in node.receptions)
        left = led.ticks_left(mode)
        if now + left <= end:
            node.death_ev = self.sched.at(now + left, BATTERY_DEATH, self._battery_death, node,
                                          target=node.id)

    # The two transitions below happen for nearly every overheard frame; when
    # no death can fall inside the step they settle the ledger inline, with
    # the same arithmetic as EnergyLedger.charge.

    def _idle_to_rx(self, r: Node, led: EnergyLedger, now: int, end: int) -> None:
        e = led.power[IDLE] * (now - led.last_change) / TICKS_PER_SECOND
        if r.death_ev is not None or \
                (led.remaining - e) * TICKS_PER_SECOND <= led.power[RX] * (end - now):
            self._radio_update(r, now)
            return
        if e:
            led.totals[IDLE] += e
            led.remaining -= e
        led.last_change = now
        led.mode = RX
        r.idle_proj = math.inf

    def _rx_to_idle(self, r: Node, now: int) -> None:
        led = r.ledger
        e = led.power[RX] * (now - led.last_change) / TICKS_PER_SECOND
        if r.death_ev is not None or led.remaining - e <= 0.0 or led.mode is not RX:
            self._radio_update(r, now)
            return
        if e:
            led.totals[RX] += e
            led.remaining -= e
        led.last_change = now
        led.mode = IDLE
        p = led.power[IDLE]
        proj = now + crossing_ticks(led.remaining, p) if p > 0.0 else math.inf
        r.idle_proj = proj
        if proj < self.watch_time:
            self._arm_watch(proj)

    def _arm_watch(self, t: float) -> None:
        self.sched.cancel(self.watch_ev)
        self.watch_time = t
        self.watch_ev = None
        if t < math.inf:
            self.watch_ev = self.sched.at(int(t), BATTERY_DEATH, self._watch)

    def start_energy(self) -> None:
        now = self.sched.now
        for node in self.nodes:
            node.ledger.last_change = now
            node.idle_proj = now + node.ledger.ticks_left(IDLE)
        self._arm_watch(min((n.idle_proj for n in self.nodes), default=math.inf))

    def _watch(self, ev) -> None:
        now = self.sched.now
        self.watch_ev = None
        self.watch_time = math.inf
        for node in self.nodes:
            if node.alive and node.ledger.mode is IDLE and node.idle_proj <= now:
                self.kill(node)
                if self.sched._stopped:
                    return
        nxt = min((n.idle_proj for n in self.nodes if n.alive and n.ledger.mode is IDLE),
                  default=math.inf)
        self._arm_watch(nxt)

    def _battery_death(self, ev) -> None:
        node = ev.payload
        node.death_ev = None
        if node.alive:
            self.kill(node)

    def kill(self, node: Node) -> None:
        now = self.sched.now
        led = node.ledger
        led.settle(now)
        if led.death_time is None:
            led.death_time = now
        node.alive = False
        self._alive[node.id] = False
        self._nbr_cache.clear()
        self.deaths.append((now, node.id))
        self.counters["deaths"] += 1
        for _, rec in node.tx_recs:
            rec[2] = False
        node.receptions.clear()
        self.sched.cancel(node.death_ev)
        if not self.stop_at_first_death:
            for pkt in self.held_packets(node):
                self.drop(pkt, "death")
        if node.agent is not None:
            node.agent.stop()
        node.mac.shutdown()
        if self.on_death is not None:
            self.on_death(node)
        if self.stop_at_first_death:
            self.sched.stop()

    # -- services for routing agents ---------------------------------------

    def unicast(self, src: int, dst: int, payload, size: int, kind: str = CTRL,
                front: bool = False) -> bool:
        frame = Frame(src, dst, size + self.mac_params.header_bytes, payload, kind)
        ok = self.nodes[src].mac.send(frame, front)
        if not ok:
            self.counters["ifq_drops"] += 1
            self._frame_lost(frame, "ifq")
        return ok

    def resend(self, frame: Frame, front: bool = True) -> bool:
        ok = self.nodes[frame.src].mac.send(frame, front)
        if not ok:
            self.counters["ifq_drops"] += 1
            self._frame_lost(frame, "ifq")
        return ok

    def broadcast(self, src: int, payload, size: int, jitter: int = 0) -> None:
        frame = Frame(src, BROADCAST, size + self.mac_params.header_bytes, payload, CTRL)
        if jitter > 0:
            self.sched.after(jitter, TIMER, self._jittered, frame, target=src)
        else:
            self.nodes[src].mac.send(frame)

    def _jittered(self, ev) -> None:
        frame = ev.payload
        if self.nodes[frame.src].alive:
            self.nodes[frame.src].mac.send(frame)

    def _frame_lost(self, frame: Frame, reason: str) -> None:
        if isinstance(frame.payload, DataPacket):
            self.drop(frame.payload, reason)

    def _link_failure(self, frame: Frame) -> None:
        self.counters["link_failures"] += 1
        agent = self.nodes[frame.src].agent
        if agent is not None:
            agent.on_link_failure(frame)
        else:
            self._frame_lost(frame, "link")

    # -- data accounting ----------------------------------------------------

    def held_packets(self, node: Node) -> list[DataPacket]:
        """Data packets currently queued at ``node`` (MAC and routing buffers)."""
        out = [f.payload for f in node.mac.pending_frames() if isinstance(f.payload, DataPacket)]
        if node.agent is not None:
            out.extend(node.agent.buffered())
        return out

    def in_flight_uids(self) -> set[int]:
        """Undecided packets still held somewhere or on the air."""
        held = set()
        for node in self.nodes:
            if node.alive or self.stop_at_first_death:
                held.update(p.uid for p in self.held_packets(node))
            for _, rec in node.tx_recs:
                if isinstance(rec[0].payload, DataPacket):
                    held.add(rec[0].payload.uid)
        return held - self.outcome.keys()

    def next_uid(self) -> int:
        self._uid += 1
        return self._uid

    def offer(self, pkt: DataPacket) -> None:
        self.offered_uids.add(pkt.uid)

    def deliver(self, pkt: DataPacket) -> None:
        if pkt.uid in self.outcome:
            self.counters["duplicate_deliveries"] += 1
            return
        self.outcome[pkt.uid] = "delivered"
        self.flow_delivered[pkt.flow] += 1
        self.counters["delivered"] += 1
        if self.keep_deliveries:
            self.delivery_log.append(pkt)

    def drop(self, pkt: DataPacket, reason: str) -> None:
        self.counters["drop_" + reason] += 1
        if pkt.uid in self.outcome:
            return
        self.outcome[pkt.uid] = "dropped"
        self.flow_dropped[pkt.flow] += 1
        self.counters["dropped"] += 1
