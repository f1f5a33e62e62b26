"""Simplified IEEE 802.11 DCF.

Single rate, no RTS/CTS.  A frame waits DIFS plus a slotted random backoff,
is sent if the medium has been idle for at least DIFS, and unicast frames
are retried with binary exponential backoff until a MAC ACK arrives or
``retry_limit`` retries are spent.  Broadcast frames go out once.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterable, Optional

from .engine import TIMER
from .packets import ACK, BROADCAST, Frame
from .radio import airtime_ticks

if TYPE_CHECKING:
    from .network import Network, Node


@dataclass(frozen=True)
class MacParams:
    slot: int = 20       # ticks (us), 802.11b DSSS
    sifs: int = 10
    difs: int = 50
    cw_min: int = 31
    cw_max: int = 1023
    retry_limit: int = 7
    header_bytes: int = 32
    ack_bytes: int = 32
    queue_limit: int = 50


def collision_check(reception: tuple[int, int], others: Iterable[tuple[int, int]]) -> bool:
    """True if a frame occupying ``reception`` survives at the receiver.

    ``others`` are the half-open ``[start, end)`` intervals of every other
    in-range transmission heard by (or sent by) the receiver.  Any overlap
    destroys the frame; there is no capture.
    """
    s, e = reception
    return not any(o_s < e and s < o_e for o_s, o_e in others)


class Mac:
    __slots__ = ("node", "net", "p", "rng", "queue", "current", "cw", "retries",
                 "attempt_ev", "ack_ev", "_seq", "last_seq", "ack_airtime", "on_failure",
                 "tx_count", "retx_count")

    def __init__(self, node: "Node", net: "Network", params: MacParams, rng):
        self.node = node
        self.net = net
        self.p = params
        self.rng = rng
        self.queue: deque[Frame] = deque()
        self.current: Optional[Frame] = None
        self.cw = params.cw_min
        self.retries = 0
        self.attempt_ev = None
        self.ack_ev = None
        self._seq = 0
        self.last_seq: dict[int, int] = {}
        self.ack_airtime = airtime_ticks(params.ack_bytes, net.bit_rate)
        # routing-layer callback for retry exhaustion
        self.on_failure: Optional[Callable[[Frame], None]] = None
        self.tx_count = 0
        self.retx_count = 0

    # -- upper interface --------------------------------------------------

    def send(self, frame: Frame, front: bool = False) -> bool:
        """Queue a frame.  Returns False when the interface queue is full."""
        if not self.node.alive:
            return False
        if len(self.queue) >= self.p.queue_limit:
            return False
        self._seq += 1
        frame.seq = self._seq
        if front:
            self.queue.appendleft(frame)
        else:
            self.queue.append(frame)
        if self.current is None:
            self._next()
        return True

    def purge(self, dst: int) -> list[Frame]:
        """Remove and return queued (not in-progress) frames for ``dst``."""
        kept, out = deque(), []
        for f in self.queue:
            (out if f.dst == dst else kept).append(f)
        self.queue = kept
        return out

    def pending_frames(self) -> list[Frame]:
        cur = [self.current] if self.current is not None else []
        return cur + list(self.queue)

    def shutdown(self) -> None:
        self.net.sched.cancel(self.attempt_ev)
        self.net.sched.cancel(self.ack_ev)
        self.queue.clear()
        self.current = None

    # -- channel access ---------------------------------------------------

    def _next(self) -> None:
        if not self.queue:
            self.current = None
            return
        self.current = self.queue.popleft()
        self.retries = 0
        self.cw = self.p.cw_min
        self._backoff(self.net.sched.now)

    def _backoff(self, base: int) -> None:
        delay = self.p.difs + self.rng.randint(0, self.cw) * self.p.slot
        self.attempt_ev = self.net.sched.at(base + delay, TIMER, self._attempt, target=self.node.id)

    def _attempt(self, ev) -> None:
        node = self.node
        if not node.alive or self.current is None:
            return
        now = self.net.sched.now
        if node.transmitting or node.receptions or now < node.busy_until + self.p.difs:
            self._backoff(max(node.busy_until, now))
            return
        frame = self.current
        self.tx_count += 1
        if self.retries:
            self.retx_count += 1
        self.net.transmit(node, frame, self._tx_done)

    def _tx_done(self, frame: Frame) -> None:
        if not self.node.alive or frame is not self.current:
            return
        if frame.dst == BROADCAST:
            self._finish(frame, True)
            return
        timeout = self.p.sifs + self.ack_airtime + self.p.slot
        self.ack_ev = self.net.sched.after(timeout, TIMER, self._ack_timeout, target=self.node.id)

    def _ack_timeout(self, ev) -> None:
        if not self.node.alive or self.current is None:
            return
        self.retries += 1
        if self.retries > self.p.retry_limit:
            self._finish(self.current, False)
            return
        self.cw = min(2 * self.cw + 1, self.p.cw_max)
        self._backoff(self.net.sched.now)

    def _finish(self, frame: Frame, ok: bool) -> None:
        self.current = None
        self.ack_ev = None
        if not ok and self.on_failure is not None:
            self.on_failure(frame)
        if self.current is None and self.node.alive:
            self._next()

    # -- reception --------------------------------------------------------

    def receive(self, frame: Frame) -> Optional[Frame]:
        """Handle an intact frame addressed to this node (or broadcast).

        Returns the frame if it should be passed up, else None.
        """
        if frame.kind == ACK:
            cur = self.current
            if cur is not None and self.ack_ev is not None and frame.src == cur.dst \
                    and frame.payload == cur.seq:
                self.net.sched.cancel(self.ack_ev)
                self._finish(cur, True)
            return None
        if frame.dst == BROADCAST:
            return frame
        self.net.sched.after(self.p.sifs, TIMER, self._send_ack, (frame.src, frame.seq),
                             target=self.node.id)
        if self.last_seq.get(frame.src) == frame.seq:
            return None
        self.last_seq[frame.src] = frame.seq
        return frame

    def _send_ack(self, ev) -> None:
        node = self.node
        if not node.alive or node.transmitting:
            return
        dst, seq = ev.payload
        self.net.transmit(node, Frame(node.id, dst, self.p.ack_bytes, seq, ACK), None)
