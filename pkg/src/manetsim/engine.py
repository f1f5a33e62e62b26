"""Discrete-event core.

Time is kept in integer microsecond ticks.  Events are ordered by
``(fire_at, seq)`` where ``seq`` is a monotone insertion counter, so two
events scheduled for the same tick dispatch in insertion order.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import struct
from typing import Any, Callable, Optional

TICKS_PER_SECOND = 1_000_000

# event kinds
FRAME_DELIVERY = "frame-delivery"
TIMER = "timer"
WAYPOINT = "waypoint-arrival"
TRAFFIC = "traffic-tick"
BATTERY_DEATH = "battery-death"
SIM_END = "sim-end"


def ticks(seconds: float) -> int:
    """Convert seconds to the nearest integer tick."""
    return int(round(seconds * TICKS_PER_SECOND))


def ceil_ticks(seconds: float) -> int:
    return int(math.ceil(seconds * TICKS_PER_SECOND - 1e-9))


def seconds(t: int) -> float:
    return t / TICKS_PER_SECOND


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled in the past."""


class Event:
    __slots__ = ("fire_at", "seq", "kind", "target", "payload", "callback", "cancelled", "fired")

    def __init__(self, fire_at: int, kind: str, callback: Callable[["Event"], Any],
                 payload: Any = None, target: Any = None):
        self.fire_at = fire_at
        self.seq = -1
        self.kind = kind
        self.target = target
        self.payload = payload
        self.callback = callback
        self.cancelled = False
        self.fired = False

    @property
    def pending(self) -> bool:
        return self.seq >= 0 and not self.cancelled and not self.fired

    def __repr__(self) -> str:
        return f"Event({self.fire_at}, #{self.seq}, {self.kind}, target={self.target})"


# A scheduled Event doubles as its own handle.
EventHandle = Event


class Scheduler:
    """Time-ordered event queue with a dispatch loop.

    ``trace=True`` folds every dispatched ``(fire_at, seq, kind, target)``
    into a running BLAKE2 digest, exposed as :attr:`trace_hash`.
    """

    def __init__(self, trace: bool = False):
        self.now = 0
        self.dispatched = 0
        self._heap: list[tuple[int, int, Event]] = []
        self._seq = 0
        self._stopped = False
        self._hasher = hashlib.blake2b(digest_size=16) if trace else None

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, event: Event) -> EventHandle:
        if event.fire_at < self.now:
            raise SchedulingError(f"event {event.kind} at {event.fire_at} is before now={self.now}")
        event.seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (event.fire_at, event.seq, event))
        return event

    def at(self, fire_at: int, kind: str, callback, payload=None, target=None) -> EventHandle:
        return self.schedule(Event(fire_at, kind, callback, payload, target))

    def after(self, delay: int, kind: str, callback, payload=None, target=None) -> EventHandle:
        return self.schedule(Event(self.now + delay, kind, callback, payload, target))

    @staticmethod
    def cancel(handle: Optional[EventHandle]) -> bool:
        if handle is None or not handle.pending:
            return False
        handle.cancelled = True
        return True

    def stop(self) -> None:
        self._stopped = True

    @property
    def trace_hash(self) -> Optional[str]:
        return self._hasher.hexdigest() if self._hasher is not None else None

    def run(self, until: Optional[int] = None) -> bool:
        """Dispatch events until the queue drains, :meth:`stop` is called,
        or the next event lies beyond ``until``.

        Returns False if the queue emptied without being stopped.
        """
        heap = self._heap
        pop = heapq.heappop
        hasher = self._hasher
        self._stopped = False
        while heap:
            fire_at, seq, ev = heap[0]
            if until is not None and fire_at > until:
                self.now = until
                return True
            pop(heap)
            if ev.cancelled:
                continue
            self.now = fire_at
            ev.fired = True
            self.dispatched += 1
            if hasher is not None:
                target = ev.target if isinstance(ev.target, int) else -1
                hasher.update(struct.pack("<qqq", fire_at, seq, target))
                hasher.update(ev.kind.encode())
            ev.callback(ev)
            if self._stopped:
                return True
        return False
