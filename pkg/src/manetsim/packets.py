"""Frames and application data packets."""

from __future__ import annotations

from typing import Any, Optional

BROADCAST = -1

DATA = "data"
CTRL = "ctrl"
ACK = "ack"


class Frame:
    """A MAC frame.  ``size`` already includes the MAC/PHY header."""

    __slots__ = ("src", "dst", "size", "payload", "kind", "seq", "attempts")

    def __init__(self, src: int, dst: int, size: int, payload: Any, kind: str):
        self.src = src
        self.dst = dst
        self.size = size
        self.payload = payload
        self.kind = kind
        self.seq = 0
        self.attempts = 0  # routing-layer resubmissions (DSR maintenance)

    @property
    def broadcast(self) -> bool:
        return self.dst == BROADCAST

    def __repr__(self) -> str:
        return f"Frame({self.kind} {self.src}->{self.dst} {self.size}B {type(self.payload).__name__})"


class DataPacket:
    """One CBR packet.  ``route`` is set for source-routed delivery."""

    __slots__ = ("uid", "flow", "src", "dst", "size", "created", "route", "trace")

    def __init__(self, uid: int, flow: int, src: int, dst: int, size: int, created: int):
        self.uid = uid
        self.flow = flow
        self.src = src
        self.dst = dst
        self.size = size
        self.created = created
        self.route: Optional[tuple[int, ...]] = None
        self.trace: list[int] = [src]

    def clone(self) -> "DataPacket":
        p = DataPacket(self.uid, self.flow, self.src, self.dst, self.size, self.created)
        p.route = self.route
        p.trace = [self.src]
        return p

    def hop(self, node: int) -> "DataPacket":
        """Copy of this packet as received by ``node``."""
        p = DataPacket(self.uid, self.flow, self.src, self.dst, self.size, self.created)
        p.route = self.route
        p.trace = self.trace + [node]
        return p

    def __repr__(self) -> str:
        return f"DataPacket(#{self.uid} flow={self.flow} {self.src}->{self.dst})"
