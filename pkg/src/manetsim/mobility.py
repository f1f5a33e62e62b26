"""Node placement and mobility on a rectangular Cartesian terrain.

Movement is piecewise linear.  Each node holds one *leg*: it sits at
``position`` until ``leg_start`` and then moves in a straight line to
``current_dest``, arriving at ``leg_end``.  Positions are evaluated lazily
at event times; nothing is stepped per tick.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .engine import TICKS_PER_SECOND, ceil_ticks

RWP = "rwp"
GROUP = "group"
NONE = "none"
MODELS = (RWP, GROUP, NONE)


@dataclass(frozen=True)
class Terrain:
    width: float = 1500.0
    height: float = 1500.0

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height

    def clamp(self, x: float, y: float) -> tuple[float, float]:
        return min(max(x, 0.0), self.width), min(max(y, 0.0), self.height)

    def uniform_point(self, rng: random.Random) -> tuple[float, float]:
        return rng.uniform(0.0, self.width), rng.uniform(0.0, self.height)


@dataclass(frozen=True)
class MobilityParams:
    model: str = RWP
    pause_time: float = 0.0
    max_speed: float = 10.0
    group_radius: float = 100.0
    n_groups: int = 1


@dataclass(frozen=True)
class MobilityState:
    position: tuple[float, float]
    current_dest: Optional[tuple[float, float]] = None
    speed: float = 0.0
    leg_start: int = 0
    leg_end: int = 0
    model: str = NONE
    group_id: Optional[int] = None

    @property
    def pause_until(self) -> Optional[int]:
        return self.leg_start if self.current_dest is not None else None

    @classmethod
    def static(cls, pos: tuple[float, float]) -> "MobilityState":
        return cls(position=pos, model=NONE)


def place_uniform(n: int, terrain: Terrain, rng: random.Random) -> list[tuple[float, float]]:
    if n < 2:
        raise ValueError("need at least two nodes")
    return [terrain.uniform_point(rng) for _ in range(n)]


def draw_speed(rng: random.Random, max_speed: float) -> float:
    # a zero-speed leg never arrives; redraw
    while True:
        s = rng.uniform(0.0, max_speed)
        if s > 0.0:
            return s


def leg_ticks(distance: float, speed: float) -> int:
    if distance <= 0.0:
        return 0
    return ceil_ticks(distance / speed)


def next_waypoint(state: MobilityState, now: int, rng: random.Random, terrain: Terrain,
                  pause_time: float, max_speed: float) -> MobilityState:
    """Start a new random-waypoint leg for a node that has arrived.

    The node pauses ``pause_time`` seconds at its current position, then
    heads to a uniform destination at a uniform speed in ``(0, max_speed]``.
    """
    here = state.current_dest if state.current_dest is not None else state.position
    dest = terrain.uniform_point(rng)
    speed = draw_speed(rng, max_speed)
    depart = now + int(round(pause_time * TICKS_PER_SECOND))
    arrive = depart + leg_ticks(math.dist(here, dest), speed)
    return MobilityState(position=here, current_dest=dest, speed=speed,
                         leg_start=depart, leg_end=arrive, model=state.model,
                         group_id=state.group_id)


def position_at(state: MobilityState, t: int) -> tuple[float, float]:
    dest = state.current_dest
    if dest is None or t <= state.leg_start:
        return state.position
    if t >= state.leg_end:
        return dest
    f = (t - state.leg_start) / (state.leg_end - state.leg_start)
    x0, y0 = state.position
    return x0 + f * (dest[0] - x0), y0 + f * (dest[1] - y0)


def random_offset(rng: random.Random, radius: float) -> tuple[float, float]:
    """Uniform point in a disc of the given radius."""
    if radius <= 0.0:
        return 0.0, 0.0
    r = radius * math.sqrt(rng.random())
    a = rng.uniform(0.0, 2.0 * math.pi)
    return r * math.cos(a), r * math.sin(a)


def group_step(members: Sequence[MobilityState], leader_state: MobilityState,
               offsets: Sequence[tuple[float, float]], rng: random.Random,
               terrain: Terrain, radius: float) -> tuple[list[MobilityState], list[tuple[float, float]]]:
    """Reference-point group mobility for one leader leg.

    ``leader_state`` is the reference point's freshly drawn leg.  Each member
    travels from ``reference start + old offset`` to ``reference destination
    + new offset`` over the same interval, so its displacement from the
    reference point interpolates between two offsets inside the disc.
    Endpoints are clamped onto the terrain; since the reference point lies
    inside it, clamping never stretches an offset.
    """
    ref0 = leader_state.position
    ref1 = leader_state.current_dest if leader_state.current_dest is not None else ref0
    duration = (leader_state.leg_end - leader_state.leg_start) / TICKS_PER_SECOND
    new_states, new_offsets = [], []
    for m, old in zip(members, offsets):
        new = random_offset(rng, radius)
        start = terrain.clamp(ref0[0] + old[0], ref0[1] + old[1])
        end = terrain.clamp(ref1[0] + new[0], ref1[1] + new[1])
        speed = math.dist(start, end) / duration if duration > 0 else 0.0
        new_states.append(replace(m, position=start, current_dest=end, speed=speed,
                                  leg_start=leader_state.leg_start, leg_end=leader_state.leg_end,
                                  model=GROUP))
        new_offsets.append(new)
    return new_states, new_offsets


class Motion:
    """Drives every node's mobility state from waypoint-arrival events and
    evaluates all positions at a tick with one vectorised interpolation."""

    def __init__(self, sched, terrain: Terrain, params: MobilityParams,
                 positions: Sequence[tuple[float, float]], node_rngs: Sequence[random.Random],
                 group_rng: Optional[random.Random] = None):
        self.sched = sched
        self.terrain = terrain
        self.params = params
        n = len(positions)
        self.n = n
        self.rngs = node_rngs
        self.group_rng = group_rng
        self.states = [MobilityState(position=tuple(p), model=params.model) for p in positions]
        self.x0 = np.array([p[0] for p in positions], dtype=float)
        self.y0 = np.array([p[1] for p in positions], dtype=float)
        self.x1 = self.x0.copy()
        self.y1 = self.y0.copy()
        self.t0 = np.zeros(n)
        self.t1 = np.zeros(n)
        self.mobile = params.model in (RWP, GROUP)
        self.legs = 0
        # fastest leg ever started (m/s); epoch changes whenever it grows or a
        # position jumps, so cached neighbor sets know to revalidate
        self.vmax = 0.0
        self.epoch = 0
        self._dx = self.x1 - self.x0
        self._dy = self.y1 - self.y0
        self._inv_span = np.zeros(n)
        self._cache_t = -1
        self._cache = None
        self._static = np.column_stack([self.x0, self.y0])
        self.groups: list[list[int]] = []
        self.leaders: list[MobilityState] = []
        self.offsets: list[list[tuple[float, float]]] = []

    def start(self) -> None:
        if self.params.model == RWP:
            for i, st in enumerate(self.states):
                self._set(i, next_waypoint(st, self.sched.now, self.rngs[i], self.terrain,
                                           self.params.pause_time, self.params.max_speed))
                self._arm(i)
        elif self.params.model == GROUP:
            self._start_groups()

    def _start_groups(self) -> None:
        rng = self.group_rng
        k = max(1, min(self.params.n_groups, self.n))
        self.groups = [[i for i in range(self.n) if i % k == g] for g in range(k)]
        for g, members in enumerate(self.groups):
            ref = self.terrain.uniform_point(rng)
            offs = []
            for i in members:
                off = random_offset(rng, self.params.group_radius)
                pos = self.terrain.clamp(ref[0] + off[0], ref[1] + off[1])
                # members start around the reference point, not at their uniform slots
                self.states[i] = MobilityState(position=pos, model=GROUP, group_id=g)
                offs.append(off)
            self.offsets.append(offs)
            self.leaders.append(MobilityState(position=ref, model=RWP, group_id=g))
            self._group_leg(g)
        self.epoch += 1

    def _group_leg(self, g: int) -> None:
        leader = next_waypoint(self.leaders[g], self.sched.now, self.group_rng, self.terrain,
                               self.params.pause_time, self.params.max_speed)
        self.leaders[g] = leader
        members = self.groups[g]
        states, offs = group_step([self.states[i] for i in members], leader, self.offsets[g],
                                  self.group_rng, self.terrain, self.params.group_radius)
        self.offsets[g] = offs
        for i, st in zip(members, states):
            self._set(i, st)
        self.sched.at(leader.leg_end, "waypoint-arrival", self._group_arrival, g)

    def _group_arrival(self, ev) -> None:
        self._group_leg(ev.payload)

    def _set(self, i: int, st: MobilityState) -> None:
        self.states[i] = st
        self.legs += 1
        self.x0[i], self.y0[i] = st.position
        self.x1[i], self.y1[i] = st.current_dest if st.current_dest is not None else st.position
        self.t0[i] = st.leg_start
        self.t1[i] = st.leg_end
        dx = self.x1[i] - self.x0[i]
        dy = self.y1[i] - self.y0[i]
        self._dx[i] = dx
        self._dy[i] = dy
        span = st.leg_end - st.leg_start
        self._inv_span[i] = 1.0 / span if span > 0 else 0.0
        if span > 0:
            v = math.hypot(dx, dy) * TICKS_PER_SECOND / span
            if v > self.vmax:
                self.vmax = v
                self.epoch += 1
        elif dx or dy:
            self.epoch += 1
        self._cache_t = -1

    def _arm(self, i: int) -> None:
        self.sched.at(self.states[i].leg_end, "waypoint-arrival", self._arrival, i, target=i)

    def _arrival(self, ev) -> None:
        i = ev.payload
        self._set(i, next_waypoint(self.states[i], self.sched.now, self.rngs[i], self.terrain,
                                   self.params.pause_time, self.params.max_speed))
        self._arm(i)

    def positions(self, t: int):
        """(n, 2) array of positions at tick ``t``."""
        if not self.mobile:
            return self._static
        if t == self._cache_t:
            return self._cache
        f = (t - self.t0) * self._inv_span
        np.clip(f, 0.0, 1.0, out=f)
        f[t >= self.t1] = 1.0  # zero-length legs have arrived
        pos = np.empty((self.n, 2))
        np.multiply(f, self._dx, out=pos[:, 0])
        pos[:, 0] += self.x0
        np.multiply(f, self._dy, out=pos[:, 1])
        pos[:, 1] += self.y0
        self._cache_t = t
        self._cache = pos
        return pos

    def position(self, i: int, t: int) -> tuple[float, float]:
        return position_at(self.states[i], t)
