"""Radio energy accounting with a simple linear battery."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .engine import TICKS_PER_SECOND

TX = "tx"
RX = "rx"
IDLE = "idle"
MODES = (TX, RX, IDLE)

INFINITE_LIFETIME = math.inf


@dataclass(frozen=True)
class EnergyParams:
    p_tx_circuit: float = 0.220
    p_rx: float = 0.200
    p_idle: float = 0.150
    amp_efficiency: float = 6.5
    supply_voltage: float = 3.0
    initial_energy: float = 100.0

    def __post_init__(self):
        if self.amp_efficiency < 1.0:
            raise ValueError("amplifier efficiency factor must be >= 1")
        if min(self.p_tx_circuit, self.p_rx, self.supply_voltage, self.initial_energy) <= 0:
            raise ValueError("energy parameters must be positive")
        if self.p_idle < 0:
            raise ValueError("idle power must be nonnegative")


def tx_power_total(p: EnergyParams, radiated: float) -> float:
    """Battery draw while transmitting: circuit power plus amplifier loss."""
    return p.p_tx_circuit + p.amp_efficiency * radiated


def energy_to_mah(joules: float, supply_voltage: float) -> float:
    return joules / supply_voltage / 3.6


class DeadNodeError(RuntimeError):
    pass


class EnergyLedger:
    """Per-node energy book.

    ``remaining`` is decremented independently of the per-mode totals so
    the conservation identity ``initial - remaining == sum(totals)`` is a
    real check rather than a definition.
    """

    __slots__ = ("initial", "remaining", "power", "mode", "last_change", "totals", "death_time")

    def __init__(self, initial: float, power: dict[str, float], start: int = 0):
        self.initial = initial
        self.remaining = initial
        self.power = power
        self.mode = IDLE
        self.last_change = start
        self.totals = {TX: 0.0, RX: 0.0, IDLE: 0.0}
        self.death_time: Optional[int] = None

    @classmethod
    def from_params(cls, p: EnergyParams, radiated: float, start: int = 0) -> "EnergyLedger":
        return cls(p.initial_energy,
                   {TX: tx_power_total(p, radiated), RX: p.p_rx, IDLE: p.p_idle}, start)

    @property
    def dead(self) -> bool:
        return self.death_time is not None

    def charge(self, mode: str, start: int, duration: int) -> Optional[int]:
        """Drain ``mode`` power for ``duration`` ticks beginning at ``start``.

        Returns the tick at which the battery first reaches zero if that
        happens inside the interval (rounded up to a whole tick), else None.
        """
        if duration < 0:
            raise ValueError("negative duration")
        if duration == 0:
            return None
        if self.death_time is not None:
            raise DeadNodeError("charging a dead node")
        p = self.power[mode]
        e = p * duration / TICKS_PER_SECOND
        before = self.remaining
        self.totals[mode] += e
        self.remaining = before - e
        if self.remaining <= 0.0:
            self.death_time = start + crossing_ticks(before, p)
            return self.death_time
        return None

    def settle(self, now: int) -> Optional[int]:
        """Charge the current mode up to ``now``."""
        dt = now - self.last_change
        self.last_change = now
        return self.charge(self.mode, now - dt, dt)

    def set_mode(self, mode: str, now: int) -> Optional[int]:
        death = self.settle(now) if now != self.last_change else None
        self.mode = mode
        return death

    def ticks_left(self, mode: Optional[str] = None) -> float:
        """Ticks until empty if ``mode`` were held from ``last_change`` on."""
        p = self.power[mode or self.mode]
        if p <= 0.0:
            return math.inf
        return crossing_ticks(self.remaining, p)

    def conservation_error(self) -> float:
        return abs((self.initial - self.remaining) - sum(self.totals.values()))


def crossing_ticks(energy: float, power: float) -> int:
    if energy <= 0.0:
        return 0
    return int(math.ceil(energy / power * TICKS_PER_SECOND - 1e-6))


def analytic_node_lifetime(initial_energy: float, flows: Iterable[tuple[float, float]]) -> float:
    """Node lifetime ``E_u / sum_v(e_uv * q_uv)``.

    ``flows`` holds ``(energy per packet to neighbour v, packets per second
    to v)`` pairs.  Returns ``INFINITE_LIFETIME`` when nothing drains.
    """
    rate = sum(e * q for e, q in flows)
    if rate <= 0.0:
        return INFINITE_LIFETIME
    return initial_energy / rate
