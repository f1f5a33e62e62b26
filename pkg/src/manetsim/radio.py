"""Two-ray ground propagation and range calibration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

SPEED_OF_LIGHT = 299_792_458.0
MIN_DISTANCE = 1.0


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def watts_to_dbm(w: float) -> float:
    return 10.0 * math.log10(w * 1000.0)


def crossover_distance(h_t: float, h_r: float, wavelength: float) -> float:
    """Distance beyond which the ground-reflected ray dominates."""
    return 4.0 * math.pi * h_t * h_r / wavelength


@dataclass(frozen=True)
class RadioParams:
    frequency: float = 2.4e9
    bit_rate: float = 2e6
    rx_threshold_dbm: float = -81.0
    antenna_height: float = 1.5
    antenna_gain: float = 1.0
    nominal_range: float = 250.0
    # None means: solve for the power that puts the threshold at nominal_range
    tx_power: Optional[float] = field(default=None)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def rx_threshold(self) -> float:
        return dbm_to_watts(self.rx_threshold_dbm)

    @property
    def radiated_power(self) -> float:
        return self.tx_power if self.tx_power is not None else calibrate_tx_power(self)


def _path_gain(d: float, p: RadioParams) -> float:
    d = max(d, MIN_DISTANCE)
    h = p.antenna_height
    g = p.antenna_gain * p.antenna_gain
    lam = p.wavelength
    if d < crossover_distance(h, h, lam):
        return g * lam * lam / ((4.0 * math.pi * d) ** 2)
    return g * h * h * h * h / d ** 4


def received_power(d: float, p: RadioParams) -> float:
    """Free space below the crossover distance, two-ray at and beyond it."""
    return p.radiated_power * _path_gain(d, p)


def calibrate_tx_power(p: RadioParams) -> float:
    """Radiated power that makes ``received_power(nominal_range) == rx_threshold``."""
    return p.rx_threshold / _path_gain(p.nominal_range, p)


def range_distance(p: RadioParams) -> float:
    """Largest distance at which the received power meets the threshold."""
    pt = p.radiated_power
    thr = p.rx_threshold
    h = p.antenna_height
    g = p.antenna_gain * p.antenna_gain
    lam = p.wavelength
    dc = crossover_distance(h, h, lam)
    d_two_ray = (pt * g * h ** 4 / thr) ** 0.25
    if d_two_ray >= dc:
        return d_two_ray
    return max(math.sqrt(pt * g * lam * lam / thr) / (4.0 * math.pi), MIN_DISTANCE)


def in_range(u_pos, v_pos, p: RadioParams) -> bool:
    return received_power(math.dist(u_pos, v_pos), p) >= p.rx_threshold


def airtime_ticks(size_bytes: int, bit_rate: float) -> int:
    """Ticks needed to send ``size_bytes`` at ``bit_rate``, rounded up."""
    return -(-8 * size_bytes * 1_000_000 // int(bit_rate))
