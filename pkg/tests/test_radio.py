import math

import pytest

from manetsim.radio import (RadioParams, airtime_ticks, calibrate_tx_power, crossover_distance,
                            dbm_to_watts, in_range, range_distance, received_power, watts_to_dbm)


def test_crossover_distance_hand_value():
    assert crossover_distance(1.5, 1.5, 0.125) == pytest.approx(4 * math.pi * 2.25 / 0.125)
    assert crossover_distance(1.5, 1.5, 0.125) == pytest.approx(226.19, abs=0.01)


def test_distance_clamped_to_one_metre():
    p = RadioParams()
    assert received_power(0.0, p) == received_power(1.0, p)


def test_continuity_at_crossover():
    p = RadioParams()
    dc = crossover_distance(p.antenna_height, p.antenna_height, p.wavelength)
    below = received_power(dc * (1 - 1e-9), p)
    at = received_power(dc, p)
    assert abs(10 * math.log10(below / at)) < 0.5


def test_monotone_nonincreasing():
    p = RadioParams()
    prev = math.inf
    for d in range(1, 1000):
        pr = received_power(float(d), p)
        assert pr <= prev
        prev = pr


def test_calibration_puts_threshold_at_250m():
    p = RadioParams()
    assert received_power(250.0, p) == pytest.approx(p.rx_threshold, rel=0.01)
    assert range_distance(p) == pytest.approx(250.0, rel=0.01)
    # two-ray solved independently: Pt = Pr * d^4 / (G h^4)
    pt = dbm_to_watts(-81.0) * 250.0 ** 4 / (1.5 ** 4)
    assert calibrate_tx_power(p) == pytest.approx(pt, rel=1e-9)
    assert pt == pytest.approx(6.129e-3, rel=1e-3)
    assert watts_to_dbm(pt) == pytest.approx(7.87, abs=0.01)


@pytest.mark.parametrize("d,expected", [(249.0, True), (251.0, False), (0.0, True)])
def test_in_range(d, expected):
    assert in_range((0.0, 0.0), (d, 0.0), RadioParams()) is expected


def test_in_range_symmetric():
    p = RadioParams()
    a, b = (100.0, 200.0), (300.0, 310.0)
    assert in_range(a, b, p) == in_range(b, a, p)


def test_airtime_of_full_data_frame():
    assert airtime_ticks(512 + 32, 2e6) == 2176
    assert airtime_ticks(1, 2e6) == 4
