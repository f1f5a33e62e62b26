import math

import pytest
from hypothesis import given, settings, strategies as st

from manetsim.energy import (IDLE, RX, TX, DeadNodeError, EnergyLedger, EnergyParams,
                             analytic_node_lifetime, crossing_ticks, energy_to_mah, tx_power_total)
from manetsim.radio import RadioParams


def ledger(initial=100.0):
    return EnergyLedger.from_params(EnergyParams(initial_energy=initial), RadioParams().radiated_power)


def test_tx_power_total_examples():
    p = EnergyParams()
    assert tx_power_total(p, 0.0) == pytest.approx(0.220)
    assert tx_power_total(p, 0.006129) == pytest.approx(0.220 + 6.5 * 0.006129)
    assert tx_power_total(p, 0.006129) == pytest.approx(0.2598, abs=1e-4)
    assert tx_power_total(EnergyParams(amp_efficiency=1.0), 0.1) == pytest.approx(0.320)


def test_params_validated():
    with pytest.raises(ValueError):
        EnergyParams(amp_efficiency=0.5)
    with pytest.raises(ValueError):
        EnergyParams(p_rx=0.0)


def test_idle_second_drains_150mJ():
    led = ledger()
    led.charge(IDLE, 0, 1_000_000)
    assert led.totals[IDLE] == pytest.approx(0.150)
    assert led.remaining == pytest.approx(100 - 0.150)


def test_receive_one_full_frame():
    led = ledger()
    led.charge(RX, 0, 2176)
    assert led.totals[RX] == pytest.approx(0.2 * 2.176e-3)
    assert led.totals[RX] == pytest.approx(0.4352e-3)


def test_death_inside_interval():
    led = ledger(0.1)
    death = led.charge(IDLE, 5_000_000, 1_000_000)
    assert death == 5_000_000 + math.ceil(0.1 / 0.150 * 1e6 - 1e-6)
    assert death - 5_000_000 == 666_667
    assert led.death_time == death
    with pytest.raises(DeadNodeError):
        led.charge(IDLE, death, 10)
    # a same-tick settle after the crossing (e.g. kill on the death tick) is a no-op
    assert led.charge(IDLE, death, 0) is None
    assert led.settle(led.last_change) is None


def test_crossing_ticks_is_first_tick_at_or_below_zero():
    for e, p in [(1.0, 0.15), (0.1, 0.2), (3.0, 0.2598), (1e-9, 0.2)]:
        t = crossing_ticks(e, p)
        assert e - p * t / 1e6 <= 1e-12
        assert e - p * (t - 1) / 1e6 > 0


def test_analytic_lifetime_examples():
    assert analytic_node_lifetime(1.0, [(0.5e-3, 1.0)]) == pytest.approx(2000.0)
    assert analytic_node_lifetime(1.0, [(0.5e-3, 1.0)] * 2) == pytest.approx(1000.0)
    assert analytic_node_lifetime(1.0, [(0.5e-3, 0.0)]) == math.inf


def test_mah_conversion():
    assert energy_to_mah(10.8, 3.0) == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([TX, RX, IDLE]), st.integers(0, 5_000_000)),
                max_size=50))
def test_conservation_and_monotonicity(steps):
    led = ledger(5.0)
    t = 0
    prev = led.remaining
    for mode, dur in steps:
        if led.dead:
            break
        led.set_mode(mode, t)
        t += dur
        led.settle(t)
        assert led.remaining <= prev
        prev = led.remaining
        assert led.conservation_error() <= 1e-12 * max(1.0, led.initial)
    if led.dead:
        assert led.remaining <= 0.0
