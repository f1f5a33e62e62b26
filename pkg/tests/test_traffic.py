import math
import random

import pytest

from scenarios import chain_sim, set_energy
from manetsim.traffic import CbrFlow, RunStatistics, network_lifetime, spawn_flows


def _stats(deaths):
    return RunStatistics("h", 1, "v", "AODV", 100.0, death_times=deaths)


def test_spawn_flows_distinct_and_deterministic():
    flows = spawn_flows(6, range(30), random.Random(3))
    pairs = [(f.src, f.dst) for f in flows]
    assert len(set(pairs)) == 6 and all(s != d for s, d in pairs)
    assert pairs == [(f.src, f.dst) for f in spawn_flows(6, range(30), random.Random(3))]
    assert all(0 <= f.start < 1.0 for f in flows)
    with pytest.raises(ValueError):
        spawn_flows(7, range(3), random.Random(1))


@pytest.mark.parametrize("k", [6, 8, 10, 12, 14])
def test_connection_counts(k):
    assert len(spawn_flows(k, range(30), random.Random(k))) == k


def test_offered_load():
    assert CbrFlow(0, 1).offered_bps == 4096
    with pytest.raises(ValueError):
        CbrFlow(2, 2)


def test_network_lifetime_rules():
    assert network_lifetime(_stats({0: 120.0, 1: 95.0, 2: 300.0})) == 95.0
    assert network_lifetime(_stats({4: 12.5})) == 12.5
    st = _stats({})
    assert network_lifetime(st) == math.inf and st.exceeded_horizon
    assert _stats({0: 5.0, 3: 5.0}).first_dead_node == 0


def test_ten_second_window_offers_ten_packets():
    sim = chain_sim("AODV", n=2, flows=((0, 1),), horizon=10.0, traffic__stagger=0.0)
    st = sim.run()
    assert st.flow_offered == [10]
    assert st.delivered == 10


def test_ticks_stop_when_source_dies():
    sim = chain_sim("AODV", n=2, flows=((0, 1),), horizon=30.0, stop=False,
                    traffic__stagger=0.0)
    set_energy(sim, 0, 1.5)   # ~10 s of idle
    st = sim.run()
    death = st.death_times[0]
    assert 9.0 < death < 10.0
    assert st.flow_offered == [math.ceil(death)]
