from scenarios import chain_sim, set_energy, spy, static_sim
from manetsim import ScenarioConfig, Simulation
from manetsim.routing.aodv import AodvRoute, Rrep, Rreq, check_loop_freedom


def test_chain_route_installation():
    sim = chain_sim("AODV", horizon=3.0)
    st = sim.run()
    a, b = sim.agents[0], sim.agents[1]
    ra, rb = a.lookup(2), b.lookup(2)
    assert (ra.next_hop, ra.hop_count) == (1, 2)
    assert (rb.next_hop, rb.hop_count) == (2, 1)
    assert st.delivered >= 1


def test_consecutive_originations_bump_broadcast_id():
    sim = chain_sim("AODV", flows=(), horizon=1.0)
    sim.start()
    a = sim.agents[0]
    m1 = a.originate_rreq(2)
    m2 = a.originate_rreq(2)
    assert m2.broadcast_id - m1.broadcast_id == 1


def test_isolated_node_discovery_times_out():
    sim = static_sim("AODV", [(100.0, 100.0), (1400.0, 1400.0)], flows=((0, 1),), horizon=30.0)
    st = sim.run()
    assert st.delivered == 0
    assert st.counters["discovery_failures"] >= 1
    assert st.counters["drop_no_route"] >= 1
    assert all(not r.valid or r.dest != 1 for r in sim.agents[0].routes.values())


def _agent_with_route(seq):
    sim = chain_sim("AODV", n=4, flows=(), horizon=1.0)
    sim.start()
    b = sim.agents[1]
    b.routes[3] = AodvRoute(3, 2, 2, seq, True, 10**9)
    return sim, b


def test_intermediate_replies_when_fresh_enough():
    _, b = _agent_with_route(5)
    assert b.handle_rreq(Rreq(0, 1, 1, 3, 4, 0, 35), 0) == "reply"


def test_intermediate_forwards_when_stale():
    _, b = _agent_with_route(3)
    assert b.handle_rreq(Rreq(0, 1, 1, 3, 4, 0, 35), 0) == "forward"


def test_duplicate_rreq_discarded():
    _, b = _agent_with_route(3)
    m = Rreq(0, 1, 7, 3, 4, 0, 35)
    assert b.handle_rreq(m, 0) == "forward"
    assert b.handle_rreq(m, 2) == "discard"


def test_stale_or_longer_rrep_leaves_entry():
    sim, b = _agent_with_route(5)
    b.routes[0] = AodvRoute(0, 0, 1, 1, True, 10**9)  # reverse path
    before = (b.routes[3].next_hop, b.routes[3].hop_count, b.routes[3].seq)
    b.handle_rrep(Rrep(3, 4, 0, 0, 10**7), 2)       # lower seq
    b.handle_rrep(Rrep(3, 5, 4, 0, 10**7), 2)       # equal seq, longer
    assert (b.routes[3].next_hop, b.routes[3].hop_count, b.routes[3].seq) == before


def test_equal_seq_reply_repairs_invalid_entry():
    sim, b = _agent_with_route(5)
    b._invalidate(b.routes[3])
    assert b.routes[3].seq == 6 and not b.routes[3].valid
    b.routes[0] = AodvRoute(0, 0, 1, 1, True, 10**9)
    b.handle_rrep(Rrep(3, 6, 3, 0, 10**7), 2)
    assert b.lookup(3) is not None and b.lookup(3).hop_count == 4


def test_relay_death_triggers_rerr_and_rediscovery():
    sim = chain_sim("AODV", n=4, flows=((0, 3),), horizon=60.0, stop=False)
    set_energy(sim, 2, 3.0)  # dies at 20 s
    rerrs, rreqs = [], []
    spy(sim.agents[0], "handle_rerr", rerrs)
    spy(sim.agents[0], "originate_rreq", rreqs)
    sim.run()
    death = sim.net.deaths[0][0]
    assert sim.net.deaths[0][1] == 2
    assert rerrs and rerrs[0][0] > death
    assert any(t > rerrs[0][0] for t, _ in rreqs)


def test_one_rerr_invalidates_both_routes_over_shared_hop():
    sim = chain_sim("AODV", n=4, flows=((0, 2), (0, 3)), horizon=40.0, stop=False)
    set_energy(sim, 2, 3.0)
    rerrs = []
    spy(sim.agents[0], "handle_rerr", rerrs)
    sim.run()
    first = rerrs[0][1][0]
    assert {d for d, _ in first.unreachable} == {2, 3}


def test_failure_on_unused_link_sends_no_rerr():
    sim = chain_sim("AODV", n=3, flows=(), horizon=1.0)
    sim.start()
    b = sim.agents[1]
    b._touch_neighbor(2)
    assert b.break_link(2) == [(2, 1)]
    assert sim.net.counters["rerr_sent"] == 0  # no precursors


def test_loop_freedom_short_churn():
    for seed in (11, 12):
        cfg = ScenarioConfig(n_nodes=20, n_connections=6, seed=seed, horizon=60.0,
                             terrain=ScenarioConfig().terrain.__class__(800.0, 800.0)).with_(
            mobility__max_speed=20.0)
        sim = Simulation(cfg)
        agents = dict(enumerate(sim.agents))
        t = 0.0
        while t < 60.0:
            t += 0.5
            sim.advance(t)
            assert check_loop_freedom(agents, sim.sched.now) == []


def test_loop_checker_detects_cycle():
    sim = chain_sim("AODV", n=3, flows=(), horizon=1.0)
    a, b = sim.agents[0], sim.agents[1]
    a.routes[2] = AodvRoute(2, 1, 2, 3, True, 10**9)
    b.routes[2] = AodvRoute(2, 0, 2, 3, True, 10**9)
    assert check_loop_freedom({0: a, 1: b}, 0)
