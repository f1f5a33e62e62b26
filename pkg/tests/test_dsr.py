from hypothesis import given, settings, strategies as st

from scenarios import chain_sim, dsr_fuzz_instance, set_energy, spy
from manetsim.packets import DataPacket
from manetsim.routing.dsr import DsrRrep, DsrRreq
from manetsim.routing.srcroute import RouteCache, RouteError, header_bytes, splice


def _started(n=4, **kw):
    sim = chain_sim("DSR", n=n, flows=(), horizon=1.0, **kw)
    sim.start()
    return sim


def _pkt(sim, src, dst):
    return DataPacket(sim.net.next_uid(), 0, src, dst, 512, sim.sched.now)


def test_send_to_self_is_local():
    sim = _started()
    assert sim.agents[0].send(_pkt(sim, 0, 0)) == "local"


def test_cache_hit_uses_cached_hop_list():
    sim = _started()
    a = sim.agents[0]
    a.cache.add((0, 1, 2), 0)
    p = _pkt(sim, 0, 2)
    assert a.send(p) == "sent"
    assert p.route == (0, 1, 2)
    assert sim.net.counters["dsr_header_bytes"] == header_bytes((0, 1, 2)) == 12


def test_cache_miss_broadcasts_initial_record():
    sim = _started()
    sent = []
    spy(sim.net, "broadcast", sent)
    assert sim.agents[0].send(_pkt(sim, 0, 3)) == "discovery"
    (_, (src, msg, size)), = sent
    assert src == 0 and msg.record == (0,) and msg.target == 3 and size == msg.size


def test_rreq_rules():
    sim = _started()
    b = sim.agents[1]
    assert b.handle_rreq(DsrRreq(0, 3, 1, (0, 1))) == "discard"   # own id in record
    assert b.handle_rreq(DsrRreq(0, 3, 2, (0,))) == "rebroadcast"
    assert b.handle_rreq(DsrRreq(0, 3, 2, (0, 2))) == "discard"   # recently seen
    assert sim.agents[3].handle_rreq(DsrRreq(0, 3, 2, (0, 1, 2))) == "reply"


def test_chain_discovery_returns_full_route():
    sim = chain_sim("DSR", n=3, horizon=2.0)
    st_ = sim.run()
    assert sim.agents[0].cache.lookup(2, sim.sched.now) == (0, 1, 2)
    assert st_.delivered >= 1


def test_forward_data_successor_deliver_discard():
    sim = _started()
    p = _pkt(sim, 0, 2)
    p.route = (0, 1, 2)
    assert sim.agents[1].forward_data(p.hop(1)) == "forward"
    assert sim.agents[2].forward_data(p.hop(2)) == "deliver"
    assert sim.agents[3].forward_data(p.hop(3)) == "discard"
    assert sim.net.counters["drop_not_on_route"] == 1


def test_route_error_purges_only_routes_with_the_link():
    sim = _started()
    a = sim.agents[0]
    a.cache.add((0, 1, 2), 0)
    a.cache.add((0, 3, 2), 0)
    assert a.handle_route_error(RouteError(1, 2, (1, 0))) == "consume"
    assert (0, 1, 2) not in a.cache.routes()
    assert (0, 3, 2) in a.cache.routes() and (0, 1) in a.cache.routes()
    assert a.cache.lookup(2, 0) == (0, 3, 2)


def test_link_kill_purges_source_cache():
    sim = chain_sim("DSR", n=4, flows=((0, 3),), horizon=25.0, stop=False)
    set_energy(sim, 2, 1.5)  # relay dies at 10 s
    errs = []
    spy(sim.agents[0], "handle_route_error", errs)
    sim.run()
    assert errs, "source never heard a route error"
    m = errs[0][1][0]
    assert {m.a, m.b} == {1, 2}
    assert all((1, 2) not in zip(r, r[1:]) for r in sim.agents[0].cache.routes())


def test_zero_maintenance_retry_errors_on_first_failure():
    sim = chain_sim("DSR", n=4, flows=((0, 3),), horizon=25.0, stop=False,
                    dsr__maintenance_retry=0)
    set_energy(sim, 2, 1.5)
    sim.run()
    assert sim.net.counters["dsr_maintenance_retx"] == 0
    assert sim.net.counters["rerr_sent"] >= 1


def test_maintenance_retries_before_error():
    sim = chain_sim("DSR", n=4, flows=((0, 3),), horizon=25.0, stop=False)
    set_energy(sim, 2, 1.5)
    sim.run()
    assert sim.net.counters["dsr_maintenance_retx"] >= 2


def test_header_energy_grows_with_route_length():
    sizes = [512 + header_bytes(tuple(range(k))) for k in range(2, 9)]
    assert sizes == sorted(set(sizes))


def test_message_sizes():
    assert DsrRreq(0, 3, 1, (0, 1, 2)).size == 20
    assert DsrRrep((0, 1, 2)).size == 16


def test_route_cache_prefixes_and_expiry():
    c = RouteCache(0, 100)
    c.add((0, 1, 2, 3), 0)
    assert c.lookup(1, 50) == (0, 1) and c.lookup(3, 50) == (0, 1, 2, 3)
    assert c.lookup(3, 101) is None
    assert c.lookup(1, 101) is None and c.lookup(2, 101) is None
    c.add((0, 1, 0, 2), 0)  # not simple: ignored
    c.add((5, 1), 0)        # not ours
    assert len(c) == 0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 9), min_size=1, max_size=8),
       st.lists(st.integers(0, 9), min_size=1, max_size=8))
def test_splice_is_simple_and_keeps_endpoints(a, b):
    path = tuple(dict.fromkeys(a))
    ext = (path[-1],) + tuple(dict.fromkeys(x for x in b if x != path[-1]))
    out = splice(path, ext)
    assert len(set(out)) == len(out)
    assert out[0] == path[0] and out[-1] == ext[-1]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_fuzzed_discovery_never_loops(seed):
    bad, _ = dsr_fuzz_instance(seed)
    assert bad == []
