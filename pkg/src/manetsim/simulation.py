"""Wiring a scenario into a runnable simulation."""

from __future__ import annotations

import random
from typing import Optional

import numpy as np

from .config import ScenarioConfig, __version__
from .energy import IDLE, RX, TX, EnergyLedger
from .engine import SIM_END, Scheduler, seconds, ticks
from .mobility import Motion, place_uniform
from .network import Network
from .routing import PROTOCOLS
from .traffic import CbrFlow, FlowDriver, RunStatistics, spawn_flows

# substream ids
PLACEMENT = 0
FLOWS = 1
GROUPS = 2
MOBILITY_BASE = 100
MAC_BASE = 10_000
ROUTING_BASE = 20_000


def substream(seed: int, stream: int) -> random.Random:
    """Independent generator for ``stream`` derived from the run seed."""
    state = np.random.SeedSequence([seed, stream]).generate_state(2)
    return random.Random(int(state[0]) << 32 | int(state[1]))


class Simulation:
    """One run.  Build, optionally step with :meth:`advance`, then :meth:`finish`."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        seed = cfg.seed
        n = cfg.n_nodes
        self.sched = Scheduler(trace=cfg.trace)
        if cfg.positions is not None:
            positions = [tuple(p) for p in cfg.positions]
        else:
            positions = place_uniform(n, cfg.terrain, substream(seed, PLACEMENT))
        self.motion = Motion(self.sched, cfg.terrain, cfg.mobility, positions,
                             [substream(seed, MOBILITY_BASE + i) for i in range(n)],
                             substream(seed, GROUPS))
        radiated = cfg.radio.radiated_power
        ledgers = [EnergyLedger.from_params(cfg.energy, radiated) for _ in range(n)]
        self.net = Network(self.sched, cfg.radio, cfg.mac, self.motion, ledgers,
                           [substream(seed, MAC_BASE + i) for i in range(n)],
                           cfg.stop_at_first_death)
        agent_cls = PROTOCOLS[cfg.protocol]
        params = cfg.routing_params
        self.agents = []
        for node in self.net.nodes:
            node.agent = agent_cls(node.id, self.net, params, substream(seed, ROUTING_BASE + node.id))
            self.agents.append(node.agent)
        self.flows = self._make_flows(substream(seed, FLOWS))
        self.driver = FlowDriver(self.net, self.flows)
        self.horizon = ticks(cfg.horizon)
        self.warnings: list[str] = []
        self.started = False
        self.ended = False

    def _make_flows(self, rng: random.Random) -> list[CbrFlow]:
        t = self.cfg.traffic
        if self.cfg.flows is not None:
            return [CbrFlow(s, d, t.packet_size, t.interval, rng.random() * t.stagger)
                    for s, d in self.cfg.flows]
        return spawn_flows(self.cfg.n_connections, range(self.cfg.n_nodes), rng,
                           t.packet_size, t.interval, t.stagger)

    def start(self) -> None:
        if self.started:
            return
        self.started = True
        self.sched.at(self.horizon, SIM_END, self._end)
        self.net.start_energy()
        self.motion.start()
        for a in self.agents:
            a.start()
        self.driver.start()

    def _end(self, ev) -> None:
        self.ended = True
        self.sched.stop()

    def advance(self, until_s: float) -> None:
        """Run up to ``until_s`` seconds (or an earlier stop)."""
        self.start()
        self.sched.run(until=min(ticks(until_s), self.horizon))

    def run(self) -> RunStatistics:
        self.start()
        if not self.sched.run() and not self.ended:
            self.warnings.append("event queue emptied before the horizon")
        return self.finish()

    def finish(self) -> RunStatistics:
        net = self.net
        now = self.sched.now
        for node in net.nodes:
            if node.alive:
                node.ledger.settle(now)
        deaths = {nid: seconds(t) for t, nid in net.deaths}
        st = RunStatistics(
            config_hash=self.cfg.config_hash(),
            seed=self.cfg.seed,
            version=__version__,
            protocol=self.cfg.protocol,
            horizon=self.cfg.horizon,
            death_times=deaths,
        )
        st.offered = len(net.offered_uids)
        st.delivered = sum(1 for v in net.outcome.values() if v == "delivered")
        st.dropped = sum(1 for v in net.outcome.values() if v == "dropped")
        st.in_flight = len(net.offered_uids) - st.delivered - st.dropped
        st.counters = dict(sorted(net.counters.items()))
        st.energy = [{TX: n.ledger.totals[TX], RX: n.ledger.totals[RX], IDLE: n.ledger.totals[IDLE],
                      "remaining": n.ledger.remaining, "initial": n.ledger.initial}
                     for n in net.nodes]
        st.flows = [(f.src, f.dst) for f in self.flows]
        st.flow_offered = list(self.driver.offered)
        st.flow_delivered = [net.flow_delivered[i] for i in range(len(self.flows))]
        st.flow_dropped = [net.flow_dropped[i] for i in range(len(self.flows))]
        st.warnings = list(self.warnings)
        if not deaths:
            st.warnings.append("no node died before the horizon")
        st.events = self.sched.dispatched
        st.end_time = seconds(now)
        st.trace_hash = self.sched.trace_hash
        return st


def run(cfg: ScenarioConfig) -> RunStatistics:
    return Simulation(cfg).run()


def simulate(cfg: ScenarioConfig, until_s: Optional[float] = None) -> Simulation:
    """Build and advance a simulation without finalising it (for inspection)."""
    sim = Simulation(cfg)
    sim.advance(cfg.horizon if until_s is None else until_s)
    return sim
