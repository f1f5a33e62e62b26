"""Suite-wide energy audit and the acceptance summary printout.

Every Simulation finished anywhere in the test session is checked for
per-node energy conservation and for network lifetime equalling the first
battery death.  A violation fails the test that ran the simulation.
"""

import pytest

from manetsim import simulation
from manetsim.engine import TICKS_PER_SECOND

AUDIT = {"runs": 0, "nodes": 0, "worst": 0.0, "lifetime_checks": 0}
ACCEPTANCE = []


def audit_finish(sim, st):
    for node in sim.net.nodes:
        led = node.ledger
        quantum = max(led.power.values()) / TICKS_PER_SECOND
        err = led.conservation_error()
        AUDIT["worst"] = max(AUDIT["worst"], err / quantum)
        assert err <= quantum, f"node {node.id}: energy mismatch {err} J > {quantum} J"
        AUDIT["nodes"] += 1
    if st.death_times:
        first = sim.net.deaths[0][0] / TICKS_PER_SECOND
        assert st.network_lifetime == min(st.death_times.values()) == first
        AUDIT["lifetime_checks"] += 1
    AUDIT["runs"] += 1


@pytest.fixture(autouse=True, scope="session")
def _energy_audit():
    orig = simulation.Simulation.finish

    def finish(self):
        st = orig(self)
        audit_finish(self, st)
        return st

    simulation.Simulation.finish = finish
    yield
    simulation.Simulation.finish = orig


def pytest_terminal_summary(terminalreporter):
    tr = terminalreporter
    if ACCEPTANCE:
        tr.section("acceptance criteria")
        for line in ACCEPTANCE:
            tr.write_line(line)
    if AUDIT["runs"]:
        tr.write_line(f"energy audit: {AUDIT['runs']} simulations, {AUDIT['nodes']} node ledgers, "
                      f"worst conservation error {AUDIT['worst']:.3g} tick-quanta, "
                      f"{AUDIT['lifetime_checks']} lifetime checks")
