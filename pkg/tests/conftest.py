import numpy as np
import pytest

from pzopf.network import Branch, Bus, BusKind, Network, build_admittance, ieee30


@pytest.fixture(scope="session")
def net30():
    return ieee30()


@pytest.fixture(scope="session")
def y30(net30):
    return build_admittance(net30)


def two_bus(load_mw=0.0, x=0.1, r=0.0, v_slack=1.0, q_load=0.0):
    buses = [Bus(1, BusKind.SLACK, 0.0, 0.0, v_slack, v_slack, v_slack),
             Bus(2, BusKind.PQ, load_mw, q_load, 1.0, 0.5, 1.5)]
    return Network(buses, [Branch(1, 2, r, x)], [], 100.0)


TWO_BUS_CASE = """\
BASE 100
BUS 1 2 0 0 1.0 1.0 1.0 0 0
BUS 2 0 50 10 1.0 0.9 1.1 0 0
BRANCH 1 2 0.01 0.1 0.02 1.0
GEN 1 0 200 -100 100 0.01 2 10
"""


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
