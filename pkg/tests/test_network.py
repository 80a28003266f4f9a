import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pzopf.network import (Branch, Bus, BusKind, CaseError, Network, build_admittance, bundled_case_path,
                           parse_case, serialize_case)

from conftest import TWO_BUS_CASE, two_bus


def test_bundled_counts(net30):
    assert len(net30.buses) == 30
    assert len(net30.branches) == 41
    assert len(net30.generators) == 6
    assert net30.total_load == pytest.approx(283.4, abs=1e-9)
    assert net30.base_mva == 100.0


def test_bundled_slack(net30):
    slack = net30.buses[net30.slack_index]
    assert slack.id == 1 and slack.v_setpoint == 1.06
    assert net30.slack_generator.bus == 1
    assert [g.bus for g in net30.controllable] == [2, 5, 8, 11, 13]


def test_bundled_pq_voltage_limits(net30):
    for b in net30.buses:
        if b.kind == BusKind.PQ:
            assert (b.v_min, b.v_max) == (0.95, 1.07)


def test_minimal_two_bus():
    net = parse_case(TWO_BUS_CASE)
    assert len(net.buses) == 2 and len(net.branches) == 1 and len(net.generators) == 1


def test_duplicate_bus_id():
    text = TWO_BUS_CASE.replace("BUS 2 0", "BUS 1 0")
    with pytest.raises(CaseError, match="duplicate bus id"):
        parse_case(text)


def test_zero_reactance():
    with pytest.raises(CaseError, match="zero reactance"):
        parse_case(TWO_BUS_CASE.replace("0.01 0.1 0.02", "0.01 0 0.02"))


def test_malformed_line_reports_number():
    text = TWO_BUS_CASE.replace("BUS 2 0 50 10", "BUS 2 0 fifty 10")
    with pytest.raises(CaseError) as err:
        parse_case(text)
    assert err.value.line == 3


@pytest.mark.parametrize("text", ["", "# only a comment\n", "BUS 1 2 0 0 1 1 1 0 0\n"])
def test_empty_or_headless(text):
    with pytest.raises(CaseError):
        parse_case(text)


def test_section_order_enforced():
    lines = TWO_BUS_CASE.splitlines()
    text = "\n".join([lines[0], lines[3], lines[1], lines[2], lines[4]])
    with pytest.raises(CaseError, match="order"):
        parse_case(text)


def test_zone_without_generator():
    with pytest.raises(CaseError, match="without a generator"):
        parse_case(TWO_BUS_CASE + "ZONE 2 10 20\n")


def test_roundtrip_bundled(net30):
    text = serialize_case(net30)
    again = parse_case(text)
    assert again == net30
    assert serialize_case(again) == text


def test_single_branch_admittance():
    y = build_admittance(two_bus(x=0.1))
    np.testing.assert_allclose(y.b, [[-10, 10], [10, -10]], atol=1e-12)
    np.testing.assert_array_equal(y.g, np.zeros((2, 2)))


def test_no_branches_leaves_shunts():
    buses = [Bus(1, BusKind.SLACK, 0, 0, 1, 1, 1, 0.1, 0.2), Bus(2, BusKind.PQ, 0, 0, 1, 0.9, 1.1, 0.0, -0.3)]
    y = build_admittance(Network(buses, []))
    np.testing.assert_array_equal(y.g, np.diag([0.1, 0.0]))
    np.testing.assert_array_equal(y.b, np.diag([0.2, -0.3]))


def branch_current_oracle(net, v):
    """Bus current injections from per-branch physics: ideal a:1 transformer, series element, charging halves."""
    idx = net.index
    cur = np.array([complex(b.g_shunt, b.b_shunt) for b in net.buses]) * v
    for br in net.branches:
        f, t = idx[br.from_bus], idx[br.to_bus]
        vf_inner = v[f] / br.tap
        i_series = (vf_inner - v[t]) / complex(br.r, br.x)
        i_inner = i_series + 0.5j * br.b_charging * vf_inner
        cur[f] += i_inner / br.tap  # current on the primary side of the ideal transformer
        cur[t] += -i_series + 0.5j * br.b_charging * v[t]
    return cur


def test_admittance_matches_branch_physics(net30, y30):
    rng = np.random.default_rng(3)
    for _ in range(5):
        v = rng.uniform(0.9, 1.1, 30) * np.exp(1j * rng.uniform(-0.4, 0.4, 30))
        np.testing.assert_allclose(y30.y @ v, branch_current_oracle(net30, v), rtol=1e-12, atol=1e-10)


def test_row_sums_are_shunt_injections(net30, y30):
    flat = np.ones(30, dtype=complex)
    np.testing.assert_allclose(y30.y.sum(axis=1), branch_current_oracle(net30, flat), atol=1e-10)


def test_sparsity_follows_branches(net30, y30):
    linked = {(net30.index[b.from_bus], net30.index[b.to_bus]) for b in net30.branches}
    linked |= {(t, f) for f, t in linked}
    for i in range(30):
        for k in range(30):
            if i != k:
                assert (y30.y[i, k] != 0) == ((i, k) in linked)


@st.composite
def untapped_networks(draw):
    n = draw(st.integers(2, 7))
    buses = [Bus(1, BusKind.SLACK, 0, 0, 1, 1, 1)] + [
        Bus(i, BusKind.PQ, 0, 0, 1, 0.9, 1.1, draw(st.floats(0, 0.1)), draw(st.floats(-0.5, 0.5)))
        for i in range(2, n + 1)]
    pairs = draw(st.lists(st.tuples(st.integers(1, n), st.integers(1, n)).filter(lambda p: p[0] != p[1]),
                          min_size=1, max_size=12))
    branches = [Branch(f, t, draw(st.floats(0, 0.3)), draw(st.floats(0.01, 0.8)), draw(st.floats(0, 0.1)))
                for f, t in pairs]
    return Network(buses, branches)


@settings(max_examples=60, deadline=None)
@given(untapped_networks())
def test_untapped_admittance_symmetric(net):
    y = build_admittance(net)
    assert np.max(np.abs(y.g - y.g.T)) <= 1e-12
    assert np.max(np.abs(y.b - y.b.T)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(untapped_networks())
def test_roundtrip_random(net):
    assert parse_case(serialize_case(net)) == net


def test_bundled_file_is_packaged():
    assert bundled_case_path().is_file()
