import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relaylab.errors import ContractViolation, MissingLinkError
from relaylab.phy import (
    link_tables,
    noise_factor,
    path_gain,
    self_interference_factor,
    success_probability,
    symmetric_labels,
    SuccessTable,
)
from relaylab.scenario import DEST, RELAY, PhyConfig, Topology, table_one


@pytest.fixture
def base():
    s = table_one(n=3, gamma=0.2, g=1e-10)
    return s.topology, s.phy


def test_path_gain_table_one(base):
    topo, phy = base
    assert path_gain(1, RELAY, topo, phy) == pytest.approx(7.71605e-11, rel=1e-5)
    assert path_gain(RELAY, DEST, topo, phy) == pytest.approx(2.44141e-10, rel=1e-5)


def test_isolated_user_to_relay(base):
    topo, phy = base
    assert success_probability(1, RELAY, {1}, topo, phy) == pytest.approx(0.974413, abs=1e-6)


def test_self_interference_factor(base):
    topo, phy = base
    assert self_interference_factor(1, RELAY, topo, phy) == pytest.approx(0.999741, abs=1e-6)
    with_si = success_probability(1, RELAY, {1, RELAY}, topo, phy)
    assert with_si == pytest.approx(0.974413 * 0.999741, abs=1e-6)


def test_zero_threshold_always_succeeds(base):
    topo, _ = base
    phy = PhyConfig.uniform_gamma(0.0, g=1.0)
    assert success_probability(2, DEST, {1, 2, 3, RELAY}, topo, phy) == 1.0


def test_interference_factor_matches_closed_ratio(base):
    topo, phy = base
    # two users at the same distance: ratio of received powers is 1
    p1 = success_probability(1, DEST, {1}, topo, phy)
    p12 = success_probability(1, DEST, {1, 2}, topo, phy)
    assert p12 == pytest.approx(p1 / (1 + phy.gamma_dest))


def test_transmitter_must_be_active(base):
    topo, phy = base
    with pytest.raises(ContractViolation):
        success_probability(1, DEST, {2}, topo, phy)
    with pytest.raises(ContractViolation):
        success_probability(RELAY, RELAY, {RELAY}, topo, phy)


def test_missing_link():
    topo = Topology(1, {(1, RELAY): 60.0})
    with pytest.raises(MissingLinkError):
        topo.distance(1, DEST)


def test_symmetric_labels_match_general(base):
    s = table_one(n=4, gamma=0.6, g=1e-6)
    lab = symmetric_labels(s)
    table = SuccessTable(s)
    assert math.isnan(lab.pd[0, 0])
    for k in range(1, 5):
        users = set(range(1, k + 1))
        assert lab.pd[k, 1] == table.dest(1, users | {RELAY})
        assert lab.p0[k, 0] == table.relay(1, users)
    assert lab.p0d[0] == pytest.approx(noise_factor(RELAY, DEST, s.topology, s.phy))


def test_symmetric_labels_refuse_asymmetric():
    s = table_one(n=2, q=[0.1, 0.2])
    with pytest.raises(ContractViolation):
        symmetric_labels(s)


def test_link_tables_reproduce_success_probability():
    s = table_one(n=4, gamma=0.6, g=1e-4, user_dest=[110, 120, 130, 140])
    tabs = link_tables(s)
    T = {1, 3, 4, RELAY}
    log_d = tabs.dest_base[2] + tabs.dest_pair[2, [0, 3, 4]].sum()
    assert math.exp(log_d) == pytest.approx(
        success_probability(3, DEST, T, s.topology, s.phy), rel=1e-13)
    log_r = tabs.relay_base[0] + tabs.relay_pair[0, [2, 3]].sum() + tabs.relay_si[0]
    assert math.exp(log_r) == pytest.approx(
        success_probability(1, RELAY, T, s.topology, s.phy), rel=1e-13)


subsets = st.sets(st.integers(1, 5), max_size=5)


@given(T=subsets, relay=st.booleans(), gamma=st.floats(0, 5), g=st.floats(0, 1))
def test_success_is_probability(T, relay, gamma, g):
    s = table_one(n=5, gamma=gamma, g=g)
    T = T | {1} | ({RELAY} if relay else set())
    for j in (DEST, RELAY):
        p = success_probability(1, j, T, s.topology, s.phy)
        assert 0.0 <= p <= 1.0


@given(T=subsets, extra=st.integers(2, 5), gamma=st.floats(0.01, 5))
def test_more_interferers_never_help(T, extra, gamma):
    s = table_one(n=5, gamma=gamma)
    T = (T | {1}) - {extra}
    a = success_probability(1, DEST, T, s.topology, s.phy)
    b = success_probability(1, DEST, T | {extra}, s.topology, s.phy)
    assert b <= a


@given(g1=st.floats(0, 1), g2=st.floats(0, 1))
def test_self_interference_monotone_in_g(g1, g2):
    lo, hi = sorted((g1, g2))
    s = table_one(n=2, gamma=0.6)
    p = [success_probability(1, RELAY, {1, RELAY}, s.topology, s.with_phy(g=g).phy)
         for g in (lo, hi)]
    assert p[1] <= p[0]


@given(gamma=st.floats(0.01, 3))
def test_isolated_link_is_noise_limited(gamma):
    s = table_one(n=1, gamma=gamma)
    h = path_gain(1, DEST, s.topology, s.phy)
    assert success_probability(1, DEST, {1}, s.topology, s.phy) == pytest.approx(
        np.exp(-gamma * 1e-11 / h))
