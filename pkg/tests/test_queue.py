import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from relaylab import oracle, queue
from relaylab.errors import InstabilityError
from relaylab.phy import symmetric_labels
from relaylab.scenario import table_one

# Table I, n = 5, gamma = 0.2, g = 1e-10, q0 = 0.95, P_rx = P_tx = 1.
# Frozen after agreement with the truncated-chain solver (see test below).
REF_N5 = dict(lambda0=0.2124614948305588, lambda1=0.42781748566333017,
              lam=0.27552408431213915, mu=0.9409027232011115,
              p_empty=0.7071704890227556, q_bar=0.3576374375121879,
              q0_min=0.27818803542838233)


def test_reference_values():
    m = queue.queue_metrics(table_one(n=5))
    for key, val in REF_N5.items():
        assert getattr(m, key) == pytest.approx(val, rel=1e-12), key
    assert m.stable and m.margin > 0


def test_reference_values_against_chain():
    res = oracle.markov_stationary(oracle.slot_distribution(table_one(n=5)), truncation=2000)
    assert res.p_empty == pytest.approx(REF_N5["p_empty"], abs=1e-12)
    assert res.mean == pytest.approx(REF_N5["q_bar"], rel=1e-10)


def test_service_rate_helper():
    s = table_one(n=5)
    mu = queue.service_rate(5, 0.1, 0.95, 1.0, symmetric_labels(s).p0d)
    assert mu == pytest.approx(REF_N5["mu"], rel=1e-14)


def test_two_user_coefficients_equal_second_derivative_plus_twice_load():
    dist = queue.slot_distribution(table_one(n=2, gamma=0.6, q0=0.99))
    a2, _ = queue.pgf_second_derivatives(dist)
    lam0 = dist.p0[1] + 2 * dist.p0[2]
    assert 4 * dist.p0[1] + 10 * dist.p0[2] == pytest.approx(a2 + 2 * lam0, rel=1e-14)


def test_two_user_mean_equals_pgf_route():
    dist = queue.slot_distribution(table_one(n=2, gamma=0.2))
    assert queue.mean_queue_two_user(dist) == pytest.approx(queue.mean_queue_pgf(dist), rel=1e-12)


def test_as_printed_n_user_mean_disagrees_with_chain():
    dist = queue.slot_distribution(table_one(n=5, gamma=0.6, q0=0.99))
    chain = oracle.markov_stationary(dist, truncation=2000).mean
    assert queue.mean_queue_symmetric(dist) == pytest.approx(chain, rel=1e-9)
    assert abs(queue.mean_queue_symmetric_as_printed(dist) - chain) > 1e-2 * chain


def test_one_user_probabilities_match_enumerator():
    s = table_one(n=1, gamma=0.6, p_rx=0.7, p_tx=0.3, q0=0.9)
    p0_1, p1_1, p1_m1 = queue.one_user_probabilities(s)
    dist = oracle.slot_distribution(s)
    assert p0_1 == pytest.approx(dist.p0[1], abs=1e-15)
    assert p1_1 == pytest.approx(dist.p1_at(1), abs=1e-15)
    assert p1_m1 == pytest.approx(dist.p1_at(-1), abs=1e-15)


def test_unstable_configuration():
    s = table_one(n=15, gamma=0.2)
    m = queue.queue_metrics(s)
    assert not m.stable and m.q_bar == math.inf and m.margin < 0
    with pytest.raises(InstabilityError):
        queue.empty_probability_symmetric(queue.slot_distribution(s))


def test_zero_threshold_gives_no_relay_traffic():
    m = queue.queue_metrics(table_one(n=4, gamma=0.0))
    assert (m.lam, m.p_empty, m.q_bar, m.q0_min) == (0.0, 1.0, 0.0, 0.0)


def test_receiver_off_gives_empty_queue():
    m = queue.queue_metrics(table_one(n=3, p_rx=0.0))
    assert m.lam == 0.0 and m.p_empty == 1.0


def test_infeasible_threshold():
    # the relay never reaches d: no q0 helps
    s = table_one(n=3, relay_dest=1e4)
    assert queue.q0_min(s) == queue.INFEASIBLE


def test_two_user_threshold_matches_general():
    s = table_one(n=2, gamma=0.6, p_tx=0.7)
    assert queue.q0_min_two_user(s) == pytest.approx(queue.q0_min(s), rel=1e-13)


def test_asymmetric_route_uses_enumerator():
    s = table_one(n=3, q=[0.05, 0.1, 0.2], user_dest=[120, 130, 140])
    m = queue.queue_metrics(s)
    res = oracle.markov_stationary(oracle.slot_distribution(s), truncation=2000)
    assert m.p_empty == pytest.approx(res.p_empty, abs=1e-12)
    assert m.q_bar == pytest.approx(res.mean, rel=1e-9)


scenarios = st.builds(
    lambda n, gamma, q, q0, p_rx, p_tx: table_one(n=n, gamma=gamma, q=q, q0=q0,
                                                  p_rx=p_rx, p_tx=p_tx),
    n=st.integers(1, 6), gamma=st.sampled_from([0.2, 0.6, 1.2, 2.5]),
    q=st.floats(0.01, 0.4), q0=st.floats(0.05, 1), p_rx=st.floats(0, 1), p_tx=st.floats(0.05, 1))


@given(s=scenarios)
def test_flow_balance(s):
    m = queue.queue_metrics(s)
    assume(m.stable)
    # in steady state everything admitted is served
    assert m.lam == pytest.approx(m.mu * (1 - m.p_empty), rel=1e-9, abs=1e-15)
    assert 0 <= m.p_empty <= 1 and m.q_bar >= 0


@given(s=scenarios)
def test_threshold_separates_stability(s):
    qmin = queue.q0_min(s)
    assume(0 < qmin < 0.9)
    assert queue.queue_metrics(s.with_access(q0=qmin * 1.01)).stable
    assert not queue.queue_metrics(s.with_access(q0=qmin * 0.99)).stable


@given(s=scenarios)
def test_closed_forms_match_pgf(s):
    dist = queue.slot_distribution(s)
    m = queue.queue_metrics(s)
    assume(m.stable and s.n >= 2)
    assert queue.empty_probability_pgf(dist) == pytest.approx(m.p_empty, abs=1e-12)
    assert queue.mean_queue_pgf(dist) == pytest.approx(m.q_bar, rel=1e-9, abs=1e-12)
