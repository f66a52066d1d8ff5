import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relaylab import oracle
from relaylab.errors import ContractViolation, DivergenceWarning, EnumerationTooLargeError
from relaylab.phy import success_probability
from relaylab.scenario import DEST, RELAY, table_one


def brute_force(s):
    """Slot growth pmf from a nonempty queue by listing every joint outcome:
    user transmissions, relay gate/attempt, receiver gate, link successes."""
    n, acc = s.n, s.access
    topo, phy = s.topology, s.phy
    x = acc.q0 * acc.p_tx
    growth = np.zeros(n + 2)
    for tx in itertools.product((0, 1), repeat=n):
        w_tx = np.prod([acc.q[i] if b else 1 - acc.q[i] for i, b in enumerate(tx)])
        users = {i + 1 for i, b in enumerate(tx) if b}
        for relay_on, w_r in ((0, 1 - x), (1, x)):
            T = users | ({RELAY} if relay_on else set())
            caps = [(1 - success_probability(i, DEST, T, topo, phy))
                    * success_probability(i, RELAY, T, topo, phy) for i in sorted(users)]
            dep = success_probability(RELAY, DEST, T, topo, phy) if relay_on else 0.0
            # receiver off: nothing is admitted
            outcomes = [((0,) * len(caps), 1.0 - acc.p_rx)]
            for o in itertools.product((0, 1), repeat=len(caps)):
                w_c = np.prod([c if b else 1 - c for c, b in zip(caps, o)])
                outcomes.append((o, acc.p_rx * w_c))
            for o, w_o in outcomes:
                for d, w_d in ((1, dep), (0, 1 - dep)):
                    growth[sum(o) - d + 1] += w_tx * w_r * w_o * w_d
    return growth


@pytest.mark.parametrize("kw", [
    dict(n=1, gamma=0.2),
    dict(n=2, gamma=0.6, p_rx=0.7, p_tx=0.3),
    dict(n=3, gamma=1.2, g=1e-3, q=[0.1, 0.3, 0.5], user_dest=[100, 130, 160]),
])
def test_enumerator_matches_brute_force(kw):
    s = table_one(**kw)
    growth, _ = oracle.enumerate_slot(s, "nonempty")
    np.testing.assert_allclose(growth, brute_force(s), atol=1e-14)


def test_distributions_are_normalised():
    s = table_one(n=6, gamma=0.6, q=[0.05, 0.1, 0.2, 0.3, 0.4, 0.9], p_rx=0.4)
    dist = oracle.slot_distribution(s)
    dist.check()
    assert dist.p1_at(-2) == 0.0


def test_empty_queue_cannot_shrink():
    growth, arrivals = oracle.enumerate_slot(table_one(n=3), "empty")
    assert growth[0] == 0.0
    np.testing.assert_allclose(growth[1:], arrivals)


def test_bad_queue_state():
    with pytest.raises(ContractViolation):
        oracle.enumerate_slot(table_one(n=1), "full")


def test_enumeration_limit():
    s = table_one(n=oracle.MAX_ENUM_USERS + 1, q=[0.1] * 20 + [0.2])
    with pytest.raises(EnumerationTooLargeError):
        oracle.conditional_components(s)


def test_zero_access_gives_empty_queue():
    dist = oracle.slot_distribution(table_one(n=3, q=0.0))
    res = oracle.markov_stationary(dist, truncation=50)
    assert res.p_empty == 1.0 and res.mean == 0.0


def test_cut_recursion_matches_gth():
    dist = oracle.slot_distribution(table_one(n=3, gamma=0.6, q0=0.99))
    fast = oracle.markov_stationary(dist, truncation=400)
    dense = oracle.gth_solve(oracle.transition_matrix(dist, 400))
    np.testing.assert_allclose(fast.pi, dense, atol=1e-13)


def test_unstable_chain_warns():
    dist = oracle.slot_distribution(table_one(n=15, gamma=0.2))
    with pytest.warns(DivergenceWarning):
        oracle.markov_stationary(dist, truncation=200)


def test_truncation_error_warns():
    # stable but heavy: loads close to one leave mass past a short truncation
    s = table_one(n=5, gamma=0.2, p_tx=0.35)
    with pytest.warns(DivergenceWarning):
        oracle.markov_stationary(oracle.slot_distribution(s), truncation=20)


def test_stationary_satisfies_balance():
    dist = oracle.slot_distribution(table_one(n=2, gamma=0.2))
    N = 300
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        res = oracle.markov_stationary(dist, truncation=N)
    P = oracle.transition_matrix(dist, N)
    np.testing.assert_allclose(res.pi @ P, res.pi, atol=1e-14)


@given(q=st.lists(st.floats(0, 1), min_size=1, max_size=4),
       p_rx=st.floats(0, 1), p_tx=st.floats(0, 1), gamma=st.floats(0, 3))
def test_components_are_probabilities(q, p_rx, p_tx, gamma):
    s = table_one(n=len(q), q=q, p_rx=p_rx, p_tx=p_tx, gamma=gamma)
    comp = oracle.conditional_components(s)
    assert 0 <= comp.A <= 1 + 1e-15
    np.testing.assert_allclose(comp.arrivals.sum(axis=1), 1.0, atol=1e-12)
    assert comp.growth_tx.sum() == pytest.approx(1.0, abs=1e-12)
    assert (comp.direct >= 0).all() and (comp.direct <= np.asarray(q) + 1e-15).all()
    # a transmitting user is delivered directly, admitted, or lost
    assert (comp.direct + comp.admit <= np.asarray(q) + 1e-12).all()


@given(q=st.floats(0.01, 0.5), p_rx=st.floats(0, 1))
def test_mean_arrivals_equal_admission_rates(q, p_rx):
    s = table_one(n=3, q=q, p_rx=p_rx, gamma=0.6)
    comp = oracle.conditional_components(s)
    k = np.arange(4)
    np.testing.assert_allclose(k @ comp.arrivals.T, comp.admit.sum(axis=1), atol=1e-14)
