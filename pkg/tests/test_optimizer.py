import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from relaylab.errors import ContractViolation
from relaylab.optimizer import (
    STABILITY_MARGIN,
    RateModel,
    _pick,
    optimize,
    stability_region,
)
from relaylab.queue import queue_metrics
from relaylab.scenario import table_one
from relaylab.throughput import throughput


def test_tie_break_prefers_lower_energy_then_lower_rx():
    pts = [(1.0, 0.5, 0.7), (1.0 + 1e-12, 0.2, 0.9), (1.0, 0.3, 0.9), (0.9, 0.0, 0.0)]
    assert _pick(pts)[1:] == (0.2, 0.9)
    # a clear winner is not overridden by energy
    assert _pick([(1.0, 1.0, 1.0), (0.99, 0.0, 0.0)])[1:] == (1.0, 1.0)
    assert _pick([(1.0, 0.6, 0.4), (1.0, 0.4, 0.6)])[1:] == (0.4, 0.6)


def test_zero_threshold_switches_relay_off():
    res = optimize(table_one(n=5, gamma=0.0))
    assert res.feasible and res.p_rx_opt == 0.0 and res.p_tx_opt == 0.0
    assert res.t_net_opt == pytest.approx(0.5)


def test_infeasible_box():
    res = optimize(table_one(n=15, gamma=0.2), rx_bounds=(0.9, 1.0))
    assert not res.feasible and math.isnan(res.p_rx_opt)
    assert res.trace["min_gap"] < 0


def test_grid_too_coarse():
    with pytest.raises(ContractViolation):
        optimize(table_one(n=2), grid_resolution=5)


def test_result_is_stable_and_consistent():
    s = table_one(n=15, gamma=0.2)
    res = optimize(s)
    chosen = s.with_access(p_rx=res.p_rx_opt, p_tx=res.p_tx_opt)
    m = queue_metrics(chosen)
    assert m.stable and res.margin >= 0.99 * STABILITY_MARGIN
    assert res.t_net_opt == pytest.approx(throughput(chosen, m).t_net, rel=1e-12)
    assert res.energy_proxy == pytest.approx(res.p_rx_opt + res.p_tx_opt)


def test_coarse_and_fine_grids_agree():
    s = table_one(n=5, gamma=0.6, q0=0.99)
    a = optimize(s, grid_resolution=11)
    b = optimize(s, grid_resolution=201)
    assert abs(a.t_net_opt - b.t_net_opt) < 1e-2


def test_stability_region_matches_queue_metrics():
    s = table_one(n=10, gamma=0.2)
    grid, mask = stability_region(s, grid_resolution=11)
    for i in (0, 4, 8, 10):
        for j in (1, 5, 10):
            m = queue_metrics(s.with_access(p_rx=grid[i], p_tx=grid[j]))
            assert bool(mask[i, j]) == (m.stable and (m.margin >= STABILITY_MARGIN or m.lambda1 == 0))


def test_asymmetric_rate_model():
    s = table_one(n=3, q=[0.05, 0.1, 0.3], user_dest=[120, 130, 150], p_rx=0.6, p_tx=0.8)
    ev = RateModel.from_scenario(s).evaluate(0.6, 0.8)
    m = queue_metrics(s)
    assert float(ev["t_net"]) == pytest.approx(throughput(s, m).t_net, rel=1e-12)


@given(n=st.integers(1, 8), gamma=st.sampled_from([0.2, 0.6, 2.5]), g=st.sampled_from([1.0, 1e-10]),
       p_rx=st.floats(0, 1), p_tx=st.floats(0.01, 1))
def test_rate_model_matches_full_pipeline(n, gamma, g, p_rx, p_tx):
    s = table_one(n=n, gamma=gamma, g=g, p_rx=p_rx, p_tx=p_tx)
    ev = RateModel.from_scenario(s).evaluate(p_rx, p_tx)
    m = queue_metrics(s)
    assert float(ev["lambda1"]) == pytest.approx(m.lambda1, rel=1e-12, abs=1e-15)
    assert float(ev["mu"]) == pytest.approx(m.mu, rel=1e-12)
    if bool(ev["feasible"]):
        assert float(ev["t_net"]) == pytest.approx(throughput(s, m).t_net, rel=1e-10)
        assert float(ev["p_empty"]) == pytest.approx(m.p_empty, abs=1e-12)


@given(n=st.integers(1, 20), gamma=st.sampled_from([0.2, 0.6, 1.2]), g=st.sampled_from([1.0, 1e-10]))
def test_optimum_beats_every_grid_point(n, gamma, g):
    s = table_one(n=n, gamma=gamma, g=g)
    res = optimize(s, grid_resolution=21)
    grid = np.linspace(0, 1, 21)
    R, T = np.meshgrid(grid, grid, indexing="ij")
    ev = RateModel.from_scenario(s).evaluate(R, T)
    best = np.max(np.where(ev["feasible"], ev["t_net"], -np.inf))
    assert res.t_net_opt >= best - 1e-9
