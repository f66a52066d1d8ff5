"""Direct, relayed, per-user and network-wide throughput."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracle
from .errors import ContractViolation, InstabilityError
from .phy import SuccessTable
from .queue import QueueMetrics, queue_metrics, symmetric_user_rates
from .scenario import RELAY, Scenario


@dataclass(frozen=True)
class ThroughputReport:
    t_direct: tuple[float, ...]
    t_relay: tuple[float, ...]
    t_user: tuple[float, ...]
    t_net: float
    p_empty: float

    @property
    def mean_user(self) -> float:
        return self.t_net / len(self.t_user)


def _report(td, tr, p_empty) -> ThroughputReport:
    td, tr = tuple(float(x) for x in td), tuple(float(x) for x in tr)
    t = tuple(a + b for a, b in zip(td, tr))
    return ThroughputReport(td, tr, t, float(sum(t)), p_empty)


def _relay_busy(scenario: Scenario, queue: QueueMetrics) -> float:
    """q0 P_tx P(Q>0): probability that the relay transmits in a slot."""
    if not queue.stable:
        raise InstabilityError("throughput needs a stable relay queue", gap=-queue.margin)
    acc = scenario.access
    return acc.q0 * acc.p_tx * (1.0 - queue.p_empty)


def throughput_symmetric(scenario: Scenario, queue: QueueMetrics) -> ThroughputReport:
    """T_D and T_R for n symmetric users.

    With y = q0 P_tx P(Q>0):
    T_D = y sum_k C(n-1,k) q^(k+1)(1-q)^(n-1-k) P_{d,k+1,1} + (1-y) (same with P_{d,k+1,0})
    T_R = same weights on (1 - P_{d,k+1,j}) P_rx P_{0,k+1,j}.
    """
    y = _relay_busy(scenario, queue)
    d0, d1, c0, c1 = symmetric_user_rates(scenario)
    p_rx = scenario.access.p_rx
    td = y * d1 + (1 - y) * d0
    tr = p_rx * (y * c1 + (1 - y) * c0)
    n = scenario.n
    return _report([td] * n, [tr] * n, queue.p_empty)


def throughput_two_user(scenario: Scenario, queue: QueueMetrics) -> ThroughputReport:
    if scenario.n != 2:
        raise ContractViolation("two-user throughput needs n = 2")
    y = _relay_busy(scenario, queue)
    st = SuccessTable(scenario)
    q, p_rx = scenario.access.q, scenario.access.p_rx
    td, tr = [], []
    for i, j in ((1, 2), (2, 1)):
        qi, qj = q[i - 1], q[j - 1]
        d_busy = (1 - qj) * st.dest(i, {RELAY, i}) + qj * st.dest(i, {RELAY, i, j})
        d_idle = (1 - qj) * st.dest(i, {i}) + qj * st.dest(i, {i, j})
        r_busy = ((1 - qj) * (1 - st.dest(i, {RELAY, i})) * p_rx * st.relay(i, {RELAY, i})
                  + qj * (1 - st.dest(i, {RELAY, i, j})) * p_rx * st.relay(i, {RELAY, i, j}))
        r_idle = ((1 - qj) * (1 - st.dest(i, {i})) * p_rx * st.relay(i, {i})
                  + qj * (1 - st.dest(i, {i, j})) * p_rx * st.relay(i, {i, j}))
        td.append(y * qi * d_busy + (1 - y) * qi * d_idle)
        tr.append(y * qi * r_busy + (1 - y) * qi * r_idle)
    return _report(td, tr, queue.p_empty)


def throughput_one_user(scenario: Scenario, queue: QueueMetrics) -> ThroughputReport:
    if scenario.n != 1:
        raise ContractViolation("one-user throughput needs n = 1")
    y = _relay_busy(scenario, queue)
    st = SuccessTable(scenario)
    q1, p_rx = scenario.access.q[0], scenario.access.p_rx
    pd_busy, pd_idle = st.dest(1, {RELAY, 1}), st.dest(1, {1})
    td = y * q1 * pd_busy + (1 - y) * q1 * pd_idle
    tr = (y * q1 * (1 - pd_busy) * p_rx * st.relay(1, {RELAY, 1})
          + (1 - y) * q1 * (1 - pd_idle) * p_rx * st.relay(1, {1}))
    return _report([td], [tr], queue.p_empty)


def throughput_enumerated(scenario: Scenario, queue: QueueMetrics,
                          components: oracle.ConditionalComponents | None = None) -> ThroughputReport:
    """Per-user throughput for any user mix, from the exact enumerator's rates."""
    y = _relay_busy(scenario, queue)
    comp = components if components is not None else oracle.conditional_components(scenario)
    td = y * comp.direct[1] + (1 - y) * comp.direct[0]
    tr = y * comp.admit[1] + (1 - y) * comp.admit[0]
    return _report(np.asarray(td), np.asarray(tr), queue.p_empty)


def throughput(scenario: Scenario, queue: QueueMetrics | None = None) -> ThroughputReport:
    q = queue if queue is not None else queue_metrics(scenario)
    if scenario.n == 1:
        return throughput_one_user(scenario, q)
    if scenario.n == 2:
        return throughput_two_user(scenario, q)
    if scenario.is_symmetric():
        return throughput_symmetric(scenario, q)
    return throughput_enumerated(scenario, q)
