"""Closed-form relay-queue analytics.

Arrival/service rates, empty-queue probability, mean queue size (direct
formulas and the generating-function route) and the stability threshold on
the relay attempt probability q0, for one user, two asymmetric users and n
symmetric users.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from . import oracle
from .errors import ContractViolation, InstabilityError
from .oracle import SlotDistribution
from .phy import SuccessTable, symmetric_labels
from .scenario import RELAY, Scenario

INFEASIBLE = math.inf
"""Marker returned by :func:`q0_min` when no q0 in (0, 1) stabilises the queue."""


@dataclass(frozen=True)
class QueueMetrics:
    lambda0: float
    lambda1: float
    lam: float
    mu: float
    p_empty: float
    q_bar: float
    q0_min: float
    stable: bool

    @property
    def margin(self) -> float:
        """mu - lambda1; positive iff Loynes' condition holds."""
        return self.mu - self.lambda1


@dataclass(frozen=True)
class PgfCoefficients:
    a: np.ndarray
    b: np.ndarray
    s0: float


def binomial_weights(n: int, q: float) -> np.ndarray:
    k = np.arange(n + 1)
    return comb(n, k) * q ** k * (1 - q) ** (n - k)


def service_rate(n: int, q: float, q0: float, p_tx: float, p0d) -> float:
    """mu = q0 P_tx sum_k C(n,k) q^k (1-q)^(n-k) P_{0d,k}."""
    p0d = np.asarray(p0d, dtype=float)
    if len(p0d) < n + 1:
        raise ContractViolation(f"P_0d table needs entries for k = 0..{n}")
    return float(q0 * p_tx * binomial_weights(n, q) @ p0d[:n + 1])


def _mean_arrivals(r) -> float:
    r = np.asarray(r)
    return float(np.arange(len(r)) @ r)


def _down_drift(dist: SlotDistribution) -> float:
    """p^1_{-1} - sum_i i p^1_i: expected decrease of a nonempty queue per slot."""
    up = dist.p1[2:]
    return float(dist.p1[0] - np.arange(1, len(up) + 1) @ up)


def arrival_rates(dist: SlotDistribution, p_empty: float) -> tuple[float, float, float]:
    """(lambda0, lambda1, lambda) with lambda = P(Q=0) lambda0 + P(Q>0) lambda1."""
    lam0 = _mean_arrivals(dist.r0)
    lam1 = _mean_arrivals(dist.r1)
    return lam0, lam1, p_empty * lam0 + (1 - p_empty) * lam1


def _require_stable(dist: SlotDistribution) -> float:
    d = _down_drift(dist)
    lam0 = _mean_arrivals(dist.p0)
    if lam0 == 0:
        return d
    if d <= 0:
        raise InstabilityError(f"relay queue unstable: downward drift {d:.6g} <= 0", gap=-d)
    return d


def empty_probability_two_user(dist: SlotDistribution) -> float:
    """(p1_-1 - p1_1 - 2 p1_2) / (p1_-1 - p1_1 - 2 p1_2 + lambda0)."""
    if dist.n > 2:
        raise ContractViolation("two-user formula needs at most two users")
    lam0 = _mean_arrivals(dist.p0)
    if lam0 == 0:
        return 1.0
    d = dist.p1_at(-1) - dist.p1_at(1) - 2 * dist.p1_at(2)
    if d <= 0:
        raise InstabilityError(f"relay queue unstable: downward drift {d:.6g} <= 0", gap=-d)
    return d / (d + lam0)


def empty_probability_symmetric(dist: SlotDistribution, n: int | None = None) -> float:
    lam0 = _mean_arrivals(dist.p0)
    if lam0 == 0:
        return 1.0
    d = _require_stable(dist)
    return d / (d + lam0)


def empty_probability_pgf(dist: SlotDistribution) -> float:
    """P(Q=0) = (1 + B'(1)) / (1 + B'(1) - A'(1))."""
    a1, b1 = _pgf_first(dist)
    if a1 == 0:
        return 1.0
    _require_stable(dist)
    return (1 + b1) / (1 + b1 - a1)


def pgf_coefficients(dist: SlotDistribution) -> PgfCoefficients:
    """a_i = p0_i; b_0 = p1_-1, b_1 = p1_0, b_{k+1} = p1_k."""
    return PgfCoefficients(np.asarray(dist.p0).copy(), np.asarray(dist.p1).copy(),
                           empty_probability_pgf(dist))


def _pgf_first(dist):
    """A'(1) and B'(1) for A(z) = sum a_i z^-i, B(z) = sum b_i z^-i."""
    a, b = np.asarray(dist.p0), np.asarray(dist.p1)
    return -float(np.arange(len(a)) @ a), -float(np.arange(len(b)) @ b)


def pgf_second_derivatives(dist: SlotDistribution) -> tuple[float, float]:
    """(A''(1), B''(1)) from the printed sums: sum i(i+1) p0_i and
    2 - 2 p1_-1 + sum i(i+3) p1_i."""
    n = dist.n
    i = np.arange(1, n + 1)
    a2 = float((i * (i + 1)) @ dist.p0[1:])
    up = dist.p1[2:]
    j = np.arange(1, len(up) + 1)
    b2 = 2 - 2 * dist.p1_at(-1) + float((j * (j + 3)) @ up)
    return a2, b2


def mean_queue_pgf(dist: SlotDistribution) -> float:
    """Q_bar = -s0 K''(1) / L''(1) with s0 = P(Q=0)."""
    lam0 = _mean_arrivals(dist.p0)
    if lam0 == 0:
        return 0.0
    _require_stable(dist)
    A1, B1 = _pgf_first(dist)
    A2, B2 = pgf_second_derivatives(dist)
    A0 = 1.0
    K2 = (2 * A0 - 2 * A1 + A2 - B2) * (-1 - B1) - (2 - B2) * (-A0 + A1 - B1)
    L2 = 2 * (-1 - B1) ** 2
    s0 = empty_probability_pgf(dist)
    return -s0 * K2 / L2


def mean_queue_two_user(dist: SlotDistribution) -> float:
    if dist.n > 2:
        raise ContractViolation("two-user formula needs at most two users")
    lam0 = _mean_arrivals(dist.p0)
    if lam0 == 0:
        return 0.0
    p0_1, p0_2 = dist.p0[1], (dist.p0[2] if dist.n >= 2 else 0.0)
    pm, p1, p2 = dist.p1_at(-1), dist.p1_at(1), dist.p1_at(2)
    d = pm - p1 - 2 * p2
    if d <= 0:
        raise InstabilityError(f"relay queue unstable: downward drift {d:.6g} <= 0", gap=-d)
    return ((4 * p0_1 + 10 * p0_2) / (2 * (d + lam0))
            + lam0 / (d + lam0) * (2 * pm - 4 * p1 - 10 * p2) / (2 * (p1 + 2 * p2 - pm)))


def mean_queue_symmetric(dist: SlotDistribution, n: int | None = None) -> float:
    """Mean relay queue size for n users.

    First term sum i(i+3) p0_i / (2(D + lambda0)), second term
    lambda0 (sum i(i+3) p1_i - 2 p1_-1) / (2 D (D + lambda0)), D the downward drift.
    Reduces to the two-user expression at n = 2.
    """
    lam0 = _mean_arrivals(dist.p0)
    if lam0 == 0:
        return 0.0
    d = _require_stable(dist)
    i = np.arange(1, dist.n + 1)
    sa = float((i * (i + 3)) @ dist.p0[1:])
    up = dist.p1[2:]
    j = np.arange(1, len(up) + 1)
    sb = float((j * (j + 3)) @ up)
    return sa / (2 * (d + lam0)) + lam0 / (d + lam0) * (sb - 2 * dist.p1_at(-1)) / (2 * d)


def mean_queue_symmetric_as_printed(dist: SlotDistribution) -> float:
    """The n-user expression with the extra (sum i p1_i - p1_-1) factor in the
    first numerator. Kept only to document that it disagrees with the chain."""
    lam0 = _mean_arrivals(dist.p0)
    d = _require_stable(dist)
    i = np.arange(1, dist.n + 1)
    sa = float((i * (i + 3)) @ dist.p0[1:])
    up = dist.p1[2:]
    j = np.arange(1, len(up) + 1)
    sb = float((j * (j + 3)) @ up)
    return (-d) * sa / (2 * (d + lam0)) + lam0 * (2 * dist.p1_at(-1) - sb) / (2 * (-d) * (d + lam0))


# --- closed-form slot distributions -------------------------------------------------

def symmetric_slot_distribution(scenario: Scenario) -> SlotDistribution:
    """p0_k, p1_k, p1_-1, r0_k, r1_k for n symmetric users.

    Each transmitting user is captured (direct failure, relay decodes) with
    probability P_{0,i,j}(1 - P_{d,i,j}); one receiver-on gate of probability
    P_rx multiplies every outcome with at least one arrival.
    """
    lab = symmetric_labels(scenario)
    n, acc = scenario.n, scenario.access
    q, x, p_rx = acc.q[0], acc.q0 * acc.p_tx, acc.p_rx
    w = binomial_weights(n, q)
    k = np.arange(n + 1)

    def arrivals(j):
        """G[i, k]: pmf of k arrivals given i users transmit, relay state j."""
        G = np.zeros((n + 1, n + 2))
        G[0, 0] = 1.0
        for i in range(1, n + 1):
            s = lab.p0[i, j] * (1 - lab.pd[i, j])
            kk = k[:i + 1]
            G[i, :i + 1] = p_rx * comb(i, kk) * s ** kk * (1 - s) ** (i - kk)
            G[i, 0] += 1 - p_rx
        return G

    G0, G1 = arrivals(0), arrivals(1)
    arr0 = w @ G0[:, :n + 1]
    arr1 = w @ G1[:, :n + 1]
    # growth from nonempty: relay silent, or transmitting and failing (k arrivals), or
    # transmitting and succeeding (k + 1 arrivals)
    fail = w * (1 - lab.p0d)
    succ = w * lab.p0d
    p1_pos = (1 - x) * arr0 + x * (fail @ G1[:, :n + 1] + succ @ G1[:, 1:n + 2])
    p1_minus = x * float(succ @ G1[:, 0])
    p1 = np.concatenate(([p1_minus], p1_pos))
    # the k = 0 entry is the complement, as printed
    p1[1] = 1.0 - p1_minus - p1_pos[1:].sum()
    r1 = (1 - x) * arr0 + x * arr1
    return SlotDistribution(arr0, p1, arr0.copy(), r1)


def slot_distribution(scenario: Scenario) -> SlotDistribution:
    """Closed forms for symmetric users; exact enumeration otherwise."""
    if scenario.is_symmetric():
        return symmetric_slot_distribution(scenario)
    return oracle.slot_distribution(scenario)


def one_user_probabilities(scenario: Scenario) -> tuple[float, float, float]:
    """(p0_1, p1_1, p1_-1) for a single user, written per-event."""
    if scenario.n != 1:
        raise ContractViolation("one-user formulas need n = 1")
    st = SuccessTable(scenario)
    acc = scenario.access
    q1, x, p_rx = acc.q[0], acc.q0 * acc.p_tx, acc.p_rx
    Pd_1 = st.dest(1, {1})
    Pd_01 = st.dest(1, {RELAY, 1})
    P0_1 = p_rx * st.relay(1, {1})
    P0_01 = p_rx * st.relay(1, {RELAY, 1})
    Pr_0 = st.dest(RELAY, {RELAY})
    Pr_01 = st.dest(RELAY, {RELAY, 1})
    p0_1 = q1 * (1 - Pd_1) * P0_1
    p1_1 = (1 - x) * q1 * (1 - Pd_1) * P0_1 + x * q1 * (1 - Pd_01) * P0_01 * (1 - Pr_01)
    p1_m1 = (x * (1 - q1) * Pr_0 + x * q1 * Pr_01 * Pd_01
             + x * q1 * (1 - Pd_01) * (1 - P0_01) * Pr_01)
    return p0_1, p1_1, p1_m1


def one_user_metrics(scenario: Scenario) -> tuple[QueueMetrics, tuple[float, float, float]]:
    """Queue metrics for a single user plus (p0_1, p1_1, p1_-1).

    lambda = P(Q=0) lambda0 + P(Q>0) lambda1 with
    P(Q=0) = (p1_-1 - p1_1) / (p1_-1 - p1_1 + p0_1).
    """
    p0_1, p1_1, p1_m1 = one_user_probabilities(scenario)
    st = SuccessTable(scenario)
    acc = scenario.access
    q1, x, p_rx = acc.q[0], acc.q0 * acc.p_tx, acc.p_rx
    mu = acc.q0 * acc.p_tx * (q1 * st.dest(RELAY, {RELAY, 1}) + (1 - q1) * st.dest(RELAY, {RELAY}))
    lam0 = p0_1
    lam1 = ((1 - x) * q1 * (1 - st.dest(1, {1})) * p_rx * st.relay(1, {1})
            + x * q1 * (1 - st.dest(1, {RELAY, 1})) * p_rx * st.relay(1, {RELAY, 1}))
    probs = (p0_1, p1_1, p1_m1)
    qmin = q0_min(scenario)
    if not (lam1 < mu or lam1 == 0):
        return QueueMetrics(lam0, lam1, lam1, mu, 0.0, math.inf, qmin, False), probs
    if p0_1 == 0:
        return QueueMetrics(lam0, lam1, 0.0, mu, 1.0, 0.0, qmin, True), probs
    den = p1_m1 - p1_1 + p0_1
    p_empty = (p1_m1 - p1_1) / den
    lam = (p1_m1 - p1_1) / den * lam0 + p0_1 / den * lam1
    dist = SlotDistribution(np.array([1 - p0_1, p0_1]),
                            np.array([p1_m1, 1 - p1_m1 - p1_1, p1_1]),
                            np.array([1 - lam0, lam0]), np.array([1 - lam1, lam1]))
    return QueueMetrics(lam0, lam1, lam, mu, p_empty, mean_queue_two_user(dist), qmin, True), probs


# --- stability threshold --------------------------------------------------------------

def q0_min(scenario: Scenario, components: oracle.ConditionalComponents | None = None) -> float:
    """Smallest relay attempt probability that keeps the queue stable.

    With x = q0 P_tx, lambda1 = (1-x) sum k A_k + x sum k B_k and mu = x A, so
    lambda1 < mu  iff  q0 > sum k A_k / (P_tx (A + sum k (A_k - B_k))).
    Returns 0 when nothing arrives with the relay silent, and INFEASIBLE when
    the threshold is not below 1.
    """
    comp = components if components is not None else _components(scenario)
    p_tx = scenario.access.p_tx
    k = np.arange(comp.n + 1)
    num = float(k @ comp.A_k)
    if num == 0:
        return 0.0
    den = p_tx * (comp.A + float(k @ (comp.A_k - comp.B_k)))
    if den <= num:
        return INFEASIBLE
    return num / den


def q0_min_two_user(scenario: Scenario) -> float:
    """(A_1 + 2A_2) / (P_tx (A + A_1 + 2A_2 - B_1 - 2B_2)) from the enumerator."""
    if scenario.n != 2:
        raise ContractViolation("two-user threshold needs n = 2")
    comp = oracle.conditional_components(scenario)
    A1, A2 = comp.A_k[1], comp.A_k[2]
    B1, B2 = comp.B_k[1], comp.B_k[2]
    num = A1 + 2 * A2
    if num == 0:
        return 0.0
    den = scenario.access.p_tx * (comp.A + A1 + 2 * A2 - B1 - 2 * B2)
    return num / den if den > num else INFEASIBLE


def symmetric_components(scenario: Scenario) -> oracle.ConditionalComponents:
    """A, A_k, B_k in closed form for symmetric users (same layout as the enumerator)."""
    silent = symmetric_slot_distribution(scenario.with_access(q0=0.0))
    full = symmetric_slot_distribution(scenario.with_access(q0=1.0, p_tx=1.0))
    lab = symmetric_labels(scenario)
    acc = scenario.access
    n, q = scenario.n, acc.q[0]
    A = float(binomial_weights(n, q) @ lab.p0d)
    d0, d1, c0, c1 = symmetric_user_rates(scenario)
    arrivals = np.vstack([silent.r1, full.r1])
    direct = np.array([[d0] * n, [d1] * n])
    admit = acc.p_rx * np.array([[c0] * n, [c1] * n])
    return oracle.ConditionalComponents(A, arrivals, full.p1.copy(), direct, admit)


def symmetric_user_rates(scenario: Scenario) -> tuple[float, float, float, float]:
    """Per-user direct-delivery and relay-capture rates for relay silent (0) and
    transmitting (1): sum_k C(n-1,k) q^(k+1) (1-q)^(n-1-k) times P_{d,k+1,j} or
    (1 - P_{d,k+1,j}) P_{0,k+1,j}. Capture rates exclude the P_rx gate."""
    lab = symmetric_labels(scenario)
    n, q = scenario.n, scenario.access.q[0]
    w = q * binomial_weights(n - 1, q)
    pd, p0 = lab.pd[1:], lab.p0[1:]
    d0, d1 = float(w @ pd[:, 0]), float(w @ pd[:, 1])
    c0 = float(w @ ((1 - pd[:, 0]) * p0[:, 0]))
    c1 = float(w @ ((1 - pd[:, 1]) * p0[:, 1]))
    return d0, d1, c0, c1


def _components(scenario):
    if scenario.is_symmetric():
        return symmetric_components(scenario)
    return oracle.conditional_components(scenario)


# --- dispatch -------------------------------------------------------------------------

def metrics_from_distribution(dist: SlotDistribution, mu: float, qmin: float) -> QueueMetrics:
    lam0 = _mean_arrivals(dist.r0)
    lam1 = _mean_arrivals(dist.r1)
    stable = lam1 < mu or lam1 == 0
    if not stable:
        return QueueMetrics(lam0, lam1, lam1, mu, 0.0, math.inf, qmin, False)
    if dist.n <= 2:
        p_empty = empty_probability_two_user(dist)
        q_bar = mean_queue_two_user(dist)
    else:
        p_empty = empty_probability_symmetric(dist)
        q_bar = mean_queue_symmetric(dist)
    _, _, lam = arrival_rates(dist, p_empty)
    return QueueMetrics(lam0, lam1, lam, mu, p_empty, q_bar, qmin, True)


def queue_metrics(scenario: Scenario) -> QueueMetrics:
    """Relay-queue metrics, routed to the one-user, two-user or n-user expressions."""
    if scenario.n == 1:
        return one_user_metrics(scenario)[0]
    comp = _components(scenario)
    acc = scenario.access
    dist = comp.slot_distribution(acc.q0, acc.p_tx) if not scenario.is_symmetric() \
        else symmetric_slot_distribution(scenario)
    mu = acc.q0 * acc.p_tx * comp.A
    return metrics_from_distribution(dist, mu, q0_min(scenario, comp))
