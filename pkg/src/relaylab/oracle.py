"""Exact per-slot event enumeration and a truncated Markov-chain solver.

The enumerator walks every subset of transmitting users, so it is exact for
any (possibly asymmetric) scenario with up to ``MAX_ENUM_USERS`` users. It is
the ground truth that the closed forms in :mod:`relaylab.queue` are checked
against.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DivergenceWarning, EnumerationTooLargeError
from .phy import link_tables
from .scenario import Scenario

MAX_ENUM_USERS = 20
_CHUNK_BITS = 14


@dataclass(frozen=True)
class SlotDistribution:
    """Per-slot queue-growth and arrival distributions.

    ``p0[k]``: growth by k from an empty queue (k = 0..n).
    ``p1[k + 1]``: growth by k from a nonempty queue (k = -1..n).
    ``r0[k]``, ``r1[k]``: k arrivals from an empty / nonempty queue.
    """

    p0: np.ndarray
    p1: np.ndarray
    r0: np.ndarray
    r1: np.ndarray

    @property
    def n(self) -> int:
        return len(self.p0) - 1

    def p1_at(self, k: int) -> float:
        if k < -1:
            return 0.0
        return float(self.p1[k + 1]) if k + 1 < len(self.p1) else 0.0

    def check(self, tol: float = 1e-12) -> None:
        for name in ("p0", "p1", "r0", "r1"):
            arr = getattr(self, name)
            if (arr < -tol).any() or abs(arr.sum() - 1.0) > tol:
                raise ContractViolation(f"{name} is not a probability vector: sum={arr.sum()!r}")


@dataclass(frozen=True)
class ConditionalComponents:
    """Slot statistics conditioned on the relay being silent (row 0) or
    transmitting (row 1).

    ``A``          mean relay -> d success probability given the relay transmits.
    ``arrivals``   (2, n+1) arrival-count pmfs: row 0 is A_k, row 1 is B_k.
    ``growth_tx``  (n+2,) pmf of arrivals minus departure given the relay transmits
                   (index 0 is a net change of -1).
    ``direct``     (2, n) per-user rate of direct deliveries to d.
    ``admit``      (2, n) per-user rate of admissions into the relay queue.
    """

    A: float
    arrivals: np.ndarray
    growth_tx: np.ndarray
    direct: np.ndarray
    admit: np.ndarray

    @property
    def n(self) -> int:
        return self.arrivals.shape[1] - 1

    @property
    def A_k(self) -> np.ndarray:
        return self.arrivals[0]

    @property
    def B_k(self) -> np.ndarray:
        return self.arrivals[1]

    def slot_distribution(self, q0: float, p_tx: float) -> SlotDistribution:
        x = q0 * p_tx
        arr0, arr1 = self.arrivals
        p1 = (1 - x) * np.concatenate(([0.0], arr0)) + x * self.growth_tx
        r1 = (1 - x) * arr0 + x * arr1
        return SlotDistribution(arr0.copy(), p1, arr0.copy(), r1)


def _poisson_binomial(s: np.ndarray) -> np.ndarray:
    """Row-wise pmf of the number of successes among independent Bernoulli(s[:, c])."""
    rows, cols = s.shape
    pmf = np.zeros((rows, cols + 1))
    pmf[:, 0] = 1.0
    for c in range(cols):
        sc = s[:, c:c + 1]
        new = pmf * (1.0 - sc)
        new[:, 1:] += pmf[:, :-1] * sc
        pmf = new
    return pmf


def conditional_components(scenario: Scenario) -> ConditionalComponents:
    """Enumerate all 2^n user transmit sets with the relay forced silent and
    forced transmitting.

    Per slot: a transmitting user's packet reaches d directly with the Eq.-3
    probability for the full transmit set; otherwise, if the relay receiver is
    on (one Bernoulli(P_rx) gate per slot), the relay captures it with the
    user -> relay probability (self-interference iff the relay transmits).
    """
    n = scenario.n
    if n > MAX_ENUM_USERS:
        raise EnumerationTooLargeError(
            f"exact enumeration supports n <= {MAX_ENUM_USERS}, got n={n}")
    tabs = link_tables(scenario)
    q = np.asarray(scenario.access.q)
    p_rx = scenario.access.p_rx

    A = 0.0
    arrivals = np.zeros((2, n + 1))
    growth_tx = np.zeros(n + 2)
    direct = np.zeros((2, n))
    admit = np.zeros((2, n))

    total = 1 << n
    step = 1 << min(n, _CHUNK_BITS)
    shifts = np.arange(n)
    for start in range(0, total, step):
        ints = np.arange(start, min(total, start + step), dtype=np.int64)
        bits = ((ints[:, None] >> shifts) & 1).astype(bool)
        w = np.prod(np.where(bits, q, 1.0 - q), axis=1)
        bf = bits.astype(float)

        log_dest = tabs.dest_base[:n] + bf @ tabs.dest_pair[:n, :n].T
        log_relay = tabs.relay_base + bf @ tabs.relay_pair.T
        log_relay_to_dest = tabs.dest_base[n] + bf @ tabs.dest_pair[n, :n]
        dep = np.exp(log_relay_to_dest)
        A += w @ dep

        for r in (0, 1):
            pd = np.exp(log_dest + r * tabs.dest_pair[:n, n])
            pc = np.exp(log_relay + r * tabs.relay_si)
            s = bf * (1.0 - pd) * pc
            arr = p_rx * _poisson_binomial(s)
            arr[:, 0] += 1.0 - p_rx
            arrivals[r] += w @ arr
            direct[r] += w @ (bf * pd)
            admit[r] += p_rx * (w @ s)
            if r == 1:
                g = np.zeros((len(w), n + 2))
                g[:, 1:] += (1.0 - dep)[:, None] * arr
                g[:, :-1] += dep[:, None] * arr
                growth_tx += w @ g

    return ConditionalComponents(float(A), arrivals, growth_tx, direct, admit)


def enumerate_slot(scenario: Scenario, queue_state: str) -> tuple[np.ndarray, np.ndarray]:
    """Exact (growth, arrivals) pmfs for an ``"empty"`` or ``"nonempty"`` relay queue.

    ``growth[k + 1]`` is the probability of a net change of k (k = -1..n);
    ``arrivals[k]`` the probability of k relay arrivals.
    """
    comp = conditional_components(scenario)
    dist = comp.slot_distribution(scenario.access.q0, scenario.access.p_tx)
    if queue_state == "empty":
        return np.concatenate(([0.0], dist.p0)), dist.r0
    if queue_state == "nonempty":
        return dist.p1, dist.r1
    raise ContractViolation(f"queue_state must be 'empty' or 'nonempty', got {queue_state!r}")


def slot_distribution(scenario: Scenario) -> SlotDistribution:
    comp = conditional_components(scenario)
    return comp.slot_distribution(scenario.access.q0, scenario.access.p_tx)


@dataclass(frozen=True)
class StationaryResult:
    pi: np.ndarray
    p_empty: float
    mean: float
    tail_mass: float
    drift: float


def markov_stationary(dist: SlotDistribution, truncation: int = 10_000) -> StationaryResult:
    """Stationary law of the relay queue truncated to states 0..N.

    The chain only moves down one step at a time, so balancing probability
    flow across each cut {0..x} | {x+1..} gives a forward recursion with
    non-negative terms:

        pi[x+1] * b0 = pi[0] * P(jump from 0 exceeds x)
                       + sum_{1<=y<=x} pi[y] * P(growth from y exceeds x - y)
    """
    if truncation < 1:
        raise ContractViolation("truncation must be positive")
    a = np.asarray(dist.p0, dtype=float)
    b0 = dist.p1_at(-1)
    up = np.asarray(dist.p1[2:], dtype=float)          # growth 1..n from nonempty
    n = max(len(a) - 1, len(up))
    drift = float(np.dot(np.arange(1, len(up) + 1), up) - b0)
    if drift >= 0 and (a[1:].sum() > 0):
        warnings.warn(f"relay queue is not stable (mean drift {drift:.3g} >= 0); "
                      "truncated solution does not converge", DivergenceWarning, stacklevel=2)

    N = truncation
    pi = np.zeros(N + 1)
    pi[0] = 1.0
    if a[1:].sum() == 0:
        return StationaryResult(pi, 1.0, 0.0, 0.0, drift)
    if b0 <= 0:
        pi[:] = 0.0
        pi[N] = 1.0
        return StationaryResult(pi, 0.0, float(N), 1.0, drift)

    # tails: P(jump from 0 > m), P(growth from nonempty > m), m = 0..n-1
    a_tail = np.array([a[m + 1:].sum() for m in range(n)])
    g_tail = np.array([up[m:].sum() for m in range(n)])
    g_rev = g_tail[::-1]
    for x in range(N):
        acc = pi[0] * a_tail[x] if x < n else 0.0
        lo = max(1, x - n + 1)
        if lo <= x:
            acc += np.dot(pi[lo:x + 1], g_rev[n - (x + 1 - lo):])
        pi[x + 1] = acc / b0
        if pi[x + 1] > 1e250:
            pi /= pi[x + 1]
    total = pi.sum()
    pi /= total
    tail = 0.0
    # below the normal range the ratio of neighbours is rounding noise
    if pi[N] > np.finfo(float).tiny and pi[N - 1] > 0:
        rho = pi[N] / pi[N - 1]
        tail = math.inf if rho >= 1 else float(pi[N] * rho / (1 - rho))
    if tail > 1e-9:
        warnings.warn(f"truncation at N={N} leaves estimated tail mass {tail:.3g}",
                      DivergenceWarning, stacklevel=2)
    mean = float(np.dot(np.arange(N + 1), pi))
    return StationaryResult(pi, float(pi[0]), mean, tail, drift)


def transition_matrix(dist: SlotDistribution, truncation: int) -> np.ndarray:
    """Dense row-stochastic matrix of the chain on 0..N; jumps past N land on N."""
    N = truncation
    P = np.zeros((N + 1, N + 1))
    for k, pk in enumerate(dist.p0):
        P[0, min(k, N)] += pk
    for x in range(1, N + 1):
        for idx, pk in enumerate(dist.p1):
            P[x, min(x + idx - 1, N)] += pk
    return P


def gth_solve(P: np.ndarray) -> np.ndarray:
    """Grassmann-Taksar-Heyman elimination for the stationary vector of P."""
    A = np.array(P, dtype=float)
    m = A.shape[0]
    for k in range(m - 1, 0, -1):
        s = A[k, :k].sum()
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    pi = np.zeros(m)
    pi[0] = 1.0
    for k in range(1, m):
        pi[k] = pi[:k] @ A[:k, k]
    return pi / pi.sum()
