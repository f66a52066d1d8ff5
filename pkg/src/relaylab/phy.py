"""Rayleigh-fading SINR-threshold link model with full-duplex self-interference."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import ContractViolation, InvalidTopologyError
from .scenario import DEST, RELAY, PhyConfig, Scenario, Topology


def path_gain(i: int, j: int, topo: Topology, phy: PhyConfig) -> float:
    """Received power factor h(i,j) = P_tx(i) * r(i,j)**(-alpha)."""
    if i == j:
        raise ContractViolation("path gain needs two distinct nodes")
    r = topo.distance(i, j)
    if r <= 0:
        raise InvalidTopologyError(f"non-positive distance r({i},{j})={r}")
    return phy.power(i) * r ** (-phy.alpha)


def noise_factor(i, j, topo, phy) -> float:
    """exp(-gamma_j eta_j / (v h)): success probability of an isolated link."""
    sig = phy.v(i, j) * path_gain(i, j, topo, phy)
    return math.exp(-phy.gamma_at(j) * phy.noise_at(j) / sig)


def interference_factor(k, i, j, topo, phy) -> float:
    """Penalty on link (i, j) from a concurrent transmitter k."""
    ratio = phy.v(k, j) * path_gain(k, j, topo, phy) / (phy.v(i, j) * path_gain(i, j, topo, phy))
    return 1.0 / (1.0 + phy.gamma_at(j) * ratio)


def self_interference_factor(i, j, topo, phy) -> float:
    """(1 + gamma_j r(i,j)^alpha g)^-1, applied when receiver j is also transmitting."""
    return 1.0 / (1.0 + phy.gamma_at(j) * topo.distance(i, j) ** phy.alpha * phy.g)


def success_probability(i: int, j: int, transmitters: Iterable[int],
                        topo: Topology, phy: PhyConfig) -> float:
    """Probability that a packet from ``i`` is decoded at ``j`` when the set
    ``transmitters`` (which must contain ``i``) is active in the slot."""
    T = set(transmitters)
    if i not in T:
        raise ContractViolation(f"transmitter {i} not in transmit set {sorted(T)}")
    if i == j:
        raise ContractViolation("a node cannot receive its own packet")
    p = noise_factor(i, j, topo, phy)
    if j in T:
        p *= self_interference_factor(i, j, topo, phy)
    for k in T:
        if k != i and k != j:
            p *= interference_factor(k, i, j, topo, phy)
    return p


@dataclass(frozen=True)
class SymmetricLabels:
    """Success probabilities indexed by the number k of transmitting users.

    ``p0d[k]``: relay -> d with k users active.
    ``pd[k, j]``: tagged user -> d, k users active in total, relay active iff j == 1.
    ``p0[k, j]``: tagged user -> relay, same convention (self-interference when j == 1).
    Row ``k = 0`` of ``pd``/``p0`` is undefined and holds NaN.
    """

    n: int
    p0d: np.ndarray
    pd: np.ndarray
    p0: np.ndarray


class SuccessTable:
    """Labelled success probabilities for one scenario.

    ``dest(i, T)`` / ``relay(i, T)`` give the general (asymmetric) labels;
    ``symmetric`` holds the k-indexed tables when users are interchangeable.
    """

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._topo, self._phy = scenario.topology, scenario.phy
        self.symmetric = _symmetric_labels(scenario) if scenario.is_symmetric() else None

    @lru_cache(maxsize=None)
    def _p(self, i, j, T: frozenset) -> float:
        return success_probability(i, j, T, self._topo, self._phy)

    def dest(self, i: int, T) -> float:
        return self._p(i, DEST, frozenset(T))

    def relay(self, i: int, T) -> float:
        return self._p(i, RELAY, frozenset(T))


def labeled_success_probs(scenario: Scenario) -> SuccessTable:
    return SuccessTable(scenario)


def symmetric_labels(scenario: Scenario) -> SymmetricLabels:
    if not scenario.is_symmetric():
        raise ContractViolation("symmetric labels need interchangeable users")
    return _symmetric_labels(scenario)


def _symmetric_labels(scenario: Scenario) -> SymmetricLabels:
    n, topo, phy = scenario.n, scenario.topology, scenario.phy
    p0d = np.empty(n + 1)
    pd = np.full((n + 1, 2), np.nan)
    p0 = np.full((n + 1, 2), np.nan)
    for k in range(n + 1):
        users = set(range(1, k + 1))
        p0d[k] = success_probability(RELAY, DEST, users | {RELAY}, topo, phy)
        if k == 0:
            continue
        for j in (0, 1):
            T = users | ({RELAY} if j else set())
            pd[k, j] = success_probability(1, DEST, T, topo, phy)
            p0[k, j] = success_probability(1, RELAY, T, topo, phy)
    return SymmetricLabels(n, p0d, pd, p0)


@dataclass(frozen=True)
class LinkTables:
    """Log-domain factors of the success model, for vectorised evaluation.

    Index ``0..n-1`` are users 1..n and index ``n`` is the relay.
    ``log_success(i, T)`` at receiver d is ``dest_base[i] + sum(dest_pair[i, k] for k in T)``;
    at the relay it is ``relay_base[i] + sum(relay_pair[i, k]) + relay_si[i]`` when the relay
    transmits.
    """

    dest_base: np.ndarray     # (n+1,)
    dest_pair: np.ndarray     # (n+1, n+1), zero diagonal
    relay_base: np.ndarray    # (n,)
    relay_pair: np.ndarray    # (n, n), zero diagonal
    relay_si: np.ndarray      # (n,)


def _log(x):
    return math.log(x) if x > 0 else -math.inf


def link_tables(scenario: Scenario) -> LinkTables:
    n, topo, phy = scenario.n, scenario.topology, scenario.phy
    nodes = [*range(1, n + 1), RELAY]
    dest_base = np.array([_log(noise_factor(i, DEST, topo, phy)) for i in nodes])
    dest_pair = np.zeros((n + 1, n + 1))
    for a, i in enumerate(nodes):
        for b, k in enumerate(nodes):
            if a != b:
                dest_pair[a, b] = _log(interference_factor(k, i, DEST, topo, phy))
    users = nodes[:-1]
    relay_base = np.array([_log(noise_factor(i, RELAY, topo, phy)) for i in users])
    relay_pair = np.zeros((n, n))
    for a, i in enumerate(users):
        for b, k in enumerate(users):
            if a != b:
                relay_pair[a, b] = _log(interference_factor(k, i, RELAY, topo, phy))
    relay_si = np.array([_log(self_interference_factor(i, RELAY, topo, phy)) for i in users])
    return LinkTables(dest_base, dest_pair, relay_base, relay_pair, relay_si)
