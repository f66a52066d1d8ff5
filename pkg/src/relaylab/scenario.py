"""Scenario records: topology, physical layer and access parameters.

Node numbering: the relay is node 0, users are 1..n and the destination
is ``DEST`` (-1).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import ContractViolation, InvalidTopologyError, MissingLinkError

RELAY = 0
DEST = -1


def _key(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i <= j else (j, i)


@dataclass(frozen=True)
class Topology:
    """Pairwise distances (meters) between users, relay and destination."""

    n: int
    distances: Mapping[tuple[int, int], float]

    def __post_init__(self):
        if self.n < 1:
            raise InvalidTopologyError(f"need at least one user, got n={self.n}")
        norm = {}
        for (i, j), r in dict(self.distances).items():
            if i == j:
                raise InvalidTopologyError(f"self-distance for node {i}")
            if not (r > 0 and math.isfinite(r)):
                raise InvalidTopologyError(f"distance r({i},{j})={r} must be positive")
            k = _key(i, j)
            if k in norm and norm[k] != r:
                raise InvalidTopologyError(f"asymmetric distance for pair {k}")
            norm[k] = float(r)
        object.__setattr__(self, "distances", norm)

    @classmethod
    def build(cls, n, user_relay, user_dest, relay_dest=80.0):
        """Star topology; ``user_relay``/``user_dest`` are scalars or per-user lists."""
        ur = _per_user(user_relay, n, "user_relay")
        ud = _per_user(user_dest, n, "user_dest")
        d = {(RELAY, DEST): relay_dest}
        for i in range(1, n + 1):
            d[(i, RELAY)] = ur[i - 1]
            d[(i, DEST)] = ud[i - 1]
        return cls(n, d)

    @property
    def users(self) -> range:
        return range(1, self.n + 1)

    def distance(self, i: int, j: int) -> float:
        try:
            return self.distances[_key(i, j)]
        except KeyError:
            raise MissingLinkError(f"no distance stored for link ({i},{j})") from None

    def user_relay(self) -> tuple[float, ...]:
        return tuple(self.distance(i, RELAY) for i in self.users)

    def user_dest(self) -> tuple[float, ...]:
        return tuple(self.distance(i, DEST) for i in self.users)


@dataclass(frozen=True)
class PhyConfig:
    gamma_dest: float = 0.2
    gamma_relay: float = 0.2
    alpha: float = 4.0
    g: float = 0.0
    user_power: float | tuple[float, ...] = 1e-3
    relay_power: float = 1e-2
    noise_dest: float = 1e-11
    noise_relay: float = 1e-11
    # Rayleigh parameter v(i,j); links not listed use 1.
    fading: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.g <= 1.0:
            raise ContractViolation(f"self-interference coefficient g={self.g} outside [0,1]")
        if not 2.0 <= self.alpha <= 7.0:
            raise ContractViolation(f"path-loss exponent alpha={self.alpha} outside [2,7]")
        for name in ("gamma_dest", "gamma_relay"):
            if not getattr(self, name) >= 0:
                raise ContractViolation(f"{name} must be >= 0")
        if isinstance(self.user_power, (int, float)):
            powers = (self.user_power,)
        else:
            powers = tuple(float(x) for x in self.user_power)
            object.__setattr__(self, "user_power", powers)
        for p in (*powers, self.relay_power, self.noise_dest, self.noise_relay):
            if not p > 0:
                raise ContractViolation("powers and noise must be strictly positive")
        fad = {}
        for (i, j), v in dict(self.fading).items():
            if not v > 0:
                raise ContractViolation(f"fading parameter v({i},{j}) must be positive")
            fad[(i, j)] = float(v)
        object.__setattr__(self, "fading", fad)

    @classmethod
    def uniform_gamma(cls, gamma: float, **kw) -> "PhyConfig":
        return cls(gamma_dest=gamma, gamma_relay=gamma, **kw)

    def power(self, i: int) -> float:
        if i == RELAY:
            return self.relay_power
        if isinstance(self.user_power, tuple):
            return self.user_power[i - 1]
        return self.user_power

    def gamma_at(self, j: int) -> float:
        if j == DEST:
            return self.gamma_dest
        if j == RELAY:
            return self.gamma_relay
        raise ContractViolation(f"node {j} is not a receiver")

    def noise_at(self, j: int) -> float:
        if j == DEST:
            return self.noise_dest
        if j == RELAY:
            return self.noise_relay
        raise ContractViolation(f"node {j} is not a receiver")

    def v(self, i: int, j: int) -> float:
        return self.fading.get((i, j), 1.0)


@dataclass(frozen=True)
class AccessConfig:
    q: tuple[float, ...]
    q0: float = 0.95
    p_rx: float = 1.0
    p_tx: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(x) for x in self.q))
        for name, val in (("q0", self.q0), ("p_rx", self.p_rx), ("p_tx", self.p_tx)):
            if not 0.0 <= val <= 1.0:
                raise ContractViolation(f"{name}={val} outside [0,1]")
        if not self.q:
            raise ContractViolation("at least one user access probability is required")
        if any(not 0.0 <= x <= 1.0 for x in self.q):
            raise ContractViolation(f"user access probabilities {self.q} outside [0,1]")

    @property
    def n(self) -> int:
        return len(self.q)


@dataclass(frozen=True)
class Scenario:
    topology: Topology
    phy: PhyConfig
    access: AccessConfig

    def __post_init__(self):
        if self.topology.n != self.access.n:
            raise ContractViolation(
                f"topology has {self.topology.n} users but access config has {self.access.n}")
        if isinstance(self.phy.user_power, tuple) and len(self.phy.user_power) != self.n:
            raise ContractViolation("per-user power list length differs from n")
        # every link used by the model must be present
        self.topology.distance(RELAY, DEST)
        for i in self.topology.users:
            self.topology.distance(i, RELAY)
            self.topology.distance(i, DEST)

    @property
    def n(self) -> int:
        return self.topology.n

    def with_access(self, **kw) -> "Scenario":
        return dataclasses.replace(self, access=dataclasses.replace(self.access, **kw))

    def with_phy(self, **kw) -> "Scenario":
        return dataclasses.replace(self, phy=dataclasses.replace(self.phy, **kw))

    def is_symmetric(self) -> bool:
        """True when every user is interchangeable (same distances, power, q, fading)."""
        t, p, a = self.topology, self.phy, self.access
        if len(set(t.user_relay())) > 1 or len(set(t.user_dest())) > 1:
            return False
        if len(set(a.q)) > 1:
            return False
        if isinstance(p.user_power, tuple) and len(set(p.user_power)) > 1:
            return False
        if p.fading:
            users = set(t.users)
            for j in (RELAY, DEST):
                if len({p.v(i, j) for i in users}) > 1:
                    return False
        return True


def _per_user(value, n, name) -> list[float]:
    if isinstance(value, (int, float)):
        return [float(value)] * n
    vals = [float(x) for x in value]
    if len(vals) != n:
        raise ContractViolation(f"{name} has {len(vals)} entries, expected {n}")
    return vals


def table_one(n: int = 5, gamma: float = 0.2, g: float = 1e-10, q: float | Sequence[float] = 0.1,
              q0: float = 0.95, p_rx: float = 1.0, p_tx: float = 1.0,
              user_relay=60.0, user_dest=130.0, relay_dest=80.0) -> Scenario:
    """Default scenario: r(0,d)=80 m, r(i,0)=60 m, r(i,d)=130 m, alpha=4,
    1 mW users, 10 mW relay, q=0.1, noise 1e-11 W."""
    topo = Topology.build(n, user_relay, user_dest, relay_dest)
    phy = PhyConfig.uniform_gamma(gamma, alpha=4.0, g=g, user_power=1e-3, relay_power=1e-2,
                                  noise_dest=1e-11, noise_relay=1e-11)
    access = AccessConfig(tuple(_per_user(q, n, "q")), q0=q0, p_rx=p_rx, p_tx=p_tx)
    return Scenario(topo, phy, access)
