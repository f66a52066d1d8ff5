"""Slot-by-slot Monte Carlo simulation of users, relay queue and destination.

Each slot: users transmit with probability q_i; a nonempty relay transmits
when both its transmitter gate (P_tx) and attempt (q0) fire; the receiver gate
(P_rx) is drawn once per slot. Every link succeeds independently, either by
drawing against the closed-form success probability (default) or, in
``sinr_mode``, by sampling exponential fading and thresholding the SINR.
Packets that miss d and are decoded by an active relay receiver join a FIFO
queue; a successful relay transmission delivers the head packet.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numba
import numpy as np

from .errors import ContractViolation
from .parallel import thread_cap
from .phy import link_tables, path_gain
from .queue import queue_metrics
from .scenario import DEST, RELAY, Scenario
from .throughput import throughput


class Estimate(NamedTuple):
    value: float
    se: float


@numba.njit(cache=True)
def _kernel(q, q0, p_tx, p_rx, slots, warmup, seed, nbatch, sinr_mode,
            dest_base, dest_pair, relay_base, relay_pair, relay_si,
            g_dest, g_relay, si_gain, noise_dest, noise_relay, gamma_dest, gamma_relay):
    np.random.seed(seed)
    n = q.shape[0]
    total = warmup + slots
    # per-batch accumulators
    bslots = np.zeros(nbatch)
    empty = np.zeros(nbatch)
    qsum = np.zeros(nbatch)
    nonempty = np.zeros(nbatch)
    arrivals = np.zeros(nbatch)
    departures = np.zeros(nbatch)
    attempts = np.zeros(nbatch)
    direct = np.zeros((nbatch, n))
    admitted = np.zeros((nbatch, n))
    relayed = np.zeros((nbatch, n))
    qmark = np.zeros(nbatch + 1)

    cap = 1024
    buf = np.empty(cap, dtype=np.int32)
    head = 0
    size = 0
    enq = 0
    deq = 0
    max_drop = 0
    idx = np.empty(n, dtype=np.int64)

    for s in range(total):
        t = s - warmup
        b = -1
        if t >= 0:
            b = (t * nbatch) // slots
            if t == (b * slots + nbatch - 1) // nbatch:
                qmark[b] = size
        qstart = size

        m = 0
        for i in range(n):
            if np.random.random() < q[i]:
                idx[m] = i
                m += 1
        gate = np.random.random() < p_tx
        att = np.random.random() < q0
        relay_on = size > 0 and gate and att
        rx_on = np.random.random() < p_rx

        a = 0
        for u in range(m):
            i = idx[u]
            if sinr_mode:
                sig = g_dest[i] * np.random.exponential(1.0)
                intf = 0.0
                for w in range(m):
                    if w != u:
                        intf += g_dest[idx[w]] * np.random.exponential(1.0)
                if relay_on:
                    intf += g_dest[n] * np.random.exponential(1.0)
                ok = sig >= gamma_dest * (noise_dest + intf)
            else:
                lp = dest_base[i]
                for w in range(m):
                    lp += dest_pair[i, idx[w]]
                if relay_on:
                    lp += dest_pair[i, n]
                ok = np.random.random() < math.exp(lp)
            if ok:
                if b >= 0:
                    direct[b, i] += 1
                continue
            if not rx_on:
                continue
            if sinr_mode:
                sig = g_relay[i] * np.random.exponential(1.0)
                intf = 0.0
                for w in range(m):
                    if w != u:
                        intf += g_relay[idx[w]] * np.random.exponential(1.0)
                if relay_on:
                    intf += si_gain[i] * np.random.exponential(1.0)
                cap_ok = sig >= gamma_relay * (noise_relay + intf)
            else:
                lp = relay_base[i]
                for w in range(m):
                    lp += relay_pair[i, idx[w]]
                if relay_on:
                    lp += relay_si[i]
                cap_ok = np.random.random() < math.exp(lp)
            if cap_ok:
                a += 1
                if b >= 0:
                    admitted[b, i] += 1
                if size == cap:
                    nb = np.empty(2 * cap, dtype=np.int32)
                    for k in range(size):
                        nb[k] = buf[(head + k) % cap]
                    buf = nb
                    head = 0
                    cap = 2 * cap
                buf[(head + size) % cap] = i
                size += 1
                enq += 1

        d = 0
        if relay_on:
            if sinr_mode:
                sig = g_dest[n] * np.random.exponential(1.0)
                intf = 0.0
                for w in range(m):
                    intf += g_dest[idx[w]] * np.random.exponential(1.0)
                ok = sig >= gamma_dest * (noise_dest + intf)
            else:
                lp = dest_base[n]
                for w in range(m):
                    lp += dest_pair[n, idx[w]]
                ok = np.random.random() < math.exp(lp)
            if ok:
                owner = buf[head]
                head = (head + 1) % cap
                size -= 1
                deq += 1
                d = 1
                if b >= 0:
                    relayed[b, owner] += 1

        if qstart - size > max_drop:
            max_drop = qstart - size
        if b >= 0:
            bslots[b] += 1
            empty[b] += qstart == 0
            nonempty[b] += qstart > 0
            qsum[b] += qstart
            arrivals[b] += a
            departures[b] += d
            attempts[b] += relay_on
    qmark[nbatch] = size
    return (bslots, empty, qsum, nonempty, arrivals, departures, attempts,
            direct, admitted, relayed, qmark, enq, deq, size, max_drop)


@dataclass(frozen=True)
class SimStats:
    slots: int
    warmup: int
    seed: int
    batches: int
    lam: Estimate
    mu: Estimate
    mu_attempt: Estimate
    p_empty: Estimate
    q_bar: Estimate
    t_direct: tuple[Estimate, ...]
    t_relay: tuple[Estimate, ...]
    t_user: tuple[Estimate, ...]
    t_net: Estimate
    t_mean_user: Estimate
    growth: Estimate
    enqueued: int
    dequeued: int
    final_queue: int
    max_drop: int
    batch_queue: np.ndarray = field(repr=False)
    sinr_mode: bool = False


def _mean_se(values, weights):
    """Batch-means estimate of a per-slot average."""
    per = values / weights
    total = values.sum() / weights.sum()
    B = len(per)
    return Estimate(float(total), float(np.std(per, ddof=1) / math.sqrt(B)))


def _ratio_se(num, den):
    """Ratio of batch totals with a delta-method standard error."""
    if den.sum() == 0:
        return Estimate(math.nan, math.nan)
    R = num.sum() / den.sum()
    B = len(num)
    resid = num - R * den
    se = math.sqrt((resid ** 2).sum() / (B * (B - 1))) / den.mean()
    return Estimate(float(R), float(se))


def _derive_seed(seed: int) -> int:
    return int(np.random.SeedSequence(seed).generate_state(1)[0] & 0x7FFFFFFF)


def _kernel_inputs(scenario: Scenario):
    tabs = link_tables(scenario)
    topo, phy = scenario.topology, scenario.phy
    users = list(topo.users)
    g_dest = np.array([phy.v(i, DEST) * path_gain(i, DEST, topo, phy) for i in users]
                      + [phy.v(RELAY, DEST) * path_gain(RELAY, DEST, topo, phy)])
    g_relay = np.array([phy.v(i, RELAY) * path_gain(i, RELAY, topo, phy) for i in users])
    # self-interference power whose exponential-fading penalty is (1 + gamma r^alpha g)^-1
    si_gain = np.array([phy.g * topo.distance(i, RELAY) ** phy.alpha * g_relay[k]
                        for k, i in enumerate(users)])
    return (tabs.dest_base, tabs.dest_pair, tabs.relay_base, tabs.relay_pair, tabs.relay_si,
            g_dest, g_relay, si_gain, phy.noise_dest, phy.noise_relay,
            phy.gamma_dest, phy.gamma_relay)


def run(scenario: Scenario, slots: int, seed: int = 0, warmup: int = 10_000,
        batches: int = 100, sinr_mode: bool = False) -> SimStats:
    if slots <= 0:
        raise ContractViolation("slots must be positive")
    if batches < 2 or batches > slots:
        raise ContractViolation("need 2 <= batches <= slots")
    acc = scenario.access
    out = _kernel(np.asarray(acc.q, dtype=float), acc.q0, acc.p_tx, acc.p_rx,
                  int(slots), int(warmup), _derive_seed(seed), int(batches), bool(sinr_mode),
                  *_kernel_inputs(scenario))
    (bslots, empty, qsum, nonempty, arrivals, departures, attempts,
     direct, admitted, relayed, qmark, enq, deq, size, max_drop) = out

    n = scenario.n
    t_d = tuple(_mean_se(direct[:, i], bslots) for i in range(n))
    t_r = tuple(_mean_se(relayed[:, i], bslots) for i in range(n))
    t_u = tuple(_mean_se(direct[:, i] + relayed[:, i], bslots) for i in range(n))
    delivered = direct.sum(axis=1) + relayed.sum(axis=1)
    t_net = _mean_se(delivered, bslots)
    inc = np.diff(qmark)
    growth = Estimate(float(inc.sum() / slots),
                      float(np.std(inc / bslots, ddof=1) / math.sqrt(batches)))
    return SimStats(
        slots=int(slots), warmup=int(warmup), seed=seed, batches=batches,
        lam=_mean_se(arrivals, bslots),
        mu=_ratio_se(departures, nonempty),
        mu_attempt=_ratio_se(departures, attempts),
        p_empty=_mean_se(empty, bslots),
        q_bar=_mean_se(qsum, bslots),
        t_direct=t_d, t_relay=t_r, t_user=t_u, t_net=t_net,
        t_mean_user=Estimate(t_net.value / n, t_net.se / n),
        growth=growth, enqueued=int(enq), dequeued=int(deq), final_queue=int(size),
        max_drop=int(max_drop), batch_queue=qmark, sinr_mode=bool(sinr_mode))


def replicate(scenario: Scenario, slots: int, seed: int, replications: int, **kw) -> list[SimStats]:
    """Independent runs with child seeds spawned from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(replications)
    seeds = [int(c.generate_state(1)[0]) for c in children]
    workers = min(thread_cap(), replications)
    if workers <= 1:
        return [run(scenario, slots, s, **kw) for s in seeds]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futs = [ex.submit(run, scenario, slots, s, **kw) for s in seeds]
        return [f.result() for f in futs]


@dataclass(frozen=True)
class ValidationRow:
    metric: str
    analytic: float
    empirical: float
    se: float

    @property
    def z(self) -> float:
        diff = self.empirical - self.analytic
        if self.se > 0:
            return diff / self.se
        return 0.0 if abs(diff) < 1e-12 else math.copysign(math.inf, diff)

    @property
    def flagged(self) -> bool:
        return abs(self.z) > 3


@dataclass(frozen=True)
class ValidationReport:
    rows: tuple[ValidationRow, ...]
    stats: SimStats = field(repr=False)

    @property
    def flagged(self) -> list[ValidationRow]:
        return [r for r in self.rows if r.flagged]

    @property
    def ok(self) -> bool:
        return not self.flagged

    def table(self) -> str:
        lines = [f"{'metric':<10} {'analytic':>12} {'empirical':>12} {'se':>10} {'z':>7}"]
        for r in self.rows:
            mark = "  <-- |z|>3" if r.flagged else ""
            lines.append(f"{r.metric:<10} {r.analytic:>12.6g} {r.empirical:>12.6g} "
                         f"{r.se:>10.3g} {r.z:>7.2f}{mark}")
        return "\n".join(lines)


def compare(scenario: Scenario, stats: SimStats, queue=None, report=None) -> ValidationReport:
    """Analytic vs empirical table for lambda, mu, P(Q=0), Q_bar, T and T_net."""
    q = queue if queue is not None else queue_metrics(scenario)
    tp = report if report is not None else throughput(scenario, q)
    rows = [ValidationRow("lambda", q.lam, *stats.lam),
            ValidationRow("p_empty", q.p_empty, *stats.p_empty),
            ValidationRow("q_bar", q.q_bar, *stats.q_bar)]
    if not math.isnan(stats.mu.value):
        rows.insert(1, ValidationRow("mu", q.mu, *stats.mu))
    if scenario.is_symmetric():
        rows.append(ValidationRow("T", tp.mean_user, *stats.t_mean_user))
    else:
        rows += [ValidationRow(f"T_{i + 1}", tp.t_user[i], *stats.t_user[i])
                 for i in range(scenario.n)]
    rows.append(ValidationRow("T_net", tp.t_net, *stats.t_net))
    return ValidationReport(tuple(rows), stats)


def validate(scenario: Scenario, slots: int = 1_000_000, seed: int = 0, **kw) -> ValidationReport:
    q = queue_metrics(scenario)
    if not q.stable:
        from .errors import InstabilityError
        raise InstabilityError(
            f"validation needs a stable queue: lambda1={q.lambda1:.6g} >= mu={q.mu:.6g}",
            gap=-q.margin)
    return compare(scenario, run(scenario, slots, seed, **kw), q)


def sinr_link_check(scenario: Scenario, i: int, j: int, transmitters, samples: int = 200_000,
                    seed: int = 0) -> Estimate:
    """Empirical success frequency of link (i, j) from raw exponential fading draws."""
    topo, phy = scenario.topology, scenario.phy
    T = set(transmitters)
    if i not in T:
        raise ContractViolation("transmitter must be active")
    rng = np.random.default_rng(seed)
    sig = phy.v(i, j) * path_gain(i, j, topo, phy) * rng.exponential(size=samples)
    intf = np.zeros(samples)
    for k in T:
        if k not in (i, j):
            intf += phy.v(k, j) * path_gain(k, j, topo, phy) * rng.exponential(size=samples)
    if j in T:
        si_mean = phy.g * topo.distance(i, j) ** phy.alpha * phy.v(i, j) * path_gain(i, j, topo, phy)
        intf += si_mean * rng.exponential(size=samples)
    ok = sig >= phy.gamma_at(j) * (phy.noise_at(j) + intf)
    p = ok.mean()
    # floor the variance at one count so that all-fail or all-succeed samples keep a usable SE
    var = max(p * (1 - p), 1.0 / samples)
    return Estimate(float(p), float(math.sqrt(var / samples)))
