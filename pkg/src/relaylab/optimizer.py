"""Choose the relay activation probabilities (P_rx, P_tx) that maximise
network throughput while keeping the relay queue stable.

The objective is not concave, so we search a uniform grid over the unit box
and polish the best feasible cell with coordinate-wise golden-section search.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .errors import ContractViolation
from .queue import binomial_weights, queue_metrics, symmetric_user_rates
from .phy import symmetric_labels
from .scenario import Scenario
from .throughput import throughput

STABILITY_MARGIN = 1e-9
TIE_TOL = 1e-9
_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class RateModel:
    """Slot-level rates that do not depend on (P_rx, P_tx).

    ``d0``/``d1``: per-user direct deliveries with the relay silent / transmitting;
    ``c0``/``c1``: per-user relay captures with the receiver on;
    ``A``: relay -> d success averaged over user transmit sets.
    """

    q0: float
    A: float
    d0: np.ndarray
    d1: np.ndarray
    c0: np.ndarray
    c1: np.ndarray

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> "RateModel":
        acc = scenario.access
        if scenario.is_symmetric():
            d0, d1, c0, c1 = symmetric_user_rates(scenario)
            n = scenario.n
            A = float(binomial_weights(n, acc.q[0]) @ symmetric_labels(scenario).p0d)
            full = lambda v: np.full(n, v)
            return cls(acc.q0, A, full(d0), full(d1), full(c0), full(c1))
        comp = oracle.conditional_components(scenario.with_access(p_rx=1.0))
        return cls(acc.q0, comp.A, comp.direct[0], comp.direct[1], comp.admit[0], comp.admit[1])

    def evaluate(self, p_rx, p_tx) -> dict:
        """Vectorised queue and throughput quantities at (p_rx, p_tx)."""
        p_rx = np.asarray(p_rx, dtype=float)
        p_tx = np.asarray(p_tx, dtype=float)
        x = self.q0 * p_tx
        C0, C1 = self.c0.sum(), self.c1.sum()
        D0, D1 = self.d0.sum(), self.d1.sum()
        lam0 = p_rx * C0
        lam1 = p_rx * ((1 - x) * C0 + x * C1)
        mu = x * self.A
        gap = mu - lam1
        feasible = (gap >= STABILITY_MARGIN) | (lam1 == 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            p_empty = np.where(lam0 == 0, 1.0, gap / (gap + lam0))
        p_empty = np.where(feasible, p_empty, 0.0)
        y = x * (1 - p_empty)
        t_net = D0 + y * (D1 - D0) + p_rx * (C0 + y * (C1 - C0))
        lam = p_empty * lam0 + (1 - p_empty) * lam1
        return dict(lambda0=lam0, lambda1=lam1, lam=lam, mu=mu, gap=gap,
                    feasible=feasible, p_empty=p_empty, t_net=t_net)

    def max_feasible_rx(self, p_tx: float) -> float:
        """Largest P_rx with gap >= STABILITY_MARGIN at this P_tx (inf if unconstrained)."""
        x = self.q0 * p_tx
        load = (1 - x) * self.c0.sum() + x * self.c1.sum()
        if load <= 0:
            return math.inf
        return (x * self.A - STABILITY_MARGIN) / load

    def objective(self, p_rx: float, p_tx: float) -> float:
        ev = self.evaluate(p_rx, p_tx)
        return float(ev["t_net"]) if bool(ev["feasible"]) else -math.inf


@dataclass(frozen=True)
class OptimizationResult:
    p_rx_opt: float
    p_tx_opt: float
    t_net_opt: float
    feasible: bool
    energy_proxy: float
    margin: float
    trace: dict = field(default_factory=dict)


def _pick(points):
    """Best (obj, p_rx, p_tx): highest objective; ties within TIE_TOL go to the
    lowest P_rx + P_tx, then the lowest P_rx."""
    top = max(p[0] for p in points)
    tied = [p for p in points if p[0] >= top - TIE_TOL]
    return min(tied, key=lambda p: (p[1] + p[2], p[1]))


def _golden(f, lo, hi, tol=1e-10, max_iter=200):
    a, b = lo, hi
    c, d = b - _GOLDEN * (b - a), a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    evals, it = 2, 0
    while b - a > tol and it < max_iter:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
        evals += 1
        it += 1
    cand = [(fc, c), (fd, d), (f(a), a), (f(b), b)]
    best = max(cand, key=lambda t: t[0])
    return best[1], best[0], evals + 2


def _feasible_interval(f, x0, lo, hi, iters=60):
    """Shrink [lo, hi] to the feasible sub-interval around feasible x0.

    The stability gap is linear in either probability with the other held
    fixed, so the feasible set along a coordinate is an interval whose ends
    bisection locates.
    """
    ends = []
    for end in (lo, hi):
        if math.isfinite(f(end)):
            ends.append(end)
            continue
        good, bad = x0, end
        for _ in range(iters):
            mid = 0.5 * (good + bad)
            if math.isfinite(f(mid)):
                good = mid
            else:
                bad = mid
        ends.append(good)
    return ends[0], ends[1]


def _line_search(f, x0, lo, hi):
    lo, hi = _feasible_interval(f, x0, lo, hi)
    return _golden(f, lo, hi)


def _boundary_points(model, rx_bounds, tx_bounds, resolution):
    """Feasible points on the stability boundary P_rx = max_feasible_rx(P_tx),
    polished by golden-section search over P_tx. Coordinate-wise search
    creeps slowly along this ridge, where the optimum usually lies."""
    def on_boundary(t):
        r = min(rx_bounds[1], model.max_feasible_rx(t))
        # shave rounding so the point stays on the feasible side
        r = r * (1 - 1e-12) if r > 0 else r
        return r if r >= rx_bounds[0] else math.nan

    def f(t):
        r = on_boundary(t)
        return -math.inf if math.isnan(r) else model.objective(r, t)

    ts = np.linspace(*tx_bounds, 4 * resolution)
    vals = [f(t) for t in ts]
    k = int(np.argmax(vals))
    if not math.isfinite(vals[k]):
        return []
    h = ts[1] - ts[0]
    t, o, _ = _golden(f, max(tx_bounds[0], ts[k] - h), min(tx_bounds[1], ts[k] + h))
    pts = [(vals[k], on_boundary(ts[k]), float(ts[k]))]
    if math.isfinite(o):
        pts.append((o, on_boundary(t), t))
    return pts


def stability_region(scenario: Scenario, grid_resolution: int = 101):
    """Boolean feasibility mask ``mask[i, j]`` for (P_rx, P_tx) = (grid[i], grid[j])."""
    grid = np.linspace(0.0, 1.0, grid_resolution)
    model = RateModel.from_scenario(scenario)
    R, T = np.meshgrid(grid, grid, indexing="ij")
    return grid, model.evaluate(R, T)["feasible"]


def optimize(scenario: Scenario, grid_resolution: int = 41, refine: bool = True,
             rx_bounds=(0.0, 1.0), tx_bounds=(0.0, 1.0), rounds: int = 3) -> OptimizationResult:
    if grid_resolution < 11:
        raise ContractViolation("grid_resolution must be at least 11")
    model = RateModel.from_scenario(scenario)
    rx = np.linspace(*rx_bounds, grid_resolution)
    tx = np.linspace(*tx_bounds, grid_resolution)
    R, T = np.meshgrid(rx, tx, indexing="ij")
    ev = model.evaluate(R, T)
    feas = ev["feasible"]
    trace = {"grid_resolution": grid_resolution, "refine_steps": 0,
             "evaluations": int(R.size)}
    if not feas.any():
        trace["min_gap"] = float(np.max(ev["gap"]))
        return OptimizationResult(math.nan, math.nan, math.nan, False, math.nan,
                                  float(np.max(ev["gap"])), trace)

    obj = np.where(feas, ev["t_net"], -np.inf)
    points = [(float(o), float(r), float(t)) for o, r, t in
              zip(obj[feas], R[feas], T[feas])]
    best = _pick(points)

    if refine:
        hr = (rx_bounds[1] - rx_bounds[0]) / (grid_resolution - 1)
        ht = (tx_bounds[1] - tx_bounds[0]) / (grid_resolution - 1)
        _, r, t = best
        for _ in range(rounds):
            lo, hi = max(rx_bounds[0], best[1] - hr), min(rx_bounds[1], best[1] + hr)
            r, _, e1 = _line_search(lambda v: model.objective(v, t), r, lo, hi)
            lo, hi = max(tx_bounds[0], best[2] - ht), min(tx_bounds[1], best[2] + ht)
            t, o, e2 = _line_search(lambda v: model.objective(r, v), t, lo, hi)
            trace["refine_steps"] += 2
            trace["evaluations"] += e1 + e2
        o = model.objective(r, t)
        if math.isfinite(o):
            best = _pick([best, (o, r, t)])
        best = _pick([best, *_boundary_points(model, rx_bounds, tx_bounds, grid_resolution)])

    _, p_rx, p_tx = best
    chosen = scenario.with_access(p_rx=p_rx, p_tx=p_tx)
    q = queue_metrics(chosen)
    t_net = throughput(chosen, q).t_net
    return OptimizationResult(p_rx, p_tx, t_net, True, p_rx + p_tx, q.margin, trace)
