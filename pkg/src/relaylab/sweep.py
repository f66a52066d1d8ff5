"""Parameter sweeps producing one CSV row per swept value."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .config import SweepSpec
from .optimizer import optimize
from .parallel import thread_cap
from .queue import queue_metrics
from .scenario import Scenario
from .throughput import throughput

COLUMNS = ("value", "T", "T_net", "P_rx_opt", "P_tx_opt", "P(Q=0)", "Q_bar", "stable")


@dataclass(frozen=True)
class SweepRow:
    value: float
    t: float | None
    t_net: float | None
    p_rx: float | None
    p_tx: float | None
    p_empty: float | None
    q_bar: float | None
    stable: bool

    def cells(self) -> list[str]:
        def fmt(x):
            return "" if x is None else format(x, ".12g")
        return [fmt(self.value), fmt(self.t), fmt(self.t_net), fmt(self.p_rx), fmt(self.p_tx),
                fmt(self.p_empty), fmt(self.q_bar), "true" if self.stable else "false"]


def evaluate_point(value: float, scenario: Scenario, optimized: bool = False,
                   grid: int = 41, refine: bool = True) -> SweepRow:
    acc = scenario.access
    p_rx, p_tx = acc.p_rx, acc.p_tx
    if optimized:
        res = optimize(scenario, grid_resolution=grid, refine=refine)
        if not res.feasible:
            return SweepRow(value, None, None, None, None, None, None, False)
        p_rx, p_tx = res.p_rx_opt, res.p_tx_opt
        scenario = scenario.with_access(p_rx=p_rx, p_tx=p_tx)
    q = queue_metrics(scenario)
    if not q.stable:
        return SweepRow(value, None, None, p_rx, p_tx, None, None, False)
    tp = throughput(scenario, q)
    return SweepRow(value, tp.mean_user, tp.t_net, p_rx, p_tx, q.p_empty, q.q_bar, True)


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[SweepRow]:
    """Rows in the order of ``spec.values`` whatever order the workers finish in."""
    workers = min(workers or thread_cap(), len(spec.values))
    args = [(v, s, spec.optimize, spec.grid, spec.refine)
            for v, s in zip(spec.values, spec.scenarios)]
    if workers <= 1:
        return [evaluate_point(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(evaluate_point, *zip(*args)))


def to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()
