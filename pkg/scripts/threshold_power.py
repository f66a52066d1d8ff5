"""Expected z-score of the queue-growth test at q0 = 0.95 q0_min.

Below the threshold the queue drifts up at lambda1 - mu per slot with
per-slot variance about lambda1 + mu, so over T slots the slope test has
z ~ (lambda1 - mu) sqrt(T / (lambda1 + mu)). Prints the weakest configurations.

    python scripts/threshold_power.py --slots 1000000
"""
import argparse
import itertools
import math

from scipy.stats import norm

from relaylab import queue
from relaylab.scenario import table_one


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--slots", type=float, default=1e6)
    ap.add_argument("--show", type=int, default=10)
    args = ap.parse_args()
    rows = []
    for n, gamma, p_rx, p_tx in itertools.product([1, 2, 3, 5, 8], [0.2, 0.6, 1.2, 2.5],
                                                  [0.3, 0.7, 1.0], [0.3, 0.7, 1.0]):
        s = table_one(n=n, gamma=gamma, p_rx=p_rx, p_tx=p_tx)
        qmin = queue.q0_min(s)
        if qmin == queue.INFEASIBLE or 1.05 * qmin > 1:
            continue
        m = queue.queue_metrics(s.with_access(q0=0.95 * qmin))
        z = (m.lambda1 - m.mu) * math.sqrt(args.slots / (m.lambda1 + m.mu))
        rows.append((z, n, gamma, p_rx, p_tx))
    rows.sort()
    miss = 1.0 - math.prod(norm.sf(3 - z) for z, *_ in rows)
    print(f"{'z':>6} {'n':>3} {'gamma':>6} {'P_rx':>5} {'P_tx':>5} {'P(z<3)':>7}")
    for z, n, gamma, p_rx, p_tx in rows[:args.show]:
        print(f"{z:6.2f} {n:3d} {gamma:6.1f} {p_rx:5.1f} {p_tx:5.1f} {norm.cdf(3 - z):7.3f}")
    print(f"\nchance that at least one of {len(rows)} configurations misses: {miss:.2f}")


if __name__ == "__main__":
    main()
