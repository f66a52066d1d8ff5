"""Simulate the default scenario for several SINR thresholds and print the
analytic-vs-empirical tables.

    python scripts/validate_defaults.py --slots 1000000 --seed 1
"""
import argparse

from relaylab import simulator
from relaylab.scenario import table_one


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--slots", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--users", type=int, default=5)
    ap.add_argument("--fading", action="store_true", help="sample SINR from raw fading draws")
    args = ap.parse_args()
    bad = 0
    for k, gamma in enumerate((0.2, 0.6, 2.5)):
        s = table_one(n=args.users, gamma=gamma, q0=0.95 if gamma == 0.2 else 0.99)
        rep = simulator.validate(s, args.slots, args.seed + k, sinr_mode=args.fading)
        print(f"\ngamma = {gamma}")
        print(rep.table())
        bad += len(rep.flagged)
    print(f"\n{bad} flagged metric(s)")


if __name__ == "__main__":
    main()
