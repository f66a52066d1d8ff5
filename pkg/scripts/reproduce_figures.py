"""Write the throughput and activation-probability series vs the number of
users as CSV files, one per (gamma, q0, g) combination.

    python scripts/reproduce_figures.py --out results/figures
"""
import argparse
import json
from pathlib import Path

from relaylab.config import sweep_from_dict
from relaylab.sweep import run_sweep, to_csv

USERS = [1] + list(range(5, 55, 5))

# (gamma, q0, g values)
SERIES = {
    "throughput_gamma0.2": (0.2, 0.95, [1.0, 1e-6, 1e-8, 1e-10]),
    "throughput_gamma0.6": (0.6, 0.99, [1.0, 1e-6, 1e-8, 1e-10]),
    "throughput_gamma2.5": (2.5, 0.99, [1.0, 1e-6, 1e-8, 1e-10]),
    "tx_gamma1.2": (1.2, 0.99, [1.0]),
    "rx_gamma0.2": (0.2, 0.99, [1.0, 1e-10]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/figures")
    ap.add_argument("--grid", type=int, default=41)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, (gamma, q0, gs) in SERIES.items():
        for g in gs:
            doc = {"scenario": {"phy": {"gamma": gamma, "g": g}, "access": {"q": 0.1, "q0": q0}},
                   "variable": "n", "values": USERS, "optimize": True, "grid": args.grid}
            stem = f"{name}_g{g:g}"
            (out / f"{stem}.json").write_text(json.dumps(doc, indent=2) + "\n")
            text = to_csv(run_sweep(sweep_from_dict(doc)))
            (out / f"{stem}.csv").write_text(text)
            print(f"wrote {out / stem}.csv")


if __name__ == "__main__":
    main()
