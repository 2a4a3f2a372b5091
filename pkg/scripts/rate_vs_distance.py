"""Per-user and total key rates over distance for growing networks.

Reproduces the headline operating figures for deployment-grade
hardware: per-user rates above 1e-3 bit/pulse out to 20 km for up to 64
users, above 1e-4 at 60 km for up to 32, and totals above 0.1 bit/pulse
within 10 km.  Optionally writes the grid as CSV.
"""
from __future__ import annotations

import argparse
import csv
import sys

from cvqnet.keyrate import network_report
from cvqnet.presets import practical_network


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", help="write the grid as CSV to this path")
    args = parser.parse_args()

    counts = (4, 8, 16, 32, 64)
    distances = range(0, 101, 10)
    rows = []
    for d in distances:
        for n in counts:
            rep = network_report(practical_network(n, float(d)))
            rows.append(
                {
                    "distance_km": d,
                    "n_users": n,
                    "k_user": rep.users[0].k_clamped,
                    "k_tot": rep.k_tot,
                    "k_ub": rep.k_ub,
                }
            )

    print("per-user rate / bit/pulse")
    print("  d/km " + "".join(f"  N={n:<8d}" for n in counts))
    for d in distances:
        vals = [r["k_user"] for r in rows if r["distance_km"] == d]
        print(f"  {d:4d} " + "".join(f"  {v:10.3e}" for v in vals))
    print("total rate / bit/pulse")
    for d in distances:
        vals = [r["k_tot"] for r in rows if r["distance_km"] == d]
        print(f"  {d:4d} " + "".join(f"  {v:10.3e}" for v in vals))

    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
