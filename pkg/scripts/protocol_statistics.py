#!/usr/bin/env python3
"""Success/abort statistics of the spot-checking protocol over seeded trials.

Runs the catalog CHSH optimal and classical devices across a grid of score
thresholds and reports how many of the seeded runs succeed.  Useful for
picking a threshold with a comfortable statistical margin: at N rounds the
accumulated score is Binomial(N, q*w), so thresholds within a couple of
standard deviations of the mean flip a visible fraction of runs.

Usage: python scripts/protocol_statistics.py --n 100000 --q 0.05 --trials 100
"""

import argparse
import math

from randx import catalog
from randx.protocol import ProtocolParams, simulate


def run_grid(game, device, n, q, chis, trials, seed):
    rows = []
    for chi in chis:
        succ = sum(
            simulate(game, device, ProtocolParams(n_rounds=n, q=q, chi=chi, seed=seed + k)).success
            for k in range(trials)
        )
        rows.append((chi, succ))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--q", type=float, default=0.05)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--chis", default="0.80,0.82,0.83,0.84")
    args = ap.parse_args()

    entry = catalog.chsh()
    chis = [float(c) for c in args.chis.split(",")]
    w = 0.5 + math.sqrt(2.0) / 4.0

    print(f"N={args.n} q={args.q} trials={args.trials}")
    mean = args.n * args.q * w
    sd = math.sqrt(args.n * args.q * w * (1 - args.q * w))
    print(f"optimal device: score mean {mean:.1f}, sd {sd:.1f}")
    for chi, succ in run_grid(entry.game, entry.devices["optimal"],
                              args.n, args.q, chis, args.trials, args.seed):
        z = (mean - chi * args.q * args.n) / sd
        print(f"  chi={chi}: {succ}/{args.trials} succeed (threshold {z:+.2f} sd below mean)")
    print("classical device:")
    for chi, succ in run_grid(entry.game, entry.devices["classical"],
                              args.n, args.q, chis, args.trials, args.seed):
        print(f"  chi={chi}: {args.trials - succ}/{args.trials} abort")


if __name__ == "__main__":
    main()
