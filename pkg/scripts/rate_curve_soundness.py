#!/usr/bin/env python3
"""Sweep random CHSH-compatible devices against the quadratic rate curve.

For each device and each eps the script records the smoothed score, the
fixed-input randomness, and the slack [pi(W^eps) - R^eps]/eps; the worst
slack per eps is the quantity whose boundedness backs the rate-curve
soundness claim.  Emits a CSV of per-device rows plus a stderr summary.

Usage: python scripts/rate_curve_soundness.py --devices 200 --seed 1 > sweep.csv
"""

import argparse
import math
import sys

import numpy as np

from randx import catalog, scoring
from randx.devicemodel import components_device
from randx.matcore import haar_unitary


def rotated_basis(theta):
    v0 = np.array([math.cos(theta), math.sin(theta)], dtype=complex)
    v1 = np.array([-math.sin(theta), math.cos(theta)], dtype=complex)
    return {0: np.outer(v0, v0.conj()), 1: np.outer(v1, v1.conj())}


def random_chsh_device(rng, perturbed):
    if perturbed:
        ang1 = {0: rng.normal(0.0, 0.3), 1: math.pi / 4 + rng.normal(0.0, 0.3)}
        ang2 = {0: math.pi / 8 + rng.normal(0.0, 0.3), 1: -math.pi / 8 + rng.normal(0.0, 0.3)}
        site1 = {a: rotated_basis(t) for a, t in ang1.items()}
        site2 = {a: rotated_basis(t) for a, t in ang2.items()}
        psi = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
        state = np.outer(psi, psi.conj())
        lam = rng.uniform(0.0, 0.3)
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        noise = g.conj().T @ g
        noise /= np.trace(noise).real
        state = (1 - lam) * state + lam * noise
    else:
        def rand_basis():
            u = haar_unitary(2, rng)
            return {0: np.outer(u[:, 0], u[:, 0].conj()), 1: np.outer(u[:, 1], u[:, 1].conj())}
        site1 = {0: rand_basis(), 1: rand_basis()}
        site2 = {0: rand_basis(), 1: rand_basis()}
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        state = g.conj().T @ g
        state /= np.trace(state).real
    return components_device((2, 2), state, (site1, site2))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--devices", type=int, default=200)
    ap.add_argument("--seed", type=int, default=20250810)
    ap.add_argument("--eps", default="0.1,0.05,0.02,0.01")
    args = ap.parse_args()

    eps_grid = [float(e) for e in args.eps.split(",")]
    game = catalog.chsh().game
    curve = scoring.quadratic_rate_curve(0.75, 4)
    rng = np.random.default_rng(args.seed)
    devices = [random_chsh_device(rng, perturbed=(i % 2 == 0)) for i in range(args.devices)]

    print("device,eps,score,randomness,slack_over_eps")
    worst = {eps: -math.inf for eps in eps_grid}
    for i, dev in enumerate(devices):
        for eps in eps_grid:
            w = scoring.eps_score(game, dev, eps)
            r = scoring.eps_randomness((0, 0), dev, eps)
            slack = (curve.evaluate(w) - r) / eps
            worst[eps] = max(worst[eps], slack)
            print(f"{i},{eps},{w:.12g},{r:.12g},{slack:.12g}")
    for eps in eps_grid:
        print(f"eps={eps}: worst slack/eps = {worst[eps]:.4f}", file=sys.stderr)


if __name__ == "__main__":
    main()
