"""Steady states and their stability along a parameter sweep.

The system ``dx/dt = r*x - x^3`` with the parameter ``r`` as input has a
pitchfork at r = 0: one stable root for r < 0, three roots for r > 0 with
the origin turning unstable.  At r = 0 the root is degenerate, so Newton
converges slowly and stops at a cluster of points within its residual
tolerance instead of one root.

    python scripts/bifurcation_scan.py [--lo -1 --hi 1 --steps 9]
"""

import argparse

import numpy as np

from wirecalc.continuous import ContinuousSystem, NewtonConfig, steady_states_newton
from wirecalc.core import Box, euclid
from wirecalc.linear import classify_stability, linearize_at


def pitchfork() -> ContinuousSystem:
    return ContinuousSystem(Box(euclid(1, names=["r"]), euclid(1, names=["y"])), ("x",), ["r*x - x^3"], ["x"])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--lo", type=float, default=-1.0)
    parser.add_argument("--hi", type=float, default=1.0)
    parser.add_argument("--steps", type=int, default=9)
    args = parser.parse_args()

    f = pitchfork()
    cfg = NewtonConfig(lo=-3.0, hi=3.0, points=13)
    for r in np.linspace(args.lo, args.hi, args.steps):
        report = steady_states_newton(f, (float(r),), cfg)
        cells = []
        for root in sorted(report.roots, key=lambda s: s.state[0]):
            verdict = classify_stability(linearize_at(f, (float(r),), root.state))
            cells.append(f"x={root.state[0]:+.4f} ({verdict})")
        print(f"r={r:+.3f}: " + ", ".join(cells))


if __name__ == "__main__":
    main()
