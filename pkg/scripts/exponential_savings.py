"""Compare matrix-level steady states against building the composite system.

The six-box network has 4 outer inputs and outputs, so its steady-state
matrix stays 16x16 while the composite state space grows as n**6.

Brute force is skipped once the composite passes ``--brute-limit`` states.

    python scripts/exponential_savings.py [--max-states 8 --brute-limit 50000]
"""

import argparse
import time
from functools import reduce

from wirecalc import catalog
from wirecalc.discrete import count_composite_states, ds_apply, ds_parallel, steady_state_matrix
from wirecalc.semimat import apply, kronecker


def timed(fn):
    t0 = time.perf_counter()
    with count_composite_states() as counter:
        out = fn()
    return out, time.perf_counter() - t0, counter.composite_states


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--max-states", type=int, default=8)
    parser.add_argument("--brute-limit", type=int, default=50_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    w = catalog.network_diagram()
    print(f"{'states/box':>10} {'composite':>10} {'matrix ms':>10} {'brute ms':>10} {'built':>8} agree")
    for n in range(2, args.max_states + 1):
        systems = catalog.network_systems(args.seed, n_states=n)
        m, t_m, built_m = timed(lambda: apply(w, reduce(kronecker, [steady_state_matrix(f) for f in systems])))
        assert built_m == 0
        if n ** 6 > args.brute_limit:
            print(f"{n:>10} {n ** 6:>10} {t_m * 1e3:>10.1f} {'skipped':>10} {'-':>8} -")
            continue
        b, t_b, built_b = timed(lambda: steady_state_matrix(ds_apply(w, reduce(ds_parallel, systems))))
        print(f"{n:>10} {n ** 6:>10} {t_m * 1e3:>10.1f} {t_b * 1e3:>10.1f} {built_b:>8} {m == b}")


if __name__ == "__main__":
    main()
