"""Steady states of the eight-layer chain, by matrices and by brute force.

    python scripts/extended_example.py
"""

import time

from wirecalc import catalog
from wirecalc.cli import render
from wirecalc.discrete import count_composite_states, ds_apply, ds_parallel
from wirecalc.setmat import smat_apply, smat_parallel, steady_state_sets


def main():
    systems = catalog.chain_systems()
    w = catalog.chain_diagram()

    t0 = time.perf_counter()
    with count_composite_states() as counter:
        sets = steady_state_sets(systems[0])
        for f in systems[1:]:
            sets = smat_parallel(sets, steady_state_sets(f))
        by_matrix = smat_apply(w, sets)
    t_matrix = time.perf_counter() - t0
    print(f"matrix pipeline: {t_matrix * 1e3:.1f} ms, composite states built: {counter.composite_states}")
    print(render.matrix_text(by_matrix))

    t0 = time.perf_counter()
    whole = systems[0]
    for f in systems[1:]:
        whole = ds_parallel(whole, f)
    z = ds_apply(w, whole)
    by_states = steady_state_sets(z)
    t_brute = time.perf_counter() - t0
    print(f"\nbrute force: {z.n_states} states in {t_brute * 1e3:.1f} ms")
    print("same labels:", by_states.labels() == by_matrix.labels())


if __name__ == "__main__":
    main()
