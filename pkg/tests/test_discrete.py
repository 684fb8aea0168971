import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wirecalc import catalog, gen
from wirecalc.core import Box, finite, unflatten
from wirecalc.discrete import (DiscreteSystem, InitializedDiscreteSystem, WeightedDiscreteSystem,
                               count_composite_states, ds_apply, ds_parallel, fixed_states, run_stream,
                               steady_state_matrix, steady_state_measure, ws_apply, ws_parallel)
from wirecalc.errors import IncompleteSystem, WrongInterpretation
from wirecalc.semimat import apply, kronecker, multiply
from wirecalc.wiring import compose, identity, serial_diagram

seeds = st.integers(0, 10_000)


def test_color_machine_matrix():
    assert steady_state_matrix(catalog.color_machine()).dense() == [[1, 0, 0], [0, 2, 0]]


def test_arrow_machine_matrix():
    assert steady_state_matrix(catalog.arrow_machine()).dense() == [[1, 0], [2, 0], [0, 1]]


def test_serial_composite_has_five_steady_states():
    f1, f2 = catalog.color_machine(), catalog.arrow_machine()
    g = ds_apply(serial_diagram(f1.box, f2.box), ds_parallel(f1, f2))
    assert g.n_states == 12
    a, s = fixed_states(g)
    assert len(a) == 5
    # brute force: walk every (input, state) through both machines by hand
    found = []
    for sym in ("T", "F"):
        for s1, s2 in itertools.product(f1.states, f2.states):
            c = f1.read(s1)
            if f1.step(sym, s1) == s1 and f2.step(c, s2) == s2:
                found.append((sym, f2.read(s2)[0]))
    counts = {}
    for key in found:
        counts[key] = counts.get(key, 0) + 1
    assert counts == {("T", "Up"): 1, ("F", "Up"): 4}
    product = multiply(steady_state_matrix(f1), steady_state_matrix(f2))
    assert steady_state_matrix(g) == product
    assert product.dense() == [[1, 0], [4, 0]]


def test_stream_golden():
    f = InitializedDiscreteSystem(catalog.color_machine(), 1)
    states, outputs = run_stream(f, ["T", "T", "F", "T", "F"])
    assert states == [1, 2, 2, 3, 4, 4]
    assert [o[0] for o in outputs] == ["Blue", "Red", "Red", "Green", "Blue", "Blue"]


def test_empty_stream():
    f = InitializedDiscreteSystem(catalog.color_machine(), 3)
    assert run_stream(f, []) == ([3], [("Green",)])


@given(seeds)
def test_constant_input_keeps_steady_state(seed):
    rng = np.random.default_rng(seed)
    box = gen.random_box(rng)
    f = gen.random_discrete(rng, box)
    a, s = fixed_states(f)
    for ai, si in zip(a.tolist(), s.tolist()):
        sym = box.inputs.symbols(unflatten(box.inputs, ai))
        states, _ = run_stream(InitializedDiscreteSystem(f, f.states[si]), [sym] * 20)
        assert set(states) == {f.states[si]}


def test_unit_parallel_is_copy():
    f = catalog.color_machine()
    g = ds_parallel(f, DiscreteSystem.unit())
    assert g.n_states == f.n_states
    assert np.array_equal(g.update, f.update) and np.array_equal(g.readout, f.readout)


@given(seeds)
def test_parallel_stst_is_kronecker(seed):
    rng = np.random.default_rng(seed)
    f1 = gen.random_discrete(rng, gen.random_box(rng), 3)
    f2 = gen.random_discrete(rng, gen.random_box(rng), 3)
    g = ds_parallel(f1, f2)
    assert g.n_states == 9
    assert steady_state_matrix(g) == kronecker(steady_state_matrix(f1), steady_state_matrix(f2))


def test_identity_wiring_keeps_system():
    f = catalog.arrow_machine()
    assert ds_apply(identity(f.box), f) == f


@given(seeds)
def test_application_is_functorial(seed):
    rng = np.random.default_rng(seed)
    phi, psi = gen.random_chain(rng, 2)
    f = gen.random_discrete(rng, phi.inner)
    assert ds_apply(compose(psi, phi), f) == ds_apply(psi, ds_apply(phi, f))


@given(seeds)
def test_stst_commutes_with_wiring(seed):
    rng = np.random.default_rng(seed)
    (phi,) = gen.random_chain(rng, 1)
    f = gen.random_discrete(rng, phi.inner)
    assert steady_state_matrix(ds_apply(phi, f)) == apply(phi, steady_state_matrix(f))


def test_fixed_everything_constant_readout():
    box = Box(finite("ab"), finite("xyz"))
    f = DiscreteSystem(box, ["s", "t", "u"], [1, 1, 1], [[0, 1, 2], [0, 1, 2]])
    assert steady_state_matrix(f).dense() == [[0, 3, 0], [0, 3, 0]]


def test_weights_one_and_zero():
    f = catalog.color_machine()
    ones = steady_state_measure(WeightedDiscreteSystem(f, np.ones(4)))
    assert ones.dense() == [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]]
    zeros = steady_state_measure(WeightedDiscreteSystem(f, np.zeros(4)))
    assert zeros.nnz == 0


def test_infinite_times_zero_weight():
    f = catalog.color_machine()
    w1 = WeightedDiscreteSystem(f, [np.inf, 0, 1, 1])
    w2 = WeightedDiscreteSystem(f, [0, 1, 1, 1])
    prod = ws_parallel(w1, w2)
    assert prod.weights[0] == 0.0
    assert prod.weights[5] == 0.0


@given(seeds)
def test_measure_commutes_with_wiring(seed):
    rng = np.random.default_rng(seed)
    (phi,) = gen.random_chain(rng, 1)
    f = gen.random_weighted(rng, phi.inner)
    direct = steady_state_measure(ws_apply(phi, f))
    assert direct.allclose(apply(phi, steady_state_measure(f)), 1e-9)


def test_counter_sees_composite_states():
    f1, f2 = catalog.color_machine(), catalog.arrow_machine()
    with count_composite_states() as c:
        steady_state_matrix(ds_apply(serial_diagram(f1.box, f2.box), ds_parallel(f1, f2)))
    assert c.composite_states > 0
    with count_composite_states() as c:
        multiply(steady_state_matrix(f1), steady_state_matrix(f2))
    assert c.composite_states == 0


def test_incomplete_table_is_rejected():
    box = Box(finite("ab"), finite("x"))
    with pytest.raises(IncompleteSystem):
        DiscreteSystem.from_table(box, ["s"], [("a", "s", "x", "s")])
    with pytest.raises(WrongInterpretation):
        DiscreteSystem(catalog.feedback_inner_box(), ["s"], [0], [[0]])
