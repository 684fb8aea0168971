from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wirecalc import catalog, gen
from wirecalc.core import Box, Finite, TypedFiniteSet, finite
from wirecalc.discrete import DiscreteSystem, ds_apply, ds_parallel
from wirecalc.errors import DisjointnessViolation
from wirecalc.linear import LinearSystem
from wirecalc.semimat import apply
from wirecalc.setmat import (QMatrix, SetMatrix, constant_payload, flatten_label, qmat_apply, qmat_forget, qmat_parallel,
                             smat_apply, smat_count, smat_multiply, smat_parallel, steady_state_sets, strip)
from wirecalc.wiring import compose, euclid_twin, from_names, identity, retyped

seeds = st.integers(0, 10_000)


def test_color_machine_sets():
    m = steady_state_sets(catalog.color_machine())
    assert m.stripped() == {(0, 0): Counter({2: 1}), (1, 1): Counter({1: 1, 4: 1})}
    assert smat_count(m).dense() == [[1, 0, 0], [0, 2, 0]]


def test_serial_sets_product():
    m = smat_multiply(steady_state_sets(catalog.color_machine()), steady_state_sets(catalog.arrow_machine()))
    assert m[0, 0] == {(2, "p")}
    assert m[1, 0] == {(1, "p"), (1, "r"), (4, "p"), (4, "r")}
    assert m[0, 1] == m[1, 1] == frozenset()


def test_no_fixed_states_gives_empty_matrix():
    box = Box(finite("ab"), finite("x"))
    f = DiscreteSystem(box, ["s", "t"], [0, 0], [[1, 0], [1, 0]])
    assert steady_state_sets(f).entries == {}


def test_parallel_with_singleton_identity():
    m = steady_state_sets(catalog.color_machine())
    unit = SetMatrix(TypedFiniteSet(), TypedFiniteSet(), {(0, 0): {"*"}})
    got = smat_parallel(m, unit)
    assert got[1, 1] == {(1, "*"), (4, "*")}


@given(seeds)
def test_parallel_matches_product_system(seed):
    rng = np.random.default_rng(seed)
    f1 = gen.random_discrete(rng, gen.random_box(rng))
    f2 = gen.random_discrete(rng, gen.random_box(rng))
    m1, m2 = steady_state_sets(f1), steady_state_sets(f2)
    both = smat_parallel(m1, m2)
    assert both == steady_state_sets(ds_parallel(f1, f2))
    for (i, j), s in both.entries.items():
        r2, c2 = m2.shape
        assert len(s) == len(m1[i // r2, j // c2]) * len(m2[i % r2, j % c2])


def test_identity_application():
    f = catalog.arrow_machine()
    m = steady_state_sets(f)
    assert smat_apply(identity(f.box), m, mode="flat") == m


@given(seeds)
def test_counts_commute_with_application(seed):
    rng = np.random.default_rng(seed)
    (w,) = gen.random_chain(rng, 1)
    m = steady_state_sets(gen.random_discrete(rng, w.inner))
    assert smat_count(smat_apply(w, m)) == apply(w, smat_count(m))


@given(seeds)
def test_sets_commute_with_wiring(seed):
    rng = np.random.default_rng(seed)
    (w,) = gen.random_chain(rng, 1)
    f = gen.random_discrete(rng, w.inner)
    assert smat_apply(w, steady_state_sets(f), mode="flat") == steady_state_sets(ds_apply(w, f))


@given(seeds)
def test_tagged_application_is_functorial(seed):
    rng = np.random.default_rng(seed)
    phi, psi = gen.random_chain(rng, 2)
    m = steady_state_sets(gen.random_discrete(rng, phi.inner))
    assert smat_apply(compose(psi, phi), m).stripped() == smat_apply(psi, smat_apply(phi, m)).stripped()


def test_flat_mode_detects_overlap():
    t = finite("ab", names=["x"])
    m = SetMatrix(t, t, {(0, 0): {"s"}, (0, 1): {"s"}})
    merge = from_names(Box(t, t), Box(finite("ab", names=["y"]), TypedFiniteSet()), {"x": "y"}, {})
    with pytest.raises(DisjointnessViolation):
        smat_apply(merge, m, mode="flat")
    tagged = smat_apply(merge, m, mode="tagged")
    assert sorted(strip(e) for e in tagged[0, 0]) == ["s", "s"]


def test_chain_product_row():
    w, x, y = catalog.layer_w(), catalog.layer_x(), catalog.layer_y()
    mx = steady_state_sets(x)
    m = mx
    for _ in range(5):
        m = smat_multiply(m, mx)
    assert sorted(flatten_label(e) for e in m[("T",), ("F",)]) == \
        ["111112", "111123", "111233", "112333", "123333", "233333"]
    full = smat_multiply(smat_multiply(steady_state_sets(w), m), steady_state_sets(y))
    row = {c: sorted(flatten_label(e) for e in full[("T", "T"), c]) for c in [("T", "T"), ("T", "F"), ("F", "T"),
                                                                           ("F", "F")]}
    assert row[("T", "T")] == ["a111111p", "a111112p", "a111123p", "a111233p", "a112333p", "a123333p",
                               "a233333p", "b333333p"]
    assert row[("T", "F")] == ["a111111q"]
    assert len(row[("F", "T")]) == 7 and "b333333r" in row[("F", "T")]
    assert row[("F", "F")] == []


def one_point_twin():
    star = Finite(("*",))
    inner = catalog.feedback_inner_box()
    outer = catalog.feedback_outer_box()
    w = catalog.feedback_wiring()
    fw = retyped(w, lambda t: star)
    return fw, inner, outer


def test_payload_through_feedback():
    fw, inner, _ = one_point_twin()
    base = SetMatrix(fw.inner.inputs, fw.inner.outputs, {(0, 0): {"x0"}})
    d = LinearSystem(inner, [[-3.0, 1.0]], [[2.0]], [[1.0]])
    q = constant_payload(base, inner, d)
    out = qmat_apply(fw, q, mode="flat")
    (e,) = out.base[0, 0]
    got = out[(0, 0, e)]
    assert got.m_in.tolist() == [[1.0]]
    assert got.m_mid.tolist() == [[-1.0]]
    assert got.m_out.tolist() == [[1.0]]
    assert qmat_forget(out) == smat_apply(fw, base, mode="flat")


def test_payload_identity():
    fw, inner, _ = one_point_twin()
    base = SetMatrix(fw.inner.inputs, fw.inner.outputs, {(0, 0): {"x0"}})
    d = LinearSystem(inner, [[-3.0, 1.0]], [[2.0]], [[1.0]])
    out = qmat_apply(identity(fw.inner), constant_payload(base, inner, d), mode="flat")
    assert out[(0, 0, "x0")] == d


@given(seeds)
def test_payload_application_is_functorial(seed):
    rng = np.random.default_rng(seed)
    phi, psi = gen.random_chain(rng, 2, gen.GenConfig(max_ports=2))
    m = steady_state_sets(gen.random_discrete(rng, phi.inner))
    twin = euclid_twin(phi)
    payload = {(i, j, e): gen.random_linear(rng, twin.inner, 1) for (i, j), s in m.entries.items() for e in s}
    q = QMatrix(m, payload, twin.inner)
    one = qmat_apply(compose(psi, phi), q, mode="flat")
    two = qmat_apply(psi, qmat_apply(phi, q, mode="flat"), mode="flat")
    assert one.base == two.base
    for key, l in one.payload.items():
        assert l.allclose(two.payload[key], 1e-12)


@given(seeds, seeds)
def test_payload_parallel_keeps_pairs(s1, s2):
    r1, r2 = np.random.default_rng(s1), np.random.default_rng(s2)
    b1, b2 = gen.random_box(r1), gen.random_box(r2)
    m1 = steady_state_sets(gen.random_discrete(r1, b1))
    m2 = steady_state_sets(gen.random_discrete(r2, b2))
    t1, t2 = euclid_twin(identity(b1)).inner, euclid_twin(identity(b2)).inner
    q = qmat_parallel(constant_payload(m1, t1), constant_payload(m2, t2))
    assert q.base == smat_parallel(m1, m2)
    assert all(l.n == 0 for l in q.payload.values())
