import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wirecalc import gen
from wirecalc.core import Box, Finite, TypedFiniteSet, finite, flat_index, unflatten
from wirecalc.errors import ArithmeticOverflow, ShapeMismatch, SizeCapExceeded, TraceTypeMismatch
from wirecalc.semimat import INF, Matrix, NatPlus, RealPlus, apply, kronecker, multiply, partial_trace
from wirecalc.wiring import compose, feedback_diagram, from_names, identity, serial_diagram

seeds = st.integers(0, 10_000)


def alpha(n, tag):
    return Finite(tuple(f"{tag}{i}" for i in range(n)))


def one_port(name, t):
    return TypedFiniteSet(((name, t),))


A, B, C = alpha(2, "a"), alpha(3, "b"), alpha(2, "c")


def mat(rows, cols, data, semiring=NatPlus):
    return Matrix.from_dense(rows, cols, semiring, data)


def test_serial_product_golden():
    m1 = mat(one_port("i", A), one_port("j", A), [[1, 2], [3, 0]])
    m2 = mat(one_port("j", A), one_port("k", B), [[2, 2, 0], [3, 1, 1]])
    assert multiply(m1, m2).dense() == [[8, 4, 2], [6, 6, 0]]


def test_steady_state_product_golden():
    m1 = mat(one_port("i", A), one_port("j", B), [[1, 0, 0], [0, 2, 0]])
    m2 = mat(one_port("j", B), one_port("k", A), [[1, 0], [2, 0], [0, 1]])
    assert multiply(m1, m2).dense() == [[1, 0], [4, 0]]


def test_kronecker_golden():
    m1 = mat(one_port("x", A), one_port("y", A), [[1, 2], [3, 0]])
    m2 = mat(one_port("u", B), one_port("v", A), [[2, 2], [3, 1], [1, 0]])
    assert kronecker(m1, m2).dense() == [[2, 2, 4, 4], [3, 1, 6, 2], [1, 0, 2, 0],
                                         [6, 6, 0, 0], [9, 3, 0, 0], [3, 0, 0, 0]]


def test_splitting_goldens():
    m1 = mat(one_port("x", A), one_port("y", B), [[1, 2, 4], [3, 1, 1]])
    y1 = Box(one_port("x", A), TypedFiniteSet((("y1", B), ("y2", B))))
    w1 = from_names(Box(one_port("x", A), one_port("y", B)), y1, {"x": "x"}, {"y1": "y", "y2": "y"})
    assert apply(w1, m1).dense() == [[1, 0, 0, 0, 2, 0, 0, 0, 4], [3, 0, 0, 0, 1, 0, 0, 0, 1]]

    inner = Box(TypedFiniteSet((("x1", A), ("x2", A))), one_port("y", B))
    m2 = mat(inner.inputs, inner.outputs, [[1, 2, 1], [3, 0, 1], [2, 1, 2], [0, 1, 4]])
    w2 = from_names(inner, Box(one_port("x", A), one_port("y", B)), {"x1": "x", "x2": "x"}, {"y": "y"})
    assert apply(w2, m2).dense() == [[1, 2, 1], [0, 1, 4]]


def trace_example():
    rows = TypedFiniteSet((("a", A), ("c", C)))
    cols = TypedFiniteSet((("b", B), ("c", C)))
    return mat(rows, cols, [[1, 2, 4, 1, 0, 3], [3, 1, 1, 2, 1, 0],
                            [1, 2, 1, 0, 3, 2], [0, 1, 2, 3, 4, 2]])


def test_partial_trace_golden():
    assert partial_trace(trace_example(), [1], [1]).dense() == [[2, 6, 0], [2, 4, 5]]


def test_partial_trace_type_mismatch():
    with pytest.raises(TraceTypeMismatch):
        partial_trace(trace_example(), [0], [0])


def test_identity_diagram_leaves_matrix(rng):
    box = Box(finite(("0", "1"), ("a", "b", "c")), finite(("0", "1")))
    m = gen.random_matrix(rng, box.inputs, box.outputs)
    assert apply(identity(box), m) == m


def test_kronecker_unit(rng):
    m = gen.random_matrix(rng, finite("ab"), finite("xyz"))
    unit = Matrix.identity(TypedFiniteSet(), NatPlus)
    assert kronecker(m, unit).dense() == m.dense()
    assert kronecker(unit, m).dense() == m.dense()


def test_multiply_by_identity(rng):
    m = gen.random_matrix(rng, finite("ab", "xy"), finite("xyz"))
    assert multiply(m, Matrix.identity(m.col_space, NatPlus)) == m
    assert multiply(Matrix.identity(m.row_space, NatPlus), m) == m


def test_trace_over_point_factor_scales(rng):
    m = gen.random_matrix(rng, finite("ab"), finite("xyz"))
    r = Matrix.from_dense(TypedFiniteSet((("k", Finite(("*",))),)), TypedFiniteSet((("k", Finite(("*",))),)),
                          NatPlus, [[3]])
    got = partial_trace(kronecker(m, r), [1], [1])
    assert got.dense() == [[3 * v for v in row] for row in m.dense()]


def random_nat(rng, rows, cols):
    return gen.random_matrix(rng, rows, cols)


@given(seeds)
def test_kronecker_is_associative(seed):
    rng = np.random.default_rng(seed)
    t3 = finite("abc")
    m1, m2, m3 = (random_nat(rng, t3, t3) for _ in range(3))
    assert kronecker(kronecker(m1, m2), m3).dense() == kronecker(m1, kronecker(m2, m3)).dense()


def brute_apply(w, m):
    """The wiring formula evaluated point by point."""
    yin, xout, yout, xin = w.outer.inputs, w.inner.outputs, w.outer.outputs, w.inner.inputs
    out = [[m.semiring.zero] * yout.size for _ in range(yin.size)]
    for i in range(yin.size):
        y = unflatten(yin, i)
        for k in range(xout.size):
            x = unflatten(xout, k)
            v = m[flat_index(xin, w.in_eval(y, x)), k]
            j = flat_index(yout, w.out_eval(x))
            out[i][j] = m.semiring.add(out[i][j], v)
    return out


@given(seeds)
def test_apply_matches_pointwise_formula(seed):
    rng = np.random.default_rng(seed)
    (w,) = gen.random_chain(rng, 1)
    m = random_nat(rng, w.inner.inputs, w.inner.outputs)
    assert apply(w, m).dense() == brute_apply(w, m)


@given(seeds)
def test_apply_is_functorial(seed):
    rng = np.random.default_rng(seed)
    phi, psi = gen.random_chain(rng, 2)
    for semiring in (NatPlus, RealPlus):
        m = gen.random_matrix(rng, phi.inner.inputs, phi.inner.outputs, semiring)
        lhs, rhs = apply(compose(psi, phi), m), apply(psi, apply(phi, m))
        assert lhs == rhs if semiring is NatPlus else lhs.allclose(rhs, 1e-9)


@given(seeds)
def test_multiply_is_serial_application(seed):
    rng = np.random.default_rng(seed)
    cfg = gen.GenConfig(max_ports=2)
    x1 = gen.random_box(rng, cfg, min_ports=1)
    mid = gen.random_box(rng, cfg, min_ports=1)
    x2 = Box(x1.outputs, mid.outputs)
    m1 = random_nat(rng, x1.inputs, x1.outputs)
    m2 = random_nat(rng, x2.inputs, x2.outputs)
    assert apply(serial_diagram(x1, x2), kronecker(m1, m2)).dense() == multiply(m1, m2).dense()


@given(seeds)
def test_trace_is_feedback_application(seed):
    rng = np.random.default_rng(seed)
    kk, ii, jj = (Finite(tuple("pq")), Finite(tuple("abc")), Finite(tuple("xy")))
    inner = Box(TypedFiniteSet((("k", kk), ("i", ii))), TypedFiniteSet((("k", kk), ("j", jj))))
    m = random_nat(rng, inner.inputs, inner.outputs)
    assert apply(feedback_diagram(inner, [(0, 0)]), m) == partial_trace(m, [0], [0])


def test_infinity_and_zero():
    t = finite("ab")
    m = mat(t, t, [[INF, 0], [0, 2]])
    z = mat(t, t, [[0, 0], [0, 1]])
    assert multiply(m, z).dense() == [[0, 0], [0, 2]]
    assert multiply(m, m).dense() == [[INF, 0], [0, 4]]
    r = Matrix.from_dense(t, t, RealPlus, [[math.inf, 0.0], [0.0, 0.5]])
    assert kronecker(r, Matrix.from_dense(t, t, RealPlus, [[0.0, 1.0], [1.0, 0.0]]))[0, 1] == math.inf


def test_overflow_is_detected():
    t = finite("a")
    big = mat(t, t, [[2**40]])
    with pytest.raises(ArithmeticOverflow):
        multiply(big, big)
    with pytest.raises(ArithmeticOverflow):
        kronecker(big, big)


def test_shape_checks():
    t2, t3 = finite("ab"), finite("abc")
    with pytest.raises(ShapeMismatch):
        mat(t2, t3, [[1, 2]])
    with pytest.raises(ShapeMismatch):
        multiply(mat(t2, t2, [[1, 0], [0, 1]]), mat(t3, t3, [[1, 0, 0]] * 3))
    m = mat(t2, t2, [[1, 0], [0, 1]])
    with pytest.raises(SizeCapExceeded):
        kronecker(m, m, cap=8)
