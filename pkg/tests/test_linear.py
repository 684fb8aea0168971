import numpy as np
import pytest
from hypothesis import given, strategies as st

from wirecalc import catalog, gen
from wirecalc.cli.checks import as_continuous
from wirecalc.continuous import ContinuousSystem, cs_apply
from wirecalc.core import Box, euclid
from wirecalc.errors import NotDifferentiable, SizeUnsupported
from wirecalc.linear import (LinearSystem, classify_stability, eigenvalues, linearize_at, ls_apply, ls_parallel,
                             stst_linearization)
from wirecalc.wiring import compose, identity, serial_diagram

seeds = st.integers(0, 10_000)


def inner_d():
    return LinearSystem(catalog.feedback_inner_box(), [[-3.0, 1.0]], [[2.0]], [[1.0]])


def test_parallel_with_empty_system():
    l1 = inner_d()
    l0 = LinearSystem.zero(Box(), 0)
    both = ls_parallel(l1, l0)
    assert both.n == l1.n
    assert np.array_equal(both.m_mid, l1.m_mid)
    assert ls_parallel(l1, l1).n == 2


def test_identity_wiring_keeps_system(rng):
    l = gen.random_linear(rng, Box(euclid(2, 1), euclid(1)), 3)
    assert ls_apply(identity(l.box), l) == l


@given(seeds)
def test_serial_block_structure(seed):
    rng = np.random.default_rng(seed)
    k, m, p = (int(x) for x in rng.integers(1, 4, size=3))
    n1, n2 = (int(x) for x in rng.integers(1, 4, size=2))
    x1 = Box(euclid(k, names=["a"]), euclid(m, names=["b"]))
    x2 = Box(euclid(m, names=["b"]), euclid(p, names=["c"]))
    l1, l2 = gen.random_linear(rng, x1, n1), gen.random_linear(rng, x2, n2)
    got = ls_apply(serial_diagram(x1, x2), ls_parallel(l1, l2))
    mid = np.block([[l1.m_mid, np.zeros((n1, n2))], [l2.m_in @ l1.m_out, l2.m_mid]])
    assert np.allclose(got.m_mid, mid, rtol=0, atol=1e-12)
    assert np.allclose(got.m_in, np.vstack([l1.m_in, np.zeros((n2, k))]), rtol=0, atol=1e-12)
    assert np.allclose(got.m_out, np.hstack([np.zeros((p, n1)), l2.m_out]), rtol=0, atol=1e-12)


@given(seeds)
def test_application_is_functorial(seed):
    rng = np.random.default_rng(seed)
    phi, psi = gen.random_chain(rng, 2, gen.GenConfig(kind="euclid"))
    l = gen.random_linear(rng, phi.inner)
    assert ls_apply(compose(psi, phi), l).allclose(ls_apply(psi, ls_apply(phi, l)), 1e-12)


def test_feedback_payload_example():
    e = ls_apply(catalog.feedback_wiring(), inner_d())
    assert e.m_in.tolist() == [[1.0]]
    assert e.m_mid.tolist() == [[-1.0]]
    assert e.m_out.tolist() == [[1.0]]


def test_linearize_feedback_system():
    f = catalog.feedback_system()
    for a, s in [((0.0, 0.0), (0.0,)), ((1.2, -3.0), (7.0,))]:
        assert linearize_at(f, a, s) == inner_d()


def test_linearize_then_wire_matches_wire_then_linearize():
    f, w = catalog.feedback_system(), catalog.feedback_wiring()
    for (b1, a) in [(1.0, 1.0), (2.0, -1.0)]:
        (item,) = stst_linearization(f, [(b1, a)])
        assert ls_apply(w, item.system).m_mid.tolist() == [[-1.0]]
    (whole,) = stst_linearization(cs_apply(w, f), [(1.0,)])
    assert whole.system.m_mid.tolist() == [[-1.0]]
    assert whole.state == (1.0,)


def test_linear_systems_linearize_to_themselves(rng):
    l = gen.random_linear(rng, Box(euclid(2), euclid(1, 1)), 3)
    assert linearize_at(as_continuous(l), (0.3, -0.2), (1.0, 2.0, 3.0)).allclose(l, 1e-12)


def test_zero_field_payload():
    f = ContinuousSystem(Box(euclid(), euclid(1)), ("x",), ["0"], ["x"])
    items = stst_linearization(f, [()])
    assert len(items) == 2
    assert all(item.system.m_mid.tolist() == [[0.0]] for item in items)


def finite_difference_jacobian(f, a, s, h=1e-6):
    a, s = np.array(a, float), np.array(s, float)
    d_in = np.zeros((f.n, len(a)))
    d_mid = np.zeros((f.n, f.n))
    d_out = np.zeros((f.box.outputs.dim, f.n))
    for j in range(len(a)):
        e = np.eye(len(a))[j] * h
        d_in[:, j] = (np.array(f.f(a + e, s)) - np.array(f.f(a - e, s))) / (2 * h)
    for j in range(f.n):
        e = np.eye(f.n)[j] * h
        d_mid[:, j] = (np.array(f.f(a, s + e)) - np.array(f.f(a, s - e))) / (2 * h)
        d_out[:, j] = (np.array(f.read(s + e)) - np.array(f.read(s - e))) / (2 * h)
    return d_in, d_mid, d_out


def test_jacobians_match_finite_differences():
    rng = np.random.default_rng(11)
    cfg = gen.GenConfig(kind="euclid", max_ports=2)
    for _ in range(30):
        f = gen.random_smooth_system(rng, gen.random_box(rng, cfg), transcendental=False)
        a = rng.uniform(-1, 1, size=f.box.inputs.dim)
        s = rng.uniform(-1, 1, size=f.n)
        lin = linearize_at(f, a, s)
        for x, y in zip((lin.m_in, lin.m_mid, lin.m_out), finite_difference_jacobian(f, a, s)):
            assert np.all(np.abs(x - y) <= 1e-4 * np.maximum(1.0, np.abs(x)))


@given(seeds)
def test_linearization_commutes_with_wiring(seed):
    rng = np.random.default_rng(seed)
    (w,) = gen.random_chain(rng, 1, gen.GenConfig(kind="euclid", max_ports=2))
    f = gen.random_affine_system(rng, w.inner)
    a = tuple(rng.uniform(-1, 1, size=w.outer.inputs.dim))
    s = tuple(rng.uniform(-1, 1, size=f.n))
    inner_a = w.in_eval(a, f.read(s))
    lhs = ls_apply(w, linearize_at(f, inner_a, s))
    rhs = linearize_at(cs_apply(w, f), a, s)
    assert lhs.allclose(rhs, 1e-9)


def test_stability_verdicts():
    assert classify_stability(np.array([[2.0]])) == "unstable"
    assert classify_stability(np.array([[-1.0]])) == "stable"
    assert classify_stability(np.array([[0.0, 1.0], [-1.0, 0.0]])) == "marginal"
    assert classify_stability(inner_d()) == "unstable"
    assert classify_stability(ls_apply(catalog.feedback_wiring(), inner_d())) == "stable"


def inertia_count_below(a, x):
    """Eigenvalues of symmetric ``a`` below ``x``: negative pivots of ``a - x I`` (Sylvester)."""
    m = a - x * np.eye(len(a))
    count, n = 0, len(a)
    for k in range(n):
        piv = m[k, k]
        if piv == 0.0:
            piv = 1e-300
        if piv < 0:
            count += 1
        m[k + 1:, k + 1:] -= np.outer(m[k + 1:, k], m[k, k + 1:]) / piv
    return count


def bisect_eigenvalues(a, tol=1e-12):
    r = np.abs(a).sum(axis=1).max() + 1.0
    out = []
    for i in range(len(a)):
        lo, hi = -r, r
        while hi - lo > tol * max(1.0, abs(lo)):
            mid = (lo + hi) / 2
            if inertia_count_below(a, mid) > i:
                hi = mid
            else:
                lo = mid
        out.append((lo + hi) / 2)
    return out


@given(seeds, st.integers(3, 12))
def test_symmetric_eigenvalues_against_inertia(seed, n):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(n, n))
    a = (g + g.T) / 2
    mine = sorted(z.real for z in eigenvalues(a))
    assert max(abs(z.imag) for z in eigenvalues(a)) < 1e-8
    assert np.allclose(mine, bisect_eigenvalues(a), atol=1e-8)


@given(seeds, st.integers(3, 10))
def test_general_eigenvalues_reconstruct_polynomial(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    lam = eigenvalues(a)
    # trace and determinant are the sum and product of the eigenvalues
    assert abs(sum(lam) - np.trace(a)) < 1e-8 * n
    assert abs(np.prod(lam) - np.linalg.det(a)) < 1e-7 * max(1.0, abs(np.linalg.det(a)))


def test_eigen_size_limit_and_kind_checks():
    with pytest.raises(SizeUnsupported):
        eigenvalues(np.eye(65))
    with pytest.raises(NotDifferentiable):
        LinearSystem(catalog.color_machine().box, [], [], [])
