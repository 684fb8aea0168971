import math

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from wirecalc import catalog, gen
from wirecalc import expr as ex
from wirecalc.continuous import (ContinuousSystem, NewtonConfig, cs_apply, cs_parallel, euler, fs_apply,
                                 fs_parallel, steady_states_affine, steady_states_at, steady_states_newton)
from wirecalc.core import Box, euclid
from wirecalc.errors import InvalidEpsilon, NotAffine, WrongInterpretation
from wirecalc.wiring import compose, identity

seeds = st.integers(0, 10_000)
line = Box(euclid(1, names=["a"]), euclid(1, names=["b"]))


def decay():
    return ContinuousSystem(line, ("x",), ["-x + a"], ["x"])


def points(rng, k, n, count=200):
    return [(tuple(rng.uniform(-2, 2, size=k)), tuple(rng.uniform(-2, 2, size=n))) for _ in range(count)]


def test_feedback_composite_dynamics():
    g = cs_apply(catalog.feedback_wiring(), catalog.feedback_system())
    assert g.state_vars == ("x",)
    assert ex.affine_equal(g.dynamics[0], ex.parse("-x + a"), ["x", "a"])
    assert sympy.simplify(sympy.sympify(ex.to_str(g.dynamics[0]).replace("^", "**")) - sympy.sympify("-x + a")) == 0
    assert ex.to_str(g.readout[0]) == "x"


def test_parallel_with_empty_system():
    empty = ContinuousSystem(Box(), (), [], [])
    f = decay()
    g = cs_parallel(f, empty)
    assert g.n == 1 and g.box.same_types(f.box)
    assert g.f((0.5,), (2.0,)) == f.f((0.5,), (2.0,))


def test_parallel_renames_clashing_states():
    g = cs_parallel(decay(), decay())
    assert g.n == 2
    assert len(set(g.state_vars)) == 2
    assert g.f((1.0, 3.0), (0.0, 0.0)) == (1.0, 3.0)


def test_identity_wiring():
    f = decay()
    g = cs_apply(identity(line), f)
    for a, s in points(np.random.default_rng(0), 1, 1, 20):
        assert g.f(a, s) == f.f(a, s)


@given(seeds)
def test_application_is_functorial(seed):
    rng = np.random.default_rng(seed)
    phi, psi = gen.random_chain(rng, 2, gen.GenConfig(kind="euclid", max_ports=2))
    f = gen.random_affine_system(rng, phi.inner)
    one, two = cs_apply(compose(psi, phi), f), cs_apply(psi, cs_apply(phi, f))
    for a, s in points(rng, psi.outer.inputs.dim, f.n, 50):
        assert np.allclose(one.f(a, s), two.f(a, s), rtol=1e-12, atol=1e-12)
        assert np.allclose(one.read(s), two.read(s), rtol=1e-12, atol=1e-12)


def test_euler_examples():
    step = euler(decay(), 0.5)
    assert step.step((0.0,), (2.0,)) == (1.0,)
    still = euler(ContinuousSystem(line, ("x",), ["0"], ["x"]), 0.3)
    assert still.step((1.0,), (4.2,)) == (4.2,)
    with pytest.raises(InvalidEpsilon):
        euler(decay(), 0.0)


@given(seeds)
def test_euler_of_parallel_is_parallel_of_euler(seed):
    rng = np.random.default_rng(seed)
    cfg = gen.GenConfig(kind="euclid", max_ports=2)
    f1 = gen.random_smooth_system(rng, gen.random_box(rng, cfg))
    f2 = gen.random_smooth_system(rng, gen.random_box(rng, cfg))
    whole = euler(cs_parallel(f1, f2), 0.1)
    parts = fs_parallel(euler(f1, 0.1).as_function_system(), euler(f2, 0.1).as_function_system())
    k = whole.box.inputs.dim
    for a, s in points(rng, k, f1.n + f2.n, 50):
        assert whole.step(a, s) == parts.step(a, s)
        assert whole.read(s) == parts.read(s)


@given(seeds)
def test_euler_commutes_with_wiring(seed):
    rng = np.random.default_rng(seed)
    (w,) = gen.random_chain(rng, 1, gen.GenConfig(kind="euclid", max_ports=2))
    f = gen.random_smooth_system(rng, w.inner)
    direct = euler(cs_apply(w, f), 0.25)
    wired = fs_apply(w, euler(f, 0.25).as_function_system())
    for a, s in points(rng, w.outer.inputs.dim, f.n, 50):
        assert direct.step(a, s) == wired.step(a, s)


def test_affine_root_formula():
    f = catalog.feedback_system()
    for b1, a in [(1.0, 1.0), (0.0, 2.0), (-1.5, 0.25)]:
        sol = steady_states_affine(f, (b1, a))
        assert sol.unique
        assert sol.point()[0] == pytest.approx((3 * b1 - a) / 2, abs=1e-12)


def test_zero_field_every_state_steady():
    f = ContinuousSystem(Box(euclid(), euclid(1)), ("x",), ["0"], ["x"])
    sol = steady_states_affine(f, ())
    assert not sol.empty and len(sol.basis) == 1


def test_inconsistent_affine_system():
    f = ContinuousSystem(Box(euclid(), euclid(1)), ("x",), ["1 + 0*x"], ["x"])
    assert steady_states_affine(f, ()).empty


def test_newton_finds_both_roots():
    f = ContinuousSystem(Box(euclid(), euclid(1)), ("x",), ["x^2 - 1"], ["x"])
    with pytest.raises(NotAffine):
        steady_states_affine(f, ())
    report = steady_states_newton(f, (), NewtonConfig(lo=-3, hi=3, points=7))
    roots = sorted(r.state[0] for r in report.roots)
    assert len(roots) == 2
    assert roots[0] == pytest.approx(-1.0, abs=1e-9)
    assert roots[1] == pytest.approx(1.0, abs=1e-9)
    assert report.heuristic


def test_pointwise_query_filters_by_readout():
    f = ContinuousSystem(Box(euclid(), euclid(1)), ("x",), ["x^2 - 1"], ["x"])
    hits = steady_states_at(f, (), (1.0,), config=NewtonConfig(lo=-3, hi=3, points=7))
    assert [round(h.state[0], 9) for h in hits] == [1.0]


def test_undeclared_variables_rejected():
    with pytest.raises(ValueError):
        ContinuousSystem(line, ("x",), ["x + q"], ["x"])
    with pytest.raises(WrongInterpretation):
        ContinuousSystem(catalog.color_machine().box, ("x",), ["x"], ["x"])


@pytest.mark.parametrize("eps", [0.1, 1.0])
def test_euler_fixed_points_are_roots(eps):
    f = catalog.feedback_system()
    for b1, a in [(1.0, 1.0), (0.5, -2.0)]:
        x = steady_states_affine(f, (b1, a)).point()
        assert euler(f, eps).step((b1, a), tuple(x)) == pytest.approx(tuple(x), abs=1e-12)
        assert math.isclose(f.f((b1, a), tuple(x))[0], 0.0, abs_tol=1e-12)
