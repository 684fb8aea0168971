import pytest
from hypothesis import given, strategies as st

from wirecalc.core import (Box, Euclid, Finite, TypedFiniteSet, TypedFunction, box_sum, euclid, finite,
                           flat_index, reindex, split_point, tfs_sum, unflatten)
from wirecalc.errors import IndexOutOfRange, InvalidPoint, MixedPortKinds, NotEnumerable, TypeMismatch

TF = ("T", "F")


def test_flat_index_examples():
    assert flat_index(finite(TF), ("T",)) == 0
    assert flat_index(finite(TF, TF), ("F", "T")) == 2
    assert flat_index(finite(("Red", "Green", "Blue")), ("Blue",)) == 2


def test_unflatten_examples():
    t = finite(TF, TF)
    assert t.symbols(unflatten(t, 3)) == ("F", "F")
    four = finite(("1", "2", "3", "4"))
    assert four.symbols(unflatten(four, 1)) == ("2",)


def test_empty_set_has_one_point():
    t = TypedFiniteSet()
    assert t.size == 1
    assert flat_index(t, ()) == 0
    assert unflatten(t, 0) == ()


alphabet_sizes = st.lists(st.integers(1, 4), min_size=0, max_size=4)


@given(alphabet_sizes)
def test_flatten_unflatten_roundtrip(sizes):
    t = finite(*[[str(k) for k in range(n)] for n in sizes])
    for i in range(t.size):
        assert flat_index(t, unflatten(t, i)) == i


@given(alphabet_sizes, st.data())
def test_digits_match_scalar_versions(sizes, data):
    t = finite(*[[str(k) for k in range(n)] for n in sizes])
    table = t.digit_table()
    assert table.shape == (t.size, len(sizes))
    for i in range(t.size):
        assert tuple(table[i]) == unflatten(t, i)


def test_bad_points_and_indices():
    t = finite(TF)
    with pytest.raises(InvalidPoint):
        flat_index(t, ("X",))
    with pytest.raises(InvalidPoint):
        flat_index(t, ("T", "T"))
    with pytest.raises(IndexOutOfRange):
        unflatten(t, 2)
    with pytest.raises(NotEnumerable):
        flat_index(euclid(2), (0.0, 1.0))


def test_mixed_kinds_rejected():
    with pytest.raises(MixedPortKinds):
        TypedFiniteSet((("a", Finite(TF)), ("b", Euclid(1))))
    with pytest.raises(MixedPortKinds):
        Box(finite(TF), euclid(1))


def test_reindex_identity_and_diagonal():
    t = finite(TF)
    assert reindex(TypedFunction.identity(t), ("T",)) == (0,)
    diag = TypedFunction(finite(TF, TF), t, (0, 0))
    assert diag.source.symbols(reindex(diag, ("F",))) == ("F", "F")


def test_reindex_explicit_table():
    # inner inputs a, b, c, d read from (h, i, e, f, g)
    b = finite(TF)
    target = TypedFiniteSet(tuple((n, b.types[0]) for n in "hiefg"))
    source = TypedFiniteSet(tuple((n, b.types[0]) for n in "abcd"))
    gamma = TypedFunction(source, target, (0, 4, 3, 1))
    assert reindex(gamma, (0, 1, 0, 1, 0)) == (0, 0, 1, 1)


def test_reindex_euclidean_copies_blocks():
    gamma = TypedFunction(euclid(2, 1), euclid(1, 2), (1, 0))
    assert reindex(gamma, (5.0, 1.0, 2.0)) == (1.0, 2.0, 5.0)


def test_typed_function_violations():
    g = TypedFunction(finite(TF), finite(("x", "y", "z")), (0,))
    assert g.violations() == [("p0", "p0")]
    with pytest.raises(TypeMismatch):
        g.check()


def test_sum_unit_and_size():
    t = finite(TF, names=["a"])
    assert tfs_sum(TypedFiniteSet(), t).same_types(t)
    u = finite(("x", "y", "z"), names=["b"])
    assert tfs_sum(t, u).size == t.size * u.size


def test_sum_prefixes_on_collision():
    t = finite(TF, names=["a"])
    s = tfs_sum(t, t)
    assert s.names == ("L.a", "R.a")
    assert tfs_sum(t, t, tags=("x", "y")).names == ("x.a", "y.a")


def test_box_splits_recompose():
    a1, a2 = Finite(("0", "1")), Finite(("u", "v", "w"))
    b1, b2, b3 = Finite(("p",)), Finite(("q", "r")), Finite(("s", "t"))
    x = Box(TypedFiniteSet((("A1", a1), ("A2", a2))),
            TypedFiniteSet((("B1", b1), ("B2", b2), ("B3", b3))))
    left = Box(TypedFiniteSet((("A1", a1),)), TypedFiniteSet((("B1", b1), ("B2", b2))))
    right = Box(TypedFiniteSet((("A2", a2),)), TypedFiniteSet((("B3", b3),)))
    assert box_sum(left, right) == x


@given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.lists(st.integers(1, 3), max_size=3))
def test_split_point_inverts_concatenation(d1, d2):
    p1, p2 = euclid(*d1), euclid(*d2)
    pt = tuple(float(i) for i in range(p1.dim + p2.dim))
    left, right = split_point(p1, pt)
    assert left + right == pt
    assert len(left) == p1.dim
