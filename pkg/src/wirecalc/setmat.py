"""Matrices of sets of steady states, optionally carrying a linear system per element.

Elements are arbitrary hashable values.  Parallel composition pairs elements
as tuples ``(x, y)``, the same labels :func:`discrete.ds_parallel` gives to
product states.  Wiring application takes a disjoint union over inner output
points; in ``"tagged"`` mode each element is wrapped as ``Tagged(k, e)`` with
``k`` the inner output point, in ``"flat"`` mode elements are kept as they are
and an overlap raises :class:`DisjointnessViolation`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from .core import Box, TypedFiniteSet, box_sum, flat_index, tfs_sum, unflatten
from .discrete import DiscreteSystem, fixed_states
from .errors import BoxMismatch, DisjointnessViolation, ShapeMismatch, SizeCapExceeded, TraceTypeMismatch
from .linear import LinearSystem, ls_apply, ls_parallel
from .semimat import SIZE_CAP, Matrix, NatPlus
from .wiring import WiringDiagram, euclid_twin

MODES = ("tagged", "flat")


@dataclass(frozen=True)
class Tagged:
    tag: tuple
    elem: Hashable

    def __repr__(self):
        return f"{''.join(self.tag)}:{self.elem!r}"


def strip(e):
    """Remove every tag, recursing into pairs."""
    while isinstance(e, Tagged):
        e = e.elem
    if isinstance(e, tuple):
        return tuple(strip(x) for x in e)
    return e


def flatten_label(e) -> str:
    """Tuples printed without separators, tags dropped: ``(("a", 1), "p") -> "a1p"``."""
    e = strip(e)
    if isinstance(e, tuple):
        return "".join(flatten_label(x) for x in e)
    return str(e)


class SetMatrix:
    __slots__ = ("row_space", "col_space", "entries")

    def __init__(self, row_space: TypedFiniteSet, col_space: TypedFiniteSet, entries: Mapping = ()):
        self.row_space = row_space
        self.col_space = col_space
        nr, nc = row_space.size, col_space.size
        clean = {}
        for (i, j), s in dict(entries).items():
            i = i if isinstance(i, (int, np.integer)) else flat_index(row_space, i)
            j = j if isinstance(j, (int, np.integer)) else flat_index(col_space, j)
            if not (0 <= i < nr and 0 <= j < nc):
                raise IndexError(f"entry ({i}, {j}) outside {nr}x{nc}")
            s = frozenset(s)
            if s:
                clean[(int(i), int(j))] = s
        self.entries = clean

    @property
    def shape(self) -> tuple[int, int]:
        return self.row_space.size, self.col_space.size

    def __getitem__(self, key) -> frozenset:
        i, j = key
        if not isinstance(i, (int, np.integer)):
            i = flat_index(self.row_space, i)
        if not isinstance(j, (int, np.integer)):
            j = flat_index(self.col_space, j)
        return self.entries.get((int(i), int(j)), frozenset())

    def same_shape(self, other: "SetMatrix") -> bool:
        return (self.row_space.same_types(other.row_space)
                and self.col_space.same_types(other.col_space))

    def __eq__(self, other):
        if not isinstance(other, SetMatrix):
            return NotImplemented
        return self.same_shape(other) and self.entries == other.entries

    __hash__ = None

    def stripped(self) -> dict:
        """Entries as multisets of untagged elements, for comparing tagged results."""
        return {k: Counter(strip(e) for e in s) for k, s in self.entries.items()}

    def labels(self) -> dict:
        """Entries as sorted lists of flattened labels."""
        return {k: sorted(flatten_label(e) for e in s) for k, s in self.entries.items()}

    def __repr__(self):
        return f"SetMatrix({self.shape[0]}x{self.shape[1]}, {self.labels()})"


def steady_state_sets(f: DiscreteSystem) -> SetMatrix:
    """Entry ``(a, b)`` is the set of ``(a, b)``-steady states."""
    a, s = fixed_states(f)
    entries: dict = {}
    for ai, si in zip(a.tolist(), s.tolist()):
        entries.setdefault((ai, int(f.readout[si])), set()).add(f.states[si])
    return SetMatrix(f.box.inputs, f.box.outputs, entries)


def smat_count(m: SetMatrix) -> Matrix:
    keys = list(m.entries)
    return Matrix(m.row_space, m.col_space, NatPlus,
                  [i for i, _ in keys], [j for _, j in keys], [len(m.entries[k]) for k in keys])


def smat_parallel(m1: SetMatrix, m2: SetMatrix) -> SetMatrix:
    r2, c2 = m2.shape
    entries = {}
    for (i1, j1), s1 in m1.entries.items():
        for (i2, j2), s2 in m2.entries.items():
            entries[(i1 * r2 + i2, j1 * c2 + j2)] = frozenset((x, y) for x in s1 for y in s2)
    return SetMatrix(tfs_sum(m1.row_space, m2.row_space), tfs_sum(m1.col_space, m2.col_space), entries)


def _disjoint_union(parts: list[tuple[tuple, frozenset]], mode: str, where) -> frozenset:
    if mode == "tagged":
        return frozenset(Tagged(k, e) for k, s in parts for e in s)
    if mode != "flat":
        raise ValueError(f"mode must be one of {MODES}")
    out: set = set()
    for _, s in parts:
        if out & s:
            raise DisjointnessViolation(f"entry {where} receives {sorted(map(repr, out & s))} twice")
        out |= s
    return frozenset(out)


def smat_apply(w: WiringDiagram, m: SetMatrix, mode: str = "tagged") -> SetMatrix:
    """``N[i, j]`` is the disjoint union over ``k`` with ``out_eval(k) = j`` of ``M[in_eval(i, k), k]``."""
    if not (m.row_space.same_types(w.inner.inputs) and m.col_space.same_types(w.inner.outputs)):
        raise ShapeMismatch("set matrix index spaces do not match the diagram's inner box")
    ny, nx = w.outer.inputs.size, w.inner.outputs.size
    if ny * nx > SIZE_CAP:
        raise SizeCapExceeded(f"{ny * nx} lookups exceed the cap")
    cols_with_entries = sorted({k for _, k in m.entries})
    xout = w.inner.outputs
    parts: dict = {}
    table = w.in_table
    for k in cols_with_entries:
        ksym = xout.symbols(unflatten(xout, k))
        j = int(w.out_table[k])
        for i in range(ny):
            s = m.entries.get((int(table[i, k]), k))
            if s:
                parts.setdefault((i, j), []).append((ksym, s))
    entries = {key: _disjoint_union(p, mode, key) for key, p in parts.items()}
    return SetMatrix(w.outer.inputs, w.outer.outputs, entries)


def smat_multiply(m1: SetMatrix, m2: SetMatrix, mode: str = "flat") -> SetMatrix:
    """Serial composition: entry ``(i, j)`` pairs elements through every middle index ``k``.

    Equal to :func:`smat_apply` on the serial diagram applied to
    ``smat_parallel(m1, m2)``, with tags being the inner output point ``(k, j)``.
    """
    if not m1.col_space.same_types(m2.row_space):
        raise ShapeMismatch("inner index spaces differ")
    by_row: dict = {}
    for (k, j), s in m2.entries.items():
        by_row.setdefault(k, []).append((j, s))
    mid, right = m1.col_space, m2.col_space
    parts: dict = {}
    for (i, k), s1 in m1.entries.items():
        for j, s2 in by_row.get(k, ()):
            tag = mid.symbols(unflatten(mid, k)) + right.symbols(unflatten(right, j))
            parts.setdefault((i, j), []).append((tag, frozenset((x, y) for x in s1 for y in s2)))
    entries = {key: _disjoint_union(sorted(p, key=lambda t: t[0]), mode, key) for key, p in parts.items()}
    return SetMatrix(m1.row_space, m2.col_space, entries)


def smat_partial_trace(m: SetMatrix, row_ports: Sequence[int], col_ports: Sequence[int],
                       mode: str = "flat") -> SetMatrix:
    """Feedback: ``Tr[i, j]`` is the disjoint union over ``k`` of ``M[(k, i), (k, j)]``.

    Tags are the full column point, as application of the feedback diagram would give.
    """
    row_ports, col_ports = list(row_ports), list(col_ports)
    if len(row_ports) != len(col_ports):
        raise TraceTypeMismatch("traced row and column port lists differ in length")
    for p, q in zip(row_ports, col_ports):
        if m.row_space.types[p] != m.col_space.types[q]:
            raise TraceTypeMismatch(f"row port {m.row_space.names[p]} and column port "
                                    f"{m.col_space.names[q]} have different types")
    keep_r = [p for p in range(len(m.row_space)) if p not in row_ports]
    keep_c = [q for q in range(len(m.col_space)) if q not in col_ports]
    new_rows = TypedFiniteSet(tuple(m.row_space.ports[p] for p in keep_r))
    new_cols = TypedFiniteSet(tuple(m.col_space.ports[q] for q in keep_c))
    parts: dict = {}
    for (i, j), s in m.entries.items():
        ri, cj = unflatten(m.row_space, i), unflatten(m.col_space, j)
        if any(ri[p] != cj[q] for p, q in zip(row_ports, col_ports)):
            continue
        key = (flat_index(new_rows, tuple(ri[p] for p in keep_r)),
               flat_index(new_cols, tuple(cj[q] for q in keep_c)))
        parts.setdefault(key, []).append((m.col_space.symbols(cj), s))
    entries = {key: _disjoint_union(p, mode, key) for key, p in parts.items()}
    return SetMatrix(new_rows, new_cols, entries)


# -- matrices with linear-system payloads ------------------------------------

@dataclass(frozen=True, eq=False)
class QMatrix:
    """A set matrix whose every element carries a linear system.

    ``payload_box`` is the Euclidean twin of the matrix's box that all
    payloads live on; ``payload`` is keyed by ``(row, col, element)``.
    """

    base: SetMatrix
    payload: Mapping
    payload_box: Box

    def __post_init__(self):
        expected = {(i, j, e) for (i, j), s in self.base.entries.items() for e in s}
        if set(self.payload) != expected:
            raise ValueError("payload must be defined exactly on the elements of the base matrix")
        for key, l in self.payload.items():
            if not l.box.same_types(self.payload_box):
                raise BoxMismatch(f"payload at {key!r} lives on {l.box}, expected {self.payload_box}")

    def __getitem__(self, key) -> LinearSystem:
        return self.payload[key]


def _dims_for(finite_box: Box, euclid_box: Box) -> dict:
    dims: dict = {}
    for tf, te in zip(finite_box.inputs.types + finite_box.outputs.types,
                      euclid_box.inputs.types + euclid_box.outputs.types):
        if dims.setdefault(tf, te.dim) != te.dim:
            raise BoxMismatch(f"alphabet {tf} is given two different dimensions")
    return dims


def qmat_parallel(q1: QMatrix, q2: QMatrix) -> QMatrix:
    base = smat_parallel(q1.base, q2.base)
    r2, c2 = q2.base.shape
    payload = {}
    for (i1, j1, x), l1 in q1.payload.items():
        for (i2, j2, y), l2 in q2.payload.items():
            payload[(i1 * r2 + i2, j1 * c2 + j2, (x, y))] = ls_parallel(l1, l2)
    return QMatrix(base, payload, box_sum(q1.payload_box, q2.payload_box))


def qmat_apply(w: WiringDiagram, q: QMatrix, mode: str = "tagged") -> QMatrix:
    """Base by :func:`smat_apply`; each payload goes through the Euclidean twin of ``w``."""
    if len(q.payload_box.inputs) != len(w.inner.inputs) or len(q.payload_box.outputs) != len(w.inner.outputs):
        raise BoxMismatch("payload box does not match the diagram's inner box")
    twin = euclid_twin(w, _dims_for(w.inner, q.payload_box))
    base = smat_apply(w, q.base, mode)
    xout = w.inner.outputs
    # find each new element's origin (row, col, element) in q.base
    payload = {}
    for (i, j), s in base.entries.items():
        for e in s:
            if mode == "tagged":
                k = flat_index(xout, e.tag)
                src = (int(w.in_table[i, k]), k, e.elem)
            else:
                src = _flat_origin(w, q.base, i, j, e)
            payload[(i, j, e)] = ls_apply(twin, q.payload[src])
    return QMatrix(base, payload, twin.outer)


def _flat_origin(w: WiringDiagram, m: SetMatrix, i: int, j: int, e) -> tuple:
    for k in np.nonzero(w.out_table == j)[0].tolist():
        r = int(w.in_table[i, k])
        if e in m[r, k]:
            return r, k, e
    raise KeyError(e)


def constant_payload(m: SetMatrix, payload_box: Box, system: LinearSystem | None = None) -> QMatrix:
    """Attach the same linear system (default: zero-dimensional) to every element."""
    if system is None:
        system = LinearSystem.zero(payload_box, 0)
    payload = {(i, j, e): system for (i, j), s in m.entries.items() for e in s}
    return QMatrix(m, payload, payload_box)


def qmat_forget(q: QMatrix) -> SetMatrix:
    return q.base
