"""Complete semirings and sparse matrices indexed by dependent products.

Matrices are stored in coordinate form (``rows``, ``cols``, ``vals`` arrays)
sorted by flat index with no explicit zeros.  Because zeros are never stored,
products of stored values never hit the ``0 * inf`` case; the semiring ``mul``
still implements it for scalar use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import TypedFiniteSet, digits, flat_index, flatten_digits, tfs_sum
from .errors import (
    ArithmeticOverflow,
    ShapeMismatch,
    SizeCapExceeded,
    TraceTypeMismatch,
)
from .wiring import WiringDiagram

INF = math.inf
SIZE_CAP = 10**8


class Semiring:
    name: str
    dtype: object
    zero: object
    one: object

    def coerce(self, v):
        raise NotImplementedError

    def add(self, a, b):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def is_infinite(self, a) -> bool:
        return a == INF

    def check_array(self, vals: np.ndarray) -> np.ndarray:
        return vals

    def sum(self, items: Iterable):
        total = self.zero
        for x in items:
            total = self.add(total, x)
        return total

    def __repr__(self):
        return self.name

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(self.name)


class NatPlusSemiring(Semiring):
    """Natural numbers with infinity; finite values are checked 64-bit."""

    name = "nat"
    dtype = object
    zero = 0
    one = 1
    MAX = 2**64 - 1

    def coerce(self, v):
        if v == INF:
            return INF
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            if isinstance(v, float) and v.is_integer():
                v = int(v)
            else:
                raise TypeError(f"not a natural number: {v!r}")
        v = int(v)
        if v < 0:
            raise ValueError(f"negative value {v} in the natural numbers")
        return self._checked(v)

    def _checked(self, v):
        if v != INF and v > self.MAX:
            raise ArithmeticOverflow(f"value {v} exceeds 64-bit range")
        return v

    def add(self, a, b):
        if a == INF or b == INF:
            return INF
        return self._checked(a + b)

    def mul(self, a, b):
        if a == 0 or b == 0:
            return 0
        if a == INF or b == INF:
            return INF
        return self._checked(a * b)

    def check_array(self, vals):
        for v in vals:
            if v != INF and v > self.MAX:
                raise ArithmeticOverflow(f"value {v} exceeds 64-bit range")
        return vals


class RealPlusSemiring(Semiring):
    """Non-negative doubles with infinity and ``0 * inf = 0``."""

    name = "real"
    dtype = np.float64
    zero = 0.0
    one = 1.0

    def coerce(self, v):
        v = float(v)
        if math.isnan(v) or v < 0:
            raise ValueError(f"not a non-negative real: {v!r}")
        return v

    def add(self, a, b):
        return a + b

    def mul(self, a, b):
        if a == 0 or b == 0:
            return 0.0
        return a * b

    def check_array(self, vals):
        if np.isnan(vals).any():
            raise ArithmeticError("NaN produced in non-negative reals")
        return vals


NatPlus = NatPlusSemiring()
RealPlus = RealPlusSemiring()
SEMIRINGS = {"nat": NatPlus, "real": RealPlus}


def _empty(semiring):
    return np.empty(0, dtype=semiring.dtype)


def _reduce(keys: np.ndarray, vals: np.ndarray, semiring: Semiring):
    """Sum ``vals`` over equal ``keys``; returns sorted unique keys and sums."""
    if len(keys) == 0:
        return keys.astype(np.int64), _empty(semiring)
    order = np.argsort(keys, kind="stable")
    keys, vals = keys[order], vals[order]
    uniq, starts = np.unique(keys, return_index=True)
    sums = np.add.reduceat(vals, starts) if len(vals) else vals
    return uniq, sums


class Matrix:
    """A matrix over ``semiring`` with rows and columns indexed by finite points."""

    __slots__ = ("row_space", "col_space", "semiring", "rows", "cols", "vals")

    def __init__(self, row_space: TypedFiniteSet, col_space: TypedFiniteSet, semiring: Semiring,
                 rows=(), cols=(), vals=(), _canonical: bool = False):
        self.row_space = row_space
        self.col_space = col_space
        self.semiring = semiring
        n_rows, n_cols = row_space.size, col_space.size
        rows = np.asarray(rows, dtype=np.int64).reshape(-1)
        cols = np.asarray(cols, dtype=np.int64).reshape(-1)
        if semiring.dtype is object:
            vals = np.array([semiring.coerce(v) for v in vals] if not _canonical else vals, dtype=object)
        else:
            vals = np.asarray(vals, dtype=np.float64).reshape(-1)
            if not _canonical and ((vals < 0).any() or np.isnan(vals).any()):
                raise ValueError("negative or NaN entry in a non-negative real matrix")
        vals = vals.reshape(-1)
        if not (len(rows) == len(cols) == len(vals)):
            raise ValueError("rows, cols and vals must have equal length")
        if not _canonical:
            if len(rows) and (rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols):
                raise IndexError("matrix entry index out of range")
            keys, vals = _reduce(rows * n_cols + cols, vals, semiring)
            rows, cols = np.divmod(keys, n_cols) if n_cols else (keys, keys)
        keep = vals != 0
        if not keep.all():
            rows, cols, vals = rows[keep], cols[keep], vals[keep]
        semiring.check_array(vals)
        self.rows, self.cols, self.vals = rows, cols, vals

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_dense(cls, row_space, col_space, semiring, data: Sequence[Sequence]) -> "Matrix":
        data = list(map(list, data))
        if len(data) != row_space.size or any(len(r) != col_space.size for r in data):
            raise ShapeMismatch(f"dense data is not {row_space.size}x{col_space.size}")
        rows, cols, vals = [], [], []
        for i, r in enumerate(data):
            for j, v in enumerate(r):
                if v != 0:
                    rows.append(i)
                    cols.append(j)
                    vals.append(v)
        return cls(row_space, col_space, semiring, rows, cols, vals)

    @classmethod
    def from_entries(cls, row_space, col_space, semiring, entries: Mapping) -> "Matrix":
        """Entries keyed by flat indices or by points."""
        rows, cols, vals = [], [], []
        for (i, j), v in entries.items():
            rows.append(i if isinstance(i, (int, np.integer)) else flat_index(row_space, i))
            cols.append(j if isinstance(j, (int, np.integer)) else flat_index(col_space, j))
            vals.append(v)
        return cls(row_space, col_space, semiring, rows, cols, vals)

    @classmethod
    def identity(cls, space: TypedFiniteSet, semiring: Semiring) -> "Matrix":
        n = space.size
        return cls(space, space, semiring, np.arange(n), np.arange(n), [semiring.one] * n)

    # -- access -----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return self.row_space.size, self.col_space.size

    @property
    def nnz(self) -> int:
        return len(self.vals)

    @property
    def entries(self) -> dict:
        return {(int(i), int(j)): (v if self.semiring.dtype is object else float(v))
                for i, j, v in zip(self.rows, self.cols, self.vals)}

    def __getitem__(self, key):
        i, j = key
        if not isinstance(i, (int, np.integer)):
            i = flat_index(self.row_space, i)
        if not isinstance(j, (int, np.integer)):
            j = flat_index(self.col_space, j)
        k = int(i) * self.shape[1] + int(j)
        keys = self.rows * self.shape[1] + self.cols
        pos = np.searchsorted(keys, k)
        if pos < len(keys) and keys[pos] == k:
            v = self.vals[pos]
            return v if self.semiring.dtype is object else float(v)
        return self.semiring.zero

    def dense(self) -> list[list]:
        out = [[self.semiring.zero] * self.shape[1] for _ in range(self.shape[0])]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def to_array(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.float64)
        out[self.rows, self.cols] = np.asarray(self.vals, dtype=np.float64)
        return out

    def same_shape(self, other: "Matrix") -> bool:
        return (self.row_space.same_types(other.row_space)
                and self.col_space.same_types(other.col_space))

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return (self.semiring == other.semiring and self.same_shape(other)
                and np.array_equal(self.rows, other.rows) and np.array_equal(self.cols, other.cols)
                and all(a == b for a, b in zip(self.vals, other.vals)))

    __hash__ = None

    def allclose(self, other: "Matrix", tol: float = 1e-9) -> bool:
        """Entry-wise agreement, relative ``tol`` on finite values; infinities must match."""
        if not self.same_shape(other):
            return False
        a, b = self.to_array(), other.to_array()
        if not np.array_equal(np.isinf(a), np.isinf(b)):
            return False
        fin = ~np.isinf(a)
        return bool(np.all(np.abs(a[fin] - b[fin]) <= tol * np.maximum(1.0, np.abs(b[fin]))))

    def __repr__(self):
        return f"Matrix({self.semiring}, {self.shape[0]}x{self.shape[1]}, {self.dense()})"


def _check_cap(n: int, cap: int):
    if n > cap:
        raise SizeCapExceeded(f"{n} logical entries exceed the cap of {cap}")


def kronecker(m1: Matrix, m2: Matrix, cap: int = SIZE_CAP) -> Matrix:
    """Parallel composition: block matrix with ``m1`` as the major factor."""
    if m1.semiring != m2.semiring:
        raise TypeError("matrices over different semirings")
    r1, c1 = m1.shape
    r2, c2 = m2.shape
    _check_cap(r1 * r2 * c1 * c2, cap)
    n1, n2 = m1.nnz, m2.nnz
    rows = np.repeat(m1.rows * r2, n2) + np.tile(m2.rows, n1)
    cols = np.repeat(m1.cols * c2, n2) + np.tile(m2.cols, n1)
    vals = np.repeat(m1.vals, n2) * np.tile(m2.vals, n1) if n1 and n2 else _empty(m1.semiring)
    rows_space = _sum_space(m1.row_space, m2.row_space)
    cols_space = _sum_space(m1.col_space, m2.col_space)
    keys, vals = _reduce(rows * (c1 * c2) + cols, vals, m1.semiring)
    rows, cols = np.divmod(keys, c1 * c2) if c1 * c2 else (keys, keys)
    return Matrix(rows_space, cols_space, m1.semiring, rows, cols, vals, _canonical=True)


def _sum_space(a: TypedFiniteSet, b: TypedFiniteSet) -> TypedFiniteSet:
    return tfs_sum(a, b)


def apply(w: WiringDiagram, m: Matrix, cap: int = SIZE_CAP) -> Matrix:
    """``N[i, j] = sum over k with out_eval(k) = j of M[in_eval(i, k), k]``."""
    if not (m.row_space.same_types(w.inner.inputs) and m.col_space.same_types(w.inner.outputs)):
        raise ShapeMismatch("matrix index spaces do not match the diagram's inner box")
    ny, nx = w.outer.inputs.size, w.inner.outputs.size
    _check_cap(ny * nx, cap)
    n_cols = m.shape[1]
    mkeys = m.rows * n_cols + m.cols
    query = (w.in_table * n_cols + np.arange(nx)[None, :]).reshape(-1)
    if len(mkeys):
        pos = np.minimum(np.searchsorted(mkeys, query), len(mkeys) - 1)
        hit = mkeys[pos] == query
    else:
        pos = np.zeros(len(query), dtype=np.int64)
        hit = np.zeros(len(query), dtype=bool)
    flat = np.nonzero(hit)[0]
    i, k = np.divmod(flat, nx)
    nj = w.outer.outputs.size
    keys, vals = _reduce(i * nj + w.out_table[k], m.vals[pos[flat]], m.semiring)
    rows, cols = np.divmod(keys, nj) if nj else (keys, keys)
    return Matrix(w.outer.inputs, w.outer.outputs, m.semiring, rows, cols, vals, _canonical=True)


def multiply(m1: Matrix, m2: Matrix) -> Matrix:
    """Ordinary semiring matrix product."""
    if m1.semiring != m2.semiring:
        raise TypeError("matrices over different semirings")
    if not m1.col_space.same_types(m2.row_space):
        raise ShapeMismatch("inner index spaces differ")
    order = np.argsort(m2.rows, kind="stable")
    r2, c2, v2 = m2.rows[order], m2.cols[order], m2.vals[order]
    lo = np.searchsorted(r2, m1.cols, side="left")
    hi = np.searchsorted(r2, m1.cols, side="right")
    counts = hi - lo
    idx1 = np.repeat(np.arange(m1.nnz), counts)
    starts = np.repeat(lo - np.cumsum(counts) + counts, counts)
    idx2 = starts + np.arange(len(idx1)) if len(idx1) else np.zeros(0, dtype=np.int64)
    n_cols = m2.shape[1]
    vals = m1.vals[idx1] * v2[idx2] if len(idx1) else _empty(m1.semiring)
    keys, vals = _reduce(m1.rows[idx1] * n_cols + c2[idx2], vals, m1.semiring)
    rows, cols = np.divmod(keys, n_cols) if n_cols else (keys, keys)
    return Matrix(m1.row_space, m2.col_space, m1.semiring, rows, cols, vals, _canonical=True)


def partial_trace(m: Matrix, row_ports: Sequence[int], col_ports: Sequence[int]) -> Matrix:
    """Sum over the traced factor: ``Tr[i, j] = sum_k M[(k, i), (k, j)]``.

    ``row_ports[t]`` and ``col_ports[t]`` name the two copies of the t-th
    traced port; the remaining ports keep their order.
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
    new_rows = type(m.row_space)(tuple(m.row_space.ports[p] for p in keep_r))
    new_cols = type(m.col_space)(tuple(m.col_space.ports[q] for q in keep_c))
    rd, cd = digits(m.row_space, m.rows), digits(m.col_space, m.cols)
    diag = np.all(rd[:, row_ports] == cd[:, col_ports], axis=1) if row_ports else np.ones(m.nnz, bool)
    ri = flatten_digits(new_rows, rd[diag][:, keep_r])
    ci = flatten_digits(new_cols, cd[diag][:, keep_c])
    nc = new_cols.size
    keys, vals = _reduce(ri * nc + ci, m.vals[diag], m.semiring)
    rows, cols = np.divmod(keys, nc) if nc else (keys, keys)
    return Matrix(new_rows, new_cols, m.semiring, rows, cols, vals, _canonical=True)


def mat_map(m: Matrix, semiring: Semiring, f) -> Matrix:
    """Apply ``f`` to every stored value, landing in ``semiring``."""
    return Matrix(m.row_space, m.col_space, semiring, m.rows, m.cols, [f(v) for v in m.vals])
