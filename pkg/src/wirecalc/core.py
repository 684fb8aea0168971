"""Typed finite sets, boxes and the flat indexing of their dependent products.

A typed finite set is an ordered list of named ports.  Every port carries a
type: either a finite alphabet of symbols or a Euclidean dimension.  Points of
the dependent product are plain tuples:

* for finite ports, one symbol *index* per port;
* for Euclidean ports, the concatenated real coordinates (a port of
  dimension ``n`` contributes ``n`` floats).

Finite points are linearised in mixed radix with port 0 most significant,
which is the layout a Kronecker product produces for block matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import prod
from typing import Iterator, Sequence, Union

import numpy as np

from .errors import (
    IndexOutOfRange,
    InvalidPoint,
    MixedPortKinds,
    NotEnumerable,
    TypeMismatch,
)

Point = tuple


@dataclass(frozen=True)
class Finite:
    alphabet: tuple[str, ...]

    def __post_init__(self):
        alphabet = tuple(self.alphabet)
        for sym in alphabet:
            if not isinstance(sym, str) or not sym:
                raise ValueError(f"alphabet symbols must be non-empty strings, got {sym!r}")
        if len(set(alphabet)) != len(alphabet):
            raise ValueError(f"duplicate symbol in alphabet {alphabet}")
        object.__setattr__(self, "alphabet", alphabet)

    @property
    def size(self) -> int:
        return len(self.alphabet)

    def index(self, symbol: str) -> int:
        try:
            return self.alphabet.index(symbol)
        except ValueError:
            raise InvalidPoint(f"symbol {symbol!r} not in alphabet {self.alphabet}") from None

    def __str__(self):
        return "{" + ", ".join(self.alphabet) + "}"


@dataclass(frozen=True)
class Euclid:
    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 0:
            raise ValueError(f"Euclidean dimension must be a natural number, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))

    def __str__(self):
        return f"R {self.dim}"


PortType = Union[Finite, Euclid]


def _kind(t: PortType) -> str:
    return "finite" if isinstance(t, Finite) else "euclid"


@dataclass(frozen=True)
class TypedFiniteSet:
    """Ordered ports ``(name, type)``; all ports share one kind."""

    ports: tuple[tuple[str, PortType], ...] = ()

    def __post_init__(self):
        ports = tuple((str(n), t) for n, t in self.ports)
        names = [n for n, _ in ports]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate port names in {names}")
        for n, t in ports:
            if not isinstance(t, (Finite, Euclid)):
                raise TypeError(f"port {n!r} has non-port type {t!r}")
        if len({_kind(t) for _, t in ports}) > 1:
            raise MixedPortKinds(f"ports mix finite and Euclidean types: {names}")
        object.__setattr__(self, "ports", ports)

    @classmethod
    def of(cls, *types: PortType, names: Sequence[str] | None = None) -> "TypedFiniteSet":
        if names is None:
            names = [f"p{i}" for i in range(len(types))]
        return cls(tuple(zip(names, types)))

    def __len__(self):
        return len(self.ports)

    def __iter__(self):
        return iter(self.ports)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.ports)

    @cached_property
    def types(self) -> tuple[PortType, ...]:
        return tuple(t for _, t in self.ports)

    @cached_property
    def kind(self) -> str | None:
        return _kind(self.ports[0][1]) if self.ports else None

    @cached_property
    def is_finite(self) -> bool:
        return self.kind in ("finite", None)

    @cached_property
    def is_euclid(self) -> bool:
        return self.kind in ("euclid", None)

    def port(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None

    @cached_property
    def radices(self) -> tuple[int, ...]:
        if not self.is_finite:
            raise NotEnumerable(f"Euclidean ports cannot be enumerated: {self.names}")
        return tuple(t.size for t in self.types)

    @cached_property
    def size(self) -> int:
        """Number of points of the dependent product."""
        return prod(self.radices)

    @cached_property
    def dims(self) -> tuple[int, ...]:
        if not self.is_euclid:
            raise TypeMismatch(f"finite ports have no dimension: {self.names}")
        return tuple(t.dim for t in self.types)

    @cached_property
    def dim(self) -> int:
        return sum(self.dims)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for d in self.dims:
            out.append(acc)
            acc += d
        return tuple(out)

    def coordinate_names(self) -> tuple[str, ...]:
        """Names of the real coordinates, ``p`` or ``p_1 .. p_n`` per port."""
        names = []
        for n, t in self.ports:
            if t.dim == 1:
                names.append(n)
            else:
                names.extend(f"{n}_{i + 1}" for i in range(t.dim))
        return tuple(names)

    def same_types(self, other: "TypedFiniteSet") -> bool:
        return self.types == other.types

    def renamed(self, names: Sequence[str]) -> "TypedFiniteSet":
        return TypedFiniteSet(tuple(zip(names, self.types)))

    def prefixed(self, tag: str) -> "TypedFiniteSet":
        return self.renamed([f"{tag}.{n}" for n in self.names])

    # -- points ---------------------------------------------------------
    def point(self, *coords) -> Point:
        """Build a point from symbols (finite) or reals (Euclidean)."""
        if len(coords) == 1 and isinstance(coords[0], (tuple, list)):
            coords = tuple(coords[0])
        return self.coerce(coords)

    def coerce(self, pt) -> Point:
        pt = tuple(pt)
        if self.is_finite:
            if len(pt) != len(self.ports):
                raise InvalidPoint(f"expected {len(self.ports)} coordinates, got {len(pt)}")
            out = []
            for c, t in zip(pt, self.types):
                if isinstance(c, str):
                    out.append(t.index(c))
                elif isinstance(c, (int, np.integer)) and not isinstance(c, bool) and 0 <= c < t.size:
                    out.append(int(c))
                else:
                    raise InvalidPoint(f"coordinate {c!r} invalid for alphabet {t.alphabet}")
            return tuple(out)
        if len(pt) != self.dim:
            raise InvalidPoint(f"expected {self.dim} real coordinates, got {len(pt)}")
        try:
            return tuple(float(c) for c in pt)
        except (TypeError, ValueError):
            raise InvalidPoint(f"non-real coordinate in {pt!r}") from None

    def symbols(self, pt: Point) -> tuple[str, ...]:
        pt = self.coerce(pt)
        return tuple(t.alphabet[i] for i, t in zip(pt, self.types))

    def label(self, pt: Point, sep: str = "") -> str:
        return sep.join(self.symbols(pt))

    def points(self) -> Iterator[Point]:
        for i in range(self.size):
            yield unflatten(self, i)

    def digit_table(self) -> np.ndarray:
        """All points as an ``(size, len(ports))`` array, in flat order."""
        return digits(self, np.arange(self.size, dtype=np.int64))

    def __str__(self):
        return "<" + ", ".join(f"{n}: {t}" for n, t in self.ports) + ">"


EMPTY = TypedFiniteSet()


def flat_index(tfs: TypedFiniteSet, pt: Point) -> int:
    if not tfs.is_finite:
        raise NotEnumerable(f"Euclidean ports cannot be enumerated: {tfs.names}")
    pt = tfs.coerce(pt)
    idx = 0
    for c, r in zip(pt, tfs.radices):
        idx = idx * r + c
    return idx


def unflatten(tfs: TypedFiniteSet, idx: int) -> Point:
    size = tfs.size
    if not isinstance(idx, (int, np.integer)) or not 0 <= idx < size:
        raise IndexOutOfRange(f"index {idx!r} outside [0, {size})")
    idx = int(idx)
    out = []
    for r in reversed(tfs.radices):
        idx, c = divmod(idx, r)
        out.append(c)
    return tuple(reversed(out))


def digits(tfs: TypedFiniteSet, idx: np.ndarray) -> np.ndarray:
    """Vectorised :func:`unflatten`; returns one row of coordinates per index."""
    idx = np.asarray(idx, dtype=np.int64)
    radices = tfs.radices
    out = np.empty(idx.shape + (len(radices),), dtype=np.int64)
    rest = idx.copy()
    for p in range(len(radices) - 1, -1, -1):
        rest, out[..., p] = np.divmod(rest, radices[p])
    return out


def flatten_digits(tfs: TypedFiniteSet, coords: np.ndarray) -> np.ndarray:
    """Vectorised :func:`flat_index` over the last axis of ``coords``."""
    coords = np.asarray(coords, dtype=np.int64)
    out = np.zeros(coords.shape[:-1], dtype=np.int64)
    for p, r in enumerate(tfs.radices):
        out = out * r + coords[..., p]
    return out


def tfs_sum(p1: TypedFiniteSet, p2: TypedFiniteSet, tags: tuple[str, str] | None = None) -> TypedFiniteSet:
    """Concatenate two typed finite sets.

    Names are kept when they do not collide; otherwise (or when ``tags`` is
    given) each side is prefixed with its owner tag, ``L``/``R`` by default.
    """
    if tags is None and set(p1.names) & set(p2.names):
        tags = ("L", "R")
    if tags is not None:
        p1, p2 = p1.prefixed(tags[0]), p2.prefixed(tags[1])
    return TypedFiniteSet(p1.ports + p2.ports)


def split_point(p1: TypedFiniteSet, pt: Point) -> tuple[Point, Point]:
    """Inverse of concatenation for a point of ``tfs_sum(p1, p2)``."""
    k = p1.dim if p1.kind == "euclid" else len(p1)
    return tuple(pt[:k]), tuple(pt[k:])


@dataclass(frozen=True)
class TypedFunction:
    """A map of ports ``source -> target`` that should respect port types."""

    source: TypedFiniteSet
    target: TypedFiniteSet
    mapping: tuple[int, ...]

    def __post_init__(self):
        mapping = tuple(int(m) for m in self.mapping)
        object.__setattr__(self, "mapping", mapping)
        if len(mapping) != len(self.source):
            raise ValueError(f"mapping has {len(mapping)} entries for {len(self.source)} source ports")
        for m in mapping:
            if not 0 <= m < len(self.target):
                raise ValueError(f"mapping target {m} outside {len(self.target)} ports")

    def violations(self) -> list[tuple[str, str]]:
        """Pairs ``(source port, target port)`` whose types disagree."""
        bad = []
        for p, q in enumerate(self.mapping):
            if self.source.types[p] != self.target.types[q]:
                bad.append((self.source.names[p], self.target.names[q]))
        return bad

    def check(self) -> "TypedFunction":
        bad = self.violations()
        if bad:
            raise TypeMismatch(f"typed function does not respect types at {bad}")
        return self

    def __call__(self, p: int) -> int:
        return self.mapping[p]

    def then(self, other: "TypedFunction") -> "TypedFunction":
        """``other ∘ self``."""
        return TypedFunction(self.source, other.target, tuple(other.mapping[m] for m in self.mapping))

    @classmethod
    def identity(cls, tfs: TypedFiniteSet) -> "TypedFunction":
        return cls(tfs, tfs, tuple(range(len(tfs))))


def reindex(gamma: TypedFunction, pt: Point) -> Point:
    """Dependent product of ``gamma``: a point on the target to one on the source.

    Output coordinate ``p`` is input coordinate ``gamma(p)``.
    """
    src, tgt = gamma.source, gamma.target
    pt = tgt.coerce(pt)
    if tgt.kind == "euclid" or (tgt.kind is None and src.kind == "euclid"):
        offs, dims = tgt.offsets, tgt.dims
        out = []
        for q in gamma.mapping:
            out.extend(pt[offs[q]:offs[q] + dims[q]])
        return tuple(out)
    return tuple(pt[q] for q in gamma.mapping)


@dataclass(frozen=True)
class Box:
    inputs: TypedFiniteSet = EMPTY
    outputs: TypedFiniteSet = EMPTY

    def __post_init__(self):
        kinds = {self.inputs.kind, self.outputs.kind} - {None}
        if len(kinds) > 1:
            raise MixedPortKinds("a box cannot mix finite and Euclidean ports")

    @property
    def kind(self) -> str | None:
        return self.inputs.kind or self.outputs.kind

    def same_types(self, other: "Box") -> bool:
        return self.inputs.same_types(other.inputs) and self.outputs.same_types(other.outputs)

    def __add__(self, other: "Box") -> "Box":
        return box_sum(self, other)

    def __str__(self):
        return f"({self.inputs} -> {self.outputs})"


CLOSED = Box()


def box_sum(x1: Box, x2: Box, tags: tuple[str, str] | None = None) -> Box:
    return Box(tfs_sum(x1.inputs, x2.inputs, tags), tfs_sum(x1.outputs, x2.outputs, tags))


def finite(*alphabets: Sequence[str], names: Sequence[str] | None = None) -> TypedFiniteSet:
    """Shorthand: ``finite("TF", ["Red", "Green"])``."""
    return TypedFiniteSet.of(*(Finite(tuple(a)) for a in alphabets), names=names)


def euclid(*dims: int, names: Sequence[str] | None = None) -> TypedFiniteSet:
    return TypedFiniteSet.of(*(Euclid(d) for d in dims), names=names)
