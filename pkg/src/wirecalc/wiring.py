"""Wiring diagrams between boxes.

A diagram ``X -> Y`` is stored as two port maps:

* ``phi_in`` sends each inner input port to an index of ``Y.inputs + X.outputs``
  (indices below ``len(Y.inputs)`` are outer inputs, the rest inner outputs);
* ``phi_out`` sends each outer output port to an inner output port.

Evaluation on points uses :func:`core.reindex`; for finite boxes the same
maps are also available as integer lookup tables over flat indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import (
    Box,
    Euclid,
    Finite,
    PortType,
    TypedFiniteSet,
    TypedFunction,
    box_sum,
    digits,
    reindex,
    tfs_sum,
)
from .errors import BoxMismatch, NotDifferentiable, SizeCapExceeded, TypeMismatch

SIZE_CAP = 10**8


@dataclass(frozen=True)
class Violation:
    side: str
    source: str
    target: str
    source_type: PortType
    target_type: PortType

    def __str__(self):
        return (f"{self.side} map: port {self.source} of type {self.source_type} "
                f"is wired to {self.target} of type {self.target_type}")


@dataclass(frozen=True)
class WiringDerivative:
    phi_in: np.ndarray
    phi_mid: np.ndarray
    phi_out: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, WiringDerivative):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in
                   zip((self.phi_in, self.phi_mid, self.phi_out),
                       (other.phi_in, other.phi_mid, other.phi_out)))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class WiringDiagram:
    inner: Box
    outer: Box
    phi_in: tuple[int, ...]
    phi_out: tuple[int, ...]
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "phi_in", tuple(int(t) for t in self.phi_in))
        object.__setattr__(self, "phi_out", tuple(int(t) for t in self.phi_out))
        # range errors are structural and always raised
        TypedFunction(self.inner.inputs, self.in_codomain, self.phi_in)
        TypedFunction(self.outer.outputs, self.inner.outputs, self.phi_out)
        if self.check:
            bad = validate(self)
            if bad:
                raise TypeMismatch("; ".join(map(str, bad)))

    # -- structure --------------------------------------------------------
    @property
    def in_codomain(self) -> TypedFiniteSet:
        return tfs_sum(self.outer.inputs, self.inner.outputs)

    @property
    def in_function(self) -> TypedFunction:
        return TypedFunction(self.inner.inputs, self.in_codomain, self.phi_in)

    @property
    def out_function(self) -> TypedFunction:
        return TypedFunction(self.outer.outputs, self.inner.outputs, self.phi_out)

    @property
    def n_outer_in(self) -> int:
        return len(self.outer.inputs)

    def source_of(self, p: int) -> tuple[str, int]:
        """``("outer", q)`` or ``("inner", q)`` for inner input port ``p``."""
        t = self.phi_in[p]
        if t < self.n_outer_in:
            return "outer", t
        return "inner", t - self.n_outer_in

    @property
    def kind(self) -> str | None:
        return self.inner.kind or self.outer.kind

    def __eq__(self, other):
        if not isinstance(other, WiringDiagram):
            return NotImplemented
        return (self.inner == other.inner and self.outer == other.outer
                and self.phi_in == other.phi_in and self.phi_out == other.phi_out)

    def __hash__(self):
        return hash((self.inner, self.outer, self.phi_in, self.phi_out))

    # -- evaluation -------------------------------------------------------
    def in_eval(self, y, x):
        y = self.outer.inputs.coerce(y)
        x = self.inner.outputs.coerce(x)
        return reindex(self.in_function, y + x)

    def out_eval(self, x):
        return reindex(self.out_function, self.inner.outputs.coerce(x))

    @cached_property
    def in_table(self) -> np.ndarray:
        """``in_table[y, x]`` is the flat inner-input index of ``in_eval(y, x)``."""
        yin, xout, xin = self.outer.inputs, self.inner.outputs, self.inner.inputs
        ny, nx = yin.size, xout.size
        if ny * nx > SIZE_CAP:
            raise SizeCapExceeded(f"wiring table of {ny * nx} entries exceeds cap {SIZE_CAP}")
        ydig = digits(yin, np.arange(ny))
        xdig = digits(xout, np.arange(nx))
        table = np.zeros((ny, nx), dtype=np.int64)
        for p, r in enumerate(xin.radices):
            side, q = self.source_of(p)
            coord = ydig[:, q][:, None] if side == "outer" else xdig[:, q][None, :]
            table = table * r + coord
        return table

    @cached_property
    def out_table(self) -> np.ndarray:
        """``out_table[x]`` is the flat outer-output index of ``out_eval(x)``."""
        xout, yout = self.inner.outputs, self.outer.outputs
        xdig = digits(xout, np.arange(xout.size))
        table = np.zeros(xout.size, dtype=np.int64)
        for q, r in enumerate(yout.radices):
            table = table * r + xdig[:, self.phi_out[q]]
        return table

    # -- calculus ---------------------------------------------------------
    def derivative(self) -> WiringDerivative:
        return derivative(self)

    def __matmul__(self, other: "WiringDiagram") -> "WiringDiagram":
        """``psi @ phi`` is ``compose(psi, phi)``."""
        return compose(self, other)

    def __str__(self):
        lines = [f"wiring {self.inner} -> {self.outer}"]
        for p, name in enumerate(self.inner.inputs.names):
            side, q = self.source_of(p)
            src = self.outer.inputs.names[q] if side == "outer" else self.inner.outputs.names[q]
            lines.append(f"  in  {name} <- {side}.{src}")
        for q, name in enumerate(self.outer.outputs.names):
            lines.append(f"  out {name} <- inner.{self.inner.outputs.names[self.phi_out[q]]}")
        return "\n".join(lines)


def validate(w: WiringDiagram) -> list[Violation]:
    bad = []
    cod = w.in_codomain
    for p, t in enumerate(w.phi_in):
        st, tt = w.inner.inputs.types[p], cod.types[t]
        if st != tt:
            bad.append(Violation("in", w.inner.inputs.names[p], cod.names[t], st, tt))
    for q, t in enumerate(w.phi_out):
        st, tt = w.outer.outputs.types[q], w.inner.outputs.types[t]
        if st != tt:
            bad.append(Violation("out", w.outer.outputs.names[q], w.inner.outputs.names[t], st, tt))
    return bad


def identity(x: Box) -> WiringDiagram:
    return WiringDiagram(x, x, tuple(range(len(x.inputs))), tuple(range(len(x.outputs))))


def compose(psi: WiringDiagram, phi: WiringDiagram) -> WiringDiagram:
    """``psi ∘ phi`` for ``phi: X -> Y`` and ``psi: Y -> Z``."""
    if not phi.outer.same_types(psi.inner):
        raise BoxMismatch(f"cannot compose: outer box {phi.outer} differs from inner box {psi.inner}")
    ny, nz = phi.n_outer_in, psi.n_outer_in
    new_in = []
    for t in phi.phi_in:
        if t >= ny:
            new_in.append(nz + (t - ny))
            continue
        s = psi.phi_in[t]
        new_in.append(s if s < nz else nz + phi.phi_out[s - nz])
    new_out = [phi.phi_out[r] for r in psi.phi_out]
    return WiringDiagram(phi.inner, psi.outer, new_in, new_out)


def wd_sum(phi1: WiringDiagram, phi2: WiringDiagram, tags: tuple[str, str] | None = None) -> WiringDiagram:
    """Monoidal sum ``phi1 ⊞ phi2``."""
    y1, y2 = phi1.n_outer_in, phi2.n_outer_in
    x1 = len(phi1.inner.outputs)
    new_in = [t if t < y1 else y1 + y2 + (t - y1) for t in phi1.phi_in]
    new_in += [y1 + t if t < y2 else y1 + y2 + x1 + (t - y2) for t in phi2.phi_in]
    new_out = list(phi1.phi_out) + [x1 + r for r in phi2.phi_out]
    return WiringDiagram(box_sum(phi1.inner, phi2.inner, tags), box_sum(phi1.outer, phi2.outer, tags),
                         new_in, new_out)


def derivative(w: WiringDiagram) -> WiringDerivative:
    if "finite" in (w.inner.kind, w.outer.kind):
        raise NotDifferentiable("wiring derivative needs Euclidean ports")
    xin, xout, yin, yout = w.inner.inputs, w.inner.outputs, w.outer.inputs, w.outer.outputs
    d_in = np.zeros((xin.dim, yin.dim))
    d_mid = np.zeros((xin.dim, xout.dim))
    d_out = np.zeros((yout.dim, xout.dim))
    for p in range(len(xin)):
        side, q = w.source_of(p)
        row = xin.offsets[p]
        if side == "outer":
            col, target = yin.offsets[q], d_in
        else:
            col, target = xout.offsets[q], d_mid
        for i in range(xin.dims[p]):
            target[row + i, col + i] = 1.0
    for q, r in enumerate(w.phi_out):
        for i in range(yout.dims[q]):
            d_out[yout.offsets[q] + i, xout.offsets[r] + i] = 1.0
    return WiringDerivative(d_in, d_mid, d_out)


# -- construction helpers -------------------------------------------------

def from_names(inner: Box, outer: Box, phi_in: Mapping[str, str], phi_out: Mapping[str, str],
               check: bool = True) -> WiringDiagram:
    """Build a diagram from name tables like ``{"a": "h", "b": "g"}``.

    Sources of ``phi_in`` are looked up among outer inputs, then inner
    outputs; a name present in both is rejected as ambiguous.
    """
    ny = len(outer.inputs)
    yin, xout = outer.inputs.names, inner.outputs.names
    missing = set(inner.inputs.names) - set(phi_in)
    if missing:
        raise ValueError(f"inner inputs without a source: {sorted(missing)}")
    missing = set(outer.outputs.names) - set(phi_out)
    if missing:
        raise ValueError(f"outer outputs without a source: {sorted(missing)}")
    m_in = []
    for p in inner.inputs.names:
        src = phi_in[p]
        if src in yin and src in xout:
            raise ValueError(f"source name {src!r} is ambiguous")
        if src in yin:
            m_in.append(yin.index(src))
        elif src in xout:
            m_in.append(ny + xout.index(src))
        else:
            raise KeyError(f"unknown source port {src!r} for {p!r}")
    m_out = []
    for q in outer.outputs.names:
        src = phi_out[q]
        if src not in xout:
            raise KeyError(f"unknown inner output {src!r} for {q!r}")
        m_out.append(xout.index(src))
    return WiringDiagram(inner, outer, m_in, m_out, check=check)


def parallel_boxes(slots: Sequence[tuple[str, Box]]) -> Box:
    """Sum of several boxes with ports renamed ``slot.port``."""
    ins, outs = [], []
    for slot, b in slots:
        ins.extend(b.inputs.prefixed(slot).ports)
        outs.extend(b.outputs.prefixed(slot).ports)
    return Box(TypedFiniteSet(tuple(ins)), TypedFiniteSet(tuple(outs)))


def serial_diagram(x1: Box, x2: Box) -> WiringDiagram:
    """``x1`` feeds ``x2`` port-for-port; the outer box is ``(x1.in, x2.out)``."""
    if not x1.outputs.same_types(x2.inputs):
        raise BoxMismatch("serial wiring needs x1 outputs to match x2 inputs")
    n1_in = len(x1.inputs)
    inner = box_sum(x1, x2)
    outer = Box(x1.inputs, x2.outputs)
    phi_in = list(range(n1_in)) + [n1_in + j for j in range(len(x2.inputs))]
    phi_out = [len(x1.outputs) + k for k in range(len(x2.outputs))]
    return WiringDiagram(inner, outer, phi_in, phi_out)


def feedback_diagram(inner: Box, pairs: Sequence[tuple[int, int]]) -> WiringDiagram:
    """Feed inner output ``o`` back into inner input ``i`` for each ``(i, o)``.

    The remaining inputs and outputs become the outer ports, in order.
    """
    fed = dict(pairs)
    used_out = {o for _, o in pairs}
    if len(fed) != len(pairs) or len(used_out) != len(pairs):
        raise ValueError("feedback pairs must use distinct ports")
    free_in = [p for p in range(len(inner.inputs)) if p not in fed]
    free_out = [o for o in range(len(inner.outputs)) if o not in used_out]
    outer = Box(TypedFiniteSet(tuple(inner.inputs.ports[p] for p in free_in)),
                TypedFiniteSet(tuple(inner.outputs.ports[o] for o in free_out)))
    ny = len(free_in)
    phi_in = [ny + fed[p] if p in fed else free_in.index(p) for p in range(len(inner.inputs))]
    return WiringDiagram(inner, outer, phi_in, free_out)


def retyped(w: WiringDiagram, retype: Callable[[PortType], PortType]) -> WiringDiagram:
    """The same port maps on boxes whose types went through ``retype``."""
    def tfs(t: TypedFiniteSet) -> TypedFiniteSet:
        return TypedFiniteSet(tuple((n, retype(ty)) for n, ty in t.ports))

    def box(b: Box) -> Box:
        return Box(tfs(b.inputs), tfs(b.outputs))

    return WiringDiagram(box(w.inner), box(w.outer), w.phi_in, w.phi_out)


def euclid_twin(w: WiringDiagram, dims: Mapping[Finite, int] | int = 1) -> WiringDiagram:
    """Replace every finite port type by a Euclidean one (``dims`` per alphabet)."""
    def retype(t):
        if isinstance(t, Euclid):
            return t
        # alphabets absent from the map (unused outer inputs) get one dimension
        return Euclid(dims if isinstance(dims, int) else dims.get(t, 1))
    return retyped(w, retype)


def extensionally_equal(w1: WiringDiagram, w2: WiringDiagram, samples: int = 200, seed: int = 0) -> bool:
    """Equality of ``in_eval``/``out_eval`` as functions on points."""
    if not (w1.inner.same_types(w2.inner) and w1.outer.same_types(w2.outer)):
        return False
    if w1.kind != "euclid":
        return (np.array_equal(w1.in_table, w2.in_table)
                and np.array_equal(w1.out_table, w2.out_table))
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        y = rng.normal(size=w1.outer.inputs.dim)
        x = rng.normal(size=w1.inner.outputs.dim)
        if w1.in_eval(y, x) != w2.in_eval(y, x) or w1.out_eval(x) != w2.out_eval(x):
            return False
    return True
