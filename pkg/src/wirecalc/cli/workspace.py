"""Resolution of a parsed workspace into library objects.

Every problem found (unknown names, ill-typed wires, incomplete tables)
becomes a :class:`Diagnostic`; all of them are reported together.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Any

import numpy as np

from ..continuous import ContinuousSystem, cs_apply, cs_parallel
from ..core import Box, Euclid, Finite, TypedFiniteSet
from ..discrete import DiscreteSystem, WeightedDiscreteSystem, steady_state_measure, steady_state_matrix, ws_apply, \
    ws_parallel
from ..errors import WirecalcError
from ..linear import LinearSystem, ls_apply, ls_parallel
from ..semimat import SEMIRINGS, Matrix, RealPlus, apply, kronecker
from ..setmat import steady_state_sets
from ..wiring import WiringDiagram, parallel_boxes, serial_diagram, validate
from . import dsl
from .dsl import Diagnostic, WorkspaceError
from .plans import MATRIX, SETS, canonical_plan, evaluate, serial_chain

KINDS = ("discrete", "continuous", "linear", "matrix")


@dataclass
class Wiring:
    name: str
    slots: list[tuple[str, str]]
    diagram: WiringDiagram
    slot_boxes: list[Box]


@dataclass
class Entry:
    """A named system: a leaf declaration or a wiring application."""

    name: str
    kind: str
    box: Box
    value: Any = None
    init: Any = None
    weights: np.ndarray | None = None
    wiring: Wiring | None = None
    args: list["Entry"] = field(default_factory=list)

    @property
    def is_application(self) -> bool:
        return self.wiring is not None

    def leaves(self) -> int:
        return 1 if not self.is_application else sum(a.leaves() for a in self.args)


class _Cascade(Exception):
    """A declaration depends on one that already failed; its diagnostic says enough."""


class Workspace:
    def __init__(self, ast: dsl.WorkspaceAST):
        self.ast = ast
        self.types: dict[str, Any] = {}
        self.boxes: dict[str, Box] = {}
        self.wirings: dict[str, Wiring] = {}
        self.systems: dict[str, Entry] = {}
        self.runs = ast.of(dsl.RunDecl)
        self.diags: list[Diagnostic] = []
        self.failed: set[str] = set()
        for d in ast.decls:
            handler = getattr(self, "_" + type(d).__name__, None)
            if handler is None:
                continue
            try:
                handler(d)
            except _Cascade:
                pass
            except WirecalcError as e:
                self.error(d, str(e))
            except KeyError as e:
                self.error(d, str(e.args[0]) if e.args else "unknown name")
            except (ValueError, TypeError, IndexError) as e:
                self.error(d, str(e))
            name = getattr(d, "name", None)
            if name is not None and name not in (self.types.keys() | self.boxes.keys()
                                                 | self.wirings.keys() | self.systems.keys()):
                self.failed.add(name)
        if self.diags:
            raise WorkspaceError(self.diags)

    @classmethod
    def from_text(cls, text: str) -> "Workspace":
        return cls(dsl.parse_workspace(text))

    @classmethod
    def from_file(cls, path) -> "Workspace":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def error(self, d, msg: str):
        line, col = getattr(d, "loc", (0, 0))
        self.diags.append(Diagnostic(line, col, msg))

    def _fresh(self, table: dict, d, what: str) -> bool:
        if d.name in table:
            self.error(d, f"{what} {d.name!r} is already defined")
            return False
        return True

    # -- declarations -------------------------------------------------------
    def _TypeDecl(self, d: dsl.TypeDecl):
        if self._fresh(self.types, d, "type"):
            self.types[d.name] = self._port_type(d.type, d)

    def _port_type(self, t, d):
        if isinstance(t, dsl.FiniteType):
            return Finite(t.symbols)
        if isinstance(t, dsl.EuclidType):
            return Euclid(t.dim)
        if t.name in self.failed:
            raise _Cascade(t.name)
        if t.name not in self.types:
            raise KeyError(f"unknown type {t.name!r}")
        return self.types[t.name]

    def _BoxDecl(self, d: dsl.BoxDecl):
        ins, outs, ok = [], [], True
        for p in d.ports:
            if "." in p.name:
                self.error(p, f"port name {p.name!r} may not contain '.'")
                ok = False
                continue
            try:
                (ins if p.direction == "in" else outs).append((p.name, self._port_type(p.type, p)))
            except KeyError as e:
                self.error(p.type if isinstance(p.type, dsl.TypeRef) else p, e.args[0])
                ok = False
        if ok and self._fresh(self.boxes, d, "box"):
            self.boxes[d.name] = Box(TypedFiniteSet(tuple(ins)), TypedFiniteSet(tuple(outs)))

    def _box(self, name: str, d) -> Box:
        if name in self.failed:
            raise _Cascade(name)
        if name not in self.boxes:
            raise KeyError(f"unknown box {name!r}")
        return self.boxes[name]

    def _WiringDecl(self, d: dsl.WiringDecl):
        slot_names = [s for s, _ in d.slots]
        if len(set(slot_names)) != len(slot_names):
            raise ValueError("slot names must be distinct")
        if d.outer in slot_names:
            raise ValueError(f"outer box name {d.outer!r} is also a slot name")
        boxes = [self._box(b, d) for _, b in d.slots]
        outer = self._box(d.outer, d)
        inner = parallel_boxes(list(zip(slot_names, boxes)))
        ny = len(outer.inputs)
        in_names, out_names = inner.inputs.names, inner.outputs.names
        phi_in: dict[int, int] = {}
        phi_out: dict[int, int] = {}
        where: dict[tuple[str, int], Any] = {}
        n_err = len(self.diags)
        attempted: set[tuple[str, int]] = set()
        for wire in d.wires:
            (towner, tport), (sowner, sport) = wire.target, wire.source
            tname, sname = f"{towner}.{tport}", f"{sowner}.{sport}"
            if towner == d.outer:
                table, names, side = phi_out, outer.outputs.names, "out"
                key = tport
            elif towner in slot_names:
                table, names, side = phi_in, in_names, "in"
                key = tname
            else:
                self.error(wire, f"unknown slot or box {towner!r}")
                continue
            if key not in names:
                what = "output" if side == "out" else "input"
                self.error(wire, f"{tname} is not an {what} port")
                continue
            t = names.index(key)
            attempted.add((side, t))
            if sowner == d.outer:
                if side == "out":
                    self.error(wire, f"outer output {tname} must be fed by an inner output, not {sname}")
                    continue
                if sport not in outer.inputs.names:
                    self.error(wire, f"{sname} is not an outer input port")
                    continue
                s = outer.inputs.names.index(sport)
            elif sowner in slot_names:
                if sname not in out_names:
                    self.error(wire, f"{sname} is not an output port")
                    continue
                s = out_names.index(sname) + (ny if side == "in" else 0)
            else:
                self.error(wire, f"unknown slot or box {sowner!r}")
                continue
            if t in table:
                self.error(wire, f"{tname} is wired twice")
                continue
            table[t] = s
            where[(side, t)] = wire
        for p, name in enumerate(in_names):
            if p not in phi_in and ("in", p) not in attempted:
                self.error(d, f"inner input {name} has no source")
        for q, name in enumerate(outer.outputs.names):
            if q not in phi_out and ("out", q) not in attempted:
                self.error(d, f"outer output {d.outer}.{name} has no source")
        if len(self.diags) > n_err:
            return
        w = WiringDiagram(inner, outer, [phi_in[p] for p in range(len(in_names))],
                          [phi_out[q] for q in range(len(outer.outputs))], check=False)
        bad = validate(w)
        for v in bad:
            idx = in_names.index(v.source) if v.side == "in" else outer.outputs.names.index(v.source)
            loc = where.get((v.side, idx), d)
            self.error(loc, f"type mismatch: {v}")
        if not bad and self._fresh(self.wirings, d, "wiring"):
            self.wirings[d.name] = Wiring(d.name, list(d.slots), w, boxes)

    def _add(self, d, entry: Entry):
        if self._fresh(self.systems, d, "system"):
            self.systems[d.name] = entry

    def _DiscreteDecl(self, d: dsl.DiscreteDecl):
        box = self._box(d.box, d)
        for r in d.rows:
            for part, tfs in ((r.input, box.inputs), (r.output, box.outputs)):
                if len(part) != len(tfs):
                    raise ValueError(f"row {','.join(part) or '()'} has {len(part)} symbols, "
                                     f"the box has {len(tfs)} ports")
        sys = DiscreteSystem.from_table(box, d.states, [(r.input, r.state, r.output, r.next) for r in d.rows])
        weights = np.ones(sys.n_states)
        for s, wt in d.weights:
            weights[sys.state_index(s)] = wt
        if d.init is not None:
            sys.state_index(d.init)
        self._add(d, Entry(d.name, "discrete", box, sys, d.init, weights))

    def _ContinuousDecl(self, d: dsl.ContinuousDecl):
        box = self._box(d.box, d)
        dots = dict(d.dots)
        outs = dict(d.outs)
        if len(dots) != len(d.dots) or set(dots) != set(d.states):
            raise ValueError(f"need exactly one 'dot' line per state {list(d.states)}")
        coords = box.outputs.coordinate_names()
        if len(outs) != len(d.outs) or set(outs) != set(coords):
            raise ValueError(f"need exactly one 'out' line per output coordinate {list(coords)}")
        f = ContinuousSystem(box, d.states, [dots[v] for v in d.states], [outs[c] for c in coords])
        self._add(d, Entry(d.name, "continuous", box, f))

    def _LinearDecl(self, d: dsl.LinearDecl):
        box = self._box(d.box, d)
        n, k, l = d.dim, box.inputs.dim, box.outputs.dim

        def mat(rows, shape, label):
            a = np.array(rows, dtype=float) if rows else np.zeros((0, 0))
            if a.size == 0 and shape[0] * shape[1] == 0:
                return np.zeros(shape)
            if a.shape != shape:
                raise ValueError(f"{label} has shape {a.shape}, expected {shape}")
            return a

        self._add(d, Entry(d.name, "linear", box, LinearSystem(
            box, mat(d.m_in, (n, k), "in"), mat(d.m_mid, (n, n), "mid"), mat(d.m_out, (l, n), "out"))))

    def _MatrixDecl(self, d: dsl.MatrixDecl):
        box = self._box(d.box, d)
        rows, cols = box.inputs, box.outputs
        if box.kind == "euclid":
            raise ValueError("matrices need finite ports")
        if len(d.rows) != rows.size or any(len(r) != cols.size for r in d.rows):
            raise ValueError(f"expected {rows.size} rows of {cols.size} entries")
        sr = SEMIRINGS[d.semiring]
        if d.semiring == "nat" and any(isinstance(v, float) for r in d.rows for v in r):
            raise ValueError("nat entries must be natural numbers")
        self._add(d, Entry(d.name, "matrix", box, Matrix.from_dense(rows, cols, sr, [list(r) for r in d.rows])))

    def _SystemDecl(self, d: dsl.SystemDecl):
        if d.wiring in self.failed or any(a in self.failed for a in d.args):
            raise _Cascade(d.name)
        if d.wiring not in self.wirings:
            raise KeyError(f"unknown wiring {d.wiring!r}")
        w = self.wirings[d.wiring]
        if len(d.args) != len(w.slots):
            raise ValueError(f"wiring {d.wiring} has {len(w.slots)} slots, got {len(d.args)} systems")
        args = []
        for (slot, bname), a, b in zip(w.slots, d.args, w.slot_boxes):
            if a not in self.systems:
                raise KeyError(f"unknown system {a!r}")
            e = self.systems[a]
            if not e.box.same_types(b):
                raise ValueError(f"system {a} does not fit slot {slot} of box {bname}")
            args.append(e)
        kinds = {e.kind for e in args}
        if len(kinds) != 1:
            raise ValueError(f"cannot mix {' and '.join(sorted(kinds))} systems in one application")
        self._add(d, Entry(d.name, kinds.pop(), w.diagram.outer, wiring=w, args=args))

    # -- queries ------------------------------------------------------------
    def get(self, name: str | None) -> Entry:
        if name is None:
            apps = [e for e in self.systems.values() if e.is_application]
            pool = apps or list(self.systems.values())
            if not pool:
                raise KeyError("the workspace declares no systems")
            return pool[-1]
        if name not in self.systems:
            raise KeyError(f"unknown system {name!r}")
        return self.systems[name]


# -- evaluation of entries --------------------------------------------------------

_OPS = {
    "discrete": (ws_parallel, ws_apply),
    "continuous": (cs_parallel, cs_apply),
    "linear": (ls_parallel, ls_apply),
    "matrix": (kronecker, apply),
}


def _box_of(x) -> Box:
    return x.box if hasattr(x, "box") else Box(x.row_space, x.col_space)


def composite(e: Entry, plan: str = "tensor-then-wire"):
    """The composite system itself (materialises the full state space).

    With ``serial-chain`` a chain of slots is composed pairwise with serial
    diagrams before the remaining one-box diagram is applied.
    """
    if not e.is_application:
        if e.kind == "discrete":
            return WeightedDiscreteSystem(e.value, e.weights)
        return e.value
    plan = canonical_plan(plan)
    parts = [composite(a, plan) for a in e.args]
    parallel, wire = _OPS[e.kind]
    w = e.wiring.diagram
    rest = serial_chain(w, e.wiring.slot_boxes) if plan == "serial-chain" else None
    if rest is None:
        return wire(w, reduce(parallel, parts))
    acc = parts[0]
    for p in parts[1:]:
        acc = wire(serial_diagram(_box_of(acc), _box_of(p)), parallel(acc, p))
    return wire(rest, acc)


def stst(e: Entry, plan: str = "tensor-then-wire", what: str = "counts", used: list | None = None):
    """Matrix-level steady states: ``what`` is counts, sets or measure."""
    if e.kind not in ("discrete", "matrix"):
        raise ValueError(f"steady-state matrices need discrete systems, {e.name} is {e.kind}")
    if e.kind == "matrix" and what != "counts":
        raise ValueError(f"{e.name} is a matrix; only counts are available")
    if not e.is_application:
        if e.kind == "matrix":
            return e.value
        if what == "counts":
            return steady_state_matrix(e.value)
        if what == "sets":
            return steady_state_sets(e.value)
        return steady_state_measure(WeightedDiscreteSystem(e.value, e.weights))
    mats = [stst(a, plan, what, used) for a in e.args]
    alg = SETS if what == "sets" else MATRIX
    if what == "measure" or (e.kind == "matrix" and mats[0].semiring is RealPlus):
        alg = MATRIX
    result, actual = evaluate(plan, e.wiring.diagram, e.wiring.slot_boxes, mats, alg)
    if used is not None:
        used.append((e.name, actual))
    return result
