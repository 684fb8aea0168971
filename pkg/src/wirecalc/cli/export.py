"""Workspace text for systems built in memory (random instances, scripts)."""

from __future__ import annotations

import re

from ..core import Box, Euclid, TypedFiniteSet, unflatten
from . import dsl
from .workspace import Entry


def _ident(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_]", "_", name)


def _split(port: str) -> tuple[str, str]:
    slot, _, name = port.partition(".")
    return slot, name


class _Writer:
    def __init__(self):
        self.decls: list = []
        self.types: dict = {}
        self.boxes: dict = {}
        self.systems: dict = {}

    def type_of(self, t):
        if isinstance(t, Euclid):
            return dsl.EuclidType(t.dim)
        if t not in self.types:
            name = f"T{len(self.types)}"
            self.types[t] = name
            self.decls.append(dsl.TypeDecl(name, dsl.FiniteType(tuple(t.alphabet))))
        return dsl.TypeRef(self.types[t])

    def box(self, b: Box, hint: str) -> str:
        key = (b.inputs.ports, b.outputs.ports)
        if key not in self.boxes:
            name = _ident(hint)
            while name in self.boxes.values():
                name += "_"
            ports = [dsl.PortDecl(d, n, self.type_of(t))
                     for d, tfs in (("in", b.inputs), ("out", b.outputs)) for n, t in tfs.ports]
            self.boxes[key] = name
            self.decls.append(dsl.BoxDecl(name, tuple(ports)))
        return self.boxes[key]

    def entry(self, e: Entry) -> str:
        if id(e) in self.systems:
            return self.systems[id(e)]
        name = _ident(e.name)
        while name in self.systems.values():
            name += "_"
        if e.is_application:
            args = tuple(self.entry(a) for a in e.args)
            self.decls.append(dsl.SystemDecl(name, self.wiring(e, name), args))
        else:
            self.decls.append(self.leaf(e, name, self.box(e.box, name.capitalize())))
        self.systems[id(e)] = name
        return name

    def wiring(self, e: Entry, name: str) -> str:
        w = e.wiring
        d = w.diagram
        outer = self.box(d.outer, f"{name}_Outer")
        slots = tuple((slot, self.box(b, f"{name}_{slot}")) for (slot, _), b in zip(w.slots, w.slot_boxes))
        ny = d.n_outer_in
        wires = []
        for p, t in enumerate(d.phi_in):
            src = (outer, d.outer.inputs.names[t]) if t < ny else _split(d.inner.outputs.names[t - ny])
            wires.append(dsl.Wire(_split(d.inner.inputs.names[p]), src))
        for q, t in enumerate(d.phi_out):
            wires.append(dsl.Wire((outer, d.outer.outputs.names[q]), _split(d.inner.outputs.names[t])))
        wname = f"{name}_wiring"
        self.decls.append(dsl.WiringDecl(wname, slots, outer, tuple(wires)))
        return wname

    def leaf(self, e: Entry, name: str, box: str):
        v = e.value
        if e.kind == "discrete":
            labels = [_ident(str(s)) for s in v.states]
            ins, outs = v.box.inputs, v.box.outputs
            rows = tuple(dsl.Row(_symbols(ins, a), labels[s], _symbols(outs, int(v.readout[s])),
                                 labels[int(v.update[a, s])])
                         for s in range(v.n_states) for a in range(ins.size))
            weights = () if e.weights is None else tuple(
                (labels[i], float(x)) for i, x in enumerate(e.weights) if x != 1.0)
            init = None if e.init is None else _ident(str(e.init))
            return dsl.DiscreteDecl(name, box, tuple(labels), init, weights, rows)
        if e.kind == "continuous":
            coords = v.box.outputs.coordinate_names()
            return dsl.ContinuousDecl(name, box, v.state_vars, tuple(zip(v.state_vars, v.dynamics)),
                                      tuple(zip(coords, v.readout)))
        if e.kind == "linear":
            rows = lambda m: tuple(tuple(float(x) for x in r) for r in m)  # noqa: E731
            return dsl.LinearDecl(name, box, v.n, rows(v.m_in), rows(v.m_mid), rows(v.m_out))
        if e.kind == "matrix":
            return dsl.MatrixDecl(name, box, v.semiring.name, tuple(tuple(r) for r in v.dense()))
        raise ValueError(f"cannot export {e.kind} systems")


def _symbols(tfs: TypedFiniteSet, idx: int) -> tuple[str, ...]:
    return tfs.symbols(unflatten(tfs, idx))


def entry_ast(e: Entry, runs: tuple[dsl.RunDecl, ...] = ()) -> dsl.WorkspaceAST:
    w = _Writer()
    w.entry(e)
    return dsl.WorkspaceAST(tuple(w.decls) + tuple(runs))


def entry_text(e: Entry, runs: tuple[dsl.RunDecl, ...] = ()) -> str:
    return dsl.print_workspace(entry_ast(e, runs))

