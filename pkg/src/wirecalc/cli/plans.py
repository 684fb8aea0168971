"""Evaluation plans for steady-state matrices of composite systems.

A plan computes ``Stst(phi(f1, ..., fn))`` from the components' matrices
without building the composite state space.

``tensor-then-wire``
    Kronecker product of all component matrices, then one ``apply``.
``serial-chain``
    For diagrams whose slots form a chain ``S1 -> S2 -> ... -> Sn`` (every
    input of ``S(i+1)`` fed, port for port, by the outputs of ``Si`` and those
    outputs used nowhere else), multiply the matrices along the chain and apply
    the remaining one-box diagram, which handles the feedback as a trace.  The
    Kronecker product is never formed.  Other diagrams fall back to
    tensor-then-wire.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Callable, Sequence

from ..core import Box
from ..semimat import apply, kronecker, multiply
from ..setmat import smat_apply, smat_multiply, smat_parallel
from ..wiring import WiringDiagram

PLANS = ("tensor-then-wire", "serial-chain")
ALIASES = {"serial": "serial-chain", "tensor": "tensor-then-wire"}


def canonical_plan(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in PLANS:
        raise ValueError(f"unknown plan {name!r}; choose one of {', '.join(PLANS)} (or 'serial')")
    return name


@dataclass(frozen=True)
class Algebra:
    """The matrix operations a plan needs."""

    parallel: Callable
    apply: Callable
    multiply: Callable


MATRIX = Algebra(kronecker, apply, multiply)
SETS = Algebra(smat_parallel, lambda w, m: smat_apply(w, m, mode="flat"),
               lambda a, b: smat_multiply(a, b, mode="flat"))


def serial_chain(w: WiringDiagram, slot_boxes: Sequence[Box]) -> WiringDiagram | None:
    """The one-box diagram left after multiplying along the chain, or None."""
    n = len(slot_boxes)
    if n == 0:
        return None
    in_off, out_off = [0], [0]
    for b in slot_boxes:
        in_off.append(in_off[-1] + len(b.inputs))
        out_off.append(out_off[-1] + len(b.outputs))
    ny = w.n_outer_in
    src = list(w.phi_in)
    chained = set()
    for i in range(1, n):
        prev, cur = slot_boxes[i - 1], slot_boxes[i]
        if len(cur.inputs) != len(prev.outputs) or not cur.inputs.same_types(prev.outputs):
            return None
        for p in range(len(cur.inputs)):
            if src[in_off[i] + p] != ny + out_off[i - 1] + p:
                return None
            chained.add(in_off[i] + p)
    last = out_off[n - 1]
    for j, s in enumerate(src):
        if j not in chained and ny <= s < ny + last:
            return None
    if any(k < last for k in w.phi_out):
        return None
    first_in = [s if s < ny else s - last for s in src[:in_off[1]]]
    inner = Box(slot_boxes[0].inputs, slot_boxes[-1].outputs)
    return WiringDiagram(inner, w.outer, first_in, [k - last for k in w.phi_out])


def evaluate(plan: str, w: WiringDiagram, slot_boxes: Sequence[Box], mats: Sequence, alg: Algebra = MATRIX):
    """Run ``plan``; returns ``(result, plan actually used)``."""
    plan = canonical_plan(plan)
    if plan == "serial-chain":
        rest = serial_chain(w, slot_boxes)
        if rest is not None:
            return alg.apply(rest, reduce(alg.multiply, mats)), plan
    return alg.apply(w, reduce(alg.parallel, mats)), "tensor-then-wire"
