"""Discrete (Moore machine) open systems and their steady-state matrices.

Update and readout are dense integer tables over flat indices:
``update[a, s]`` is the next state index for input point ``a`` in state ``s``
and ``readout[s]`` is the flat index of the output point.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from .core import Box, TypedFiniteSet, box_sum, flat_index, unflatten
from .errors import BoxMismatch, IncompleteSystem, InvalidPoint, WrongInterpretation
from .semimat import Matrix, NatPlus, RealPlus
from .wiring import WiringDiagram


class _Counter:
    """Counts states of composite systems that were materialised."""

    def __init__(self):
        self.composite_states = 0

    def reset(self):
        self.composite_states = 0


instrumentation = _Counter()


@contextmanager
def count_composite_states():
    """Yield the counter after resetting it; read ``.composite_states`` afterwards."""
    instrumentation.reset()
    yield instrumentation


def _point(tfs: TypedFiniteSet, value) -> tuple:
    """Accept a bare symbol for one-port sets and ``None``/``()`` for empty ones."""
    if value is None:
        value = ()
    if isinstance(value, str) and len(tfs) == 1:
        value = (value,)
    if isinstance(value, (int, np.integer)) and len(tfs) == 1:
        value = (int(value),)
    return tfs.coerce(value)


@dataclass(frozen=True, eq=False)
class DiscreteSystem:
    box: Box
    states: tuple
    readout: np.ndarray
    update: np.ndarray
    composite: bool = field(default=False, repr=False)

    def __post_init__(self):
        if self.box.kind == "euclid":
            raise WrongInterpretation("discrete systems need finite ports")
        states = tuple(self.states)
        if len(set(states)) != len(states):
            raise ValueError("state labels must be distinct")
        object.__setattr__(self, "states", states)
        n = len(states)
        rdt = np.asarray(self.readout, dtype=np.int64).reshape(n)
        upd = np.asarray(self.update, dtype=np.int64).reshape(self.box.inputs.size, n)
        if n and (rdt.min() < 0 or rdt.max() >= self.box.outputs.size):
            raise IncompleteSystem("readout index out of range")
        if upd.size and (upd.min() < 0 or upd.max() >= n):
            raise IncompleteSystem("update target out of range")
        rdt.flags.writeable = False
        upd.flags.writeable = False
        object.__setattr__(self, "readout", rdt)
        object.__setattr__(self, "update", upd)

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_table(cls, box: Box, states: Sequence[Hashable],
                   rows: Iterable[tuple]) -> "DiscreteSystem":
        """Rows ``(input, state, output, next)`` covering every input and state."""
        states = tuple(states)
        index = {s: i for i, s in enumerate(states)}
        n_in = box.inputs.size
        upd = np.full((n_in, len(states)), -1, dtype=np.int64)
        rdt = np.full(len(states), -1, dtype=np.int64)
        for a, s, b, t in rows:
            if s not in index or t not in index:
                raise IncompleteSystem(f"unknown state in row {(a, s, b, t)!r}")
            ai = flat_index(box.inputs, _point(box.inputs, a))
            bi = flat_index(box.outputs, _point(box.outputs, b))
            si = index[s]
            if upd[ai, si] >= 0 and upd[ai, si] != index[t]:
                raise IncompleteSystem(f"conflicting next state for input {a!r} in state {s!r}")
            if rdt[si] >= 0 and rdt[si] != bi:
                raise IncompleteSystem(f"state {s!r} has two different readouts")
            upd[ai, si] = index[t]
            rdt[si] = bi
        missing = np.argwhere(upd < 0)
        if len(missing):
            a, s = missing[0]
            raise IncompleteSystem(f"no transition for input {box.inputs.symbols(unflatten(box.inputs, int(a)))} "
                                   f"in state {states[s]!r} ({len(missing)} missing)")
        return cls(box, states, rdt, upd)

    @classmethod
    def from_functions(cls, box: Box, states: Sequence[Hashable], readout: Callable, update: Callable,
                       ) -> "DiscreteSystem":
        """``readout(state) -> output point`` and ``update(input point, state) -> state``.

        Points are passed as symbol tuples.
        """
        states = tuple(states)
        index = {s: i for i, s in enumerate(states)}
        rdt = [flat_index(box.outputs, _point(box.outputs, readout(s))) for s in states]
        upd = np.empty((box.inputs.size, len(states)), dtype=np.int64)
        for a in range(box.inputs.size):
            sym = box.inputs.symbols(unflatten(box.inputs, a))
            for i, s in enumerate(states):
                upd[a, i] = index[update(sym, s)]
        return cls(box, states, rdt, upd)

    @classmethod
    def unit(cls) -> "DiscreteSystem":
        """The one-state system on the closed box."""
        return cls(Box(), ("*",), [0], [[0]])

    # -- access -----------------------------------------------------------
    @property
    def n_states(self) -> int:
        return len(self.states)

    def state_index(self, s) -> int:
        try:
            return self.states.index(s)
        except ValueError:
            raise InvalidPoint(f"unknown state {s!r}") from None

    def read(self, s) -> tuple[str, ...]:
        """Output symbols of state ``s``."""
        return self.box.outputs.symbols(unflatten(self.box.outputs, int(self.readout[self.state_index(s)])))

    def step(self, a, s):
        """Next state label."""
        ai = flat_index(self.box.inputs, _point(self.box.inputs, a))
        return self.states[self.update[ai, self.state_index(s)]]

    def __eq__(self, other):
        if not isinstance(other, DiscreteSystem):
            return NotImplemented
        return (self.box.same_types(other.box) and self.states == other.states
                and np.array_equal(self.readout, other.readout)
                and np.array_equal(self.update, other.update))

    __hash__ = None


@dataclass(frozen=True)
class InitializedDiscreteSystem:
    system: DiscreteSystem
    initial: Hashable

    def __post_init__(self):
        self.system.state_index(self.initial)


def ds_parallel(f1: DiscreteSystem, f2: DiscreteSystem) -> DiscreteSystem:
    """Product system; states are pairs, first factor major."""
    n1, n2 = f1.n_states, f2.n_states
    instrumentation.composite_states += n1 * n2
    states = tuple((s1, s2) for s1 in f1.states for s2 in f2.states)
    nout2 = f2.box.outputs.size
    rdt = (f1.readout[:, None] * nout2 + f2.readout[None, :]).reshape(-1)
    upd = (f1.update[:, None, :, None] * n2 + f2.update[None, :, None, :])
    upd = upd.reshape(f1.box.inputs.size * f2.box.inputs.size, n1 * n2)
    return DiscreteSystem(box_sum(f1.box, f2.box), states, rdt, upd, composite=True)


def ds_apply(w: WiringDiagram, f: DiscreteSystem) -> DiscreteSystem:
    """``g_rdt(s) = out_eval(f_rdt(s))`` and ``g_upd(y, s) = f_upd(in_eval(y, f_rdt(s)), s)``."""
    if not f.box.same_types(w.inner):
        raise BoxMismatch(f"system box {f.box} does not match inner box {w.inner}")
    if f.composite:
        instrumentation.composite_states += f.n_states
    rdt = w.out_table[f.readout]
    fed = w.in_table[:, f.readout]
    upd = f.update[fed, np.arange(f.n_states)[None, :]]
    return DiscreteSystem(w.outer, f.states, rdt, upd, composite=f.composite)


def run_stream(f: InitializedDiscreteSystem, inputs: Sequence) -> tuple[list, list]:
    """State and output streams, both one longer than ``inputs``."""
    sys = f.system
    s = sys.state_index(f.initial)
    states, outputs = [s], [int(sys.readout[s])]
    for a in inputs:
        ai = flat_index(sys.box.inputs, _point(sys.box.inputs, a))
        s = int(sys.update[ai, s])
        states.append(s)
        outputs.append(int(sys.readout[s]))
    out_tfs = sys.box.outputs
    return ([sys.states[i] for i in states],
            [out_tfs.symbols(unflatten(out_tfs, b)) for b in outputs])


def fixed_states(f: DiscreteSystem) -> tuple[np.ndarray, np.ndarray]:
    """Pairs ``(input index, state index)`` with ``update[a, s] == s``."""
    if f.composite:
        instrumentation.composite_states += f.n_states
    fixed = f.update == np.arange(f.n_states)[None, :]
    return np.nonzero(fixed)


def steady_state_matrix(f: DiscreteSystem) -> Matrix:
    """Counts of ``(a, b)``-steady states."""
    a, s = fixed_states(f)
    return Matrix(f.box.inputs, f.box.outputs, NatPlus, a, f.readout[s], [1] * len(a))


@dataclass(frozen=True, eq=False)
class WeightedDiscreteSystem:
    """A finite system with a non-negative weight per state (``inf`` allowed)."""

    system: DiscreteSystem
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).reshape(self.system.n_states)
        if np.isnan(w).any() or (w < 0).any():
            raise ValueError("weights must be non-negative")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def box(self) -> Box:
        return self.system.box

    def __eq__(self, other):
        if not isinstance(other, WeightedDiscreteSystem):
            return NotImplemented
        return self.system == other.system and np.array_equal(self.weights, other.weights)

    __hash__ = None


def _weight_product(w1: np.ndarray, w2: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        prod = w1[:, None] * w2[None, :]
    zero = (w1[:, None] == 0) | (w2[None, :] == 0)
    return np.where(zero, 0.0, prod).reshape(-1)


def ws_parallel(f1: WeightedDiscreteSystem, f2: WeightedDiscreteSystem) -> WeightedDiscreteSystem:
    return WeightedDiscreteSystem(ds_parallel(f1.system, f2.system), _weight_product(f1.weights, f2.weights))


def ws_apply(w: WiringDiagram, f: WeightedDiscreteSystem) -> WeightedDiscreteSystem:
    return WeightedDiscreteSystem(ds_apply(w, f.system), f.weights)


def steady_state_measure(f: WeightedDiscreteSystem) -> Matrix:
    """Total weight of the ``(a, b)``-steady states."""
    a, s = fixed_states(f.system)
    return Matrix(f.box.inputs, f.box.outputs, RealPlus, a, f.system.readout[s], f.weights[s])
