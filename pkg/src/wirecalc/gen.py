"""Seeded random instances for property tests and ``check-compositional``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .continuous import ContinuousSystem
from .core import Box, Euclid, Finite, PortType, TypedFiniteSet
from .discrete import DiscreteSystem, WeightedDiscreteSystem
from .linear import LinearSystem
from .semimat import Matrix, NatPlus, RealPlus
from .wiring import WiringDiagram

ALPHABETS = (Finite(("0", "1")), Finite(("a", "b", "c")))
DIMS = (Euclid(1), Euclid(2))


@dataclass(frozen=True)
class GenConfig:
    max_ports: int = 3
    max_states: int = 4
    max_entry: int = 3
    kind: str = "finite"

    @property
    def types(self) -> tuple[PortType, ...]:
        return ALPHABETS if self.kind == "finite" else DIMS


def _tfs(types, prefix: str) -> TypedFiniteSet:
    return TypedFiniteSet(tuple((f"{prefix}{i}", t) for i, t in enumerate(types)))


def random_box(rng: np.random.Generator, cfg: GenConfig = GenConfig(), min_ports: int = 0) -> Box:
    pool = cfg.types
    n_in = int(rng.integers(min_ports, cfg.max_ports + 1))
    n_out = int(rng.integers(max(min_ports, 1), cfg.max_ports + 1))
    ins = [pool[int(rng.integers(len(pool)))] for _ in range(n_in)]
    outs = [pool[int(rng.integers(len(pool)))] for _ in range(n_out)]
    return Box(_tfs(ins, "i"), _tfs(outs, "o"))


def random_diagram(rng: np.random.Generator, inner: Box, cfg: GenConfig = GenConfig()) -> WiringDiagram:
    """A random type-respecting diagram out of ``inner``.

    Every inner input is fed either by an inner output of its type (feedback)
    or by an outer input, fresh or shared with another inner input.
    """
    outer_in: list[PortType] = []
    sources: list[tuple[str, int]] = []
    for t in inner.inputs.types:
        fb = [k for k, u in enumerate(inner.outputs.types) if u == t]
        shared = [q for q, u in enumerate(outer_in) if u == t]
        r = rng.random()
        if fb and r < 0.4:
            sources.append(("inner", int(rng.choice(fb))))
        elif shared and r < 0.6:
            sources.append(("outer", int(rng.choice(shared))))
        else:
            outer_in.append(t)
            sources.append(("outer", len(outer_in) - 1))
    # occasionally an unused outer input
    if rng.random() < 0.2:
        outer_in.append(cfg.types[int(rng.integers(len(cfg.types)))])
    n_out = int(rng.integers(0, cfg.max_ports + 1)) if len(inner.outputs) else 0
    phi_out = [int(rng.integers(len(inner.outputs))) for _ in range(n_out)]
    outer = Box(_tfs(outer_in, "y"), _tfs([inner.outputs.types[k] for k in phi_out], "z"))
    ny = len(outer_in)
    phi_in = [q if side == "outer" else ny + q for side, q in sources]
    return WiringDiagram(inner, outer, phi_in, phi_out)


def random_chain(rng: np.random.Generator, length: int = 2, cfg: GenConfig = GenConfig(),
                 inner: Box | None = None) -> list[WiringDiagram]:
    """Composable diagrams ``[phi1, phi2, ...]`` with ``phi_{k+1}.inner == phi_k.outer``."""
    box = inner if inner is not None else random_box(rng, cfg)
    out = []
    for _ in range(length):
        w = random_diagram(rng, box, cfg)
        out.append(w)
        box = w.outer
    return out


def random_discrete(rng: np.random.Generator, box: Box, n_states: int | None = None,
                    cfg: GenConfig = GenConfig()) -> DiscreteSystem:
    n = n_states if n_states is not None else int(rng.integers(1, cfg.max_states + 1))
    rdt = rng.integers(0, box.outputs.size, size=n)
    # bias toward fixed points so steady-state matrices are not empty
    upd = rng.integers(0, n, size=(box.inputs.size, n))
    stay = rng.random(size=upd.shape) < 0.4
    upd = np.where(stay, np.arange(n)[None, :], upd)
    return DiscreteSystem(box, [f"s{i}" for i in range(n)], rdt, upd)


def random_weighted(rng: np.random.Generator, box: Box, cfg: GenConfig = GenConfig()) -> WeightedDiscreteSystem:
    f = random_discrete(rng, box, cfg=cfg)
    w = rng.uniform(0, 3, size=f.n_states)
    w[rng.random(size=f.n_states) < 0.2] = 0.0
    return WeightedDiscreteSystem(f, w)


def random_matrix(rng: np.random.Generator, rows: TypedFiniteSet, cols: TypedFiniteSet,
                  semiring=NatPlus, density: float = 0.5, max_entry: int = 3) -> Matrix:
    shape = (rows.size, cols.size)
    mask = rng.random(size=shape) < density
    if semiring is NatPlus:
        vals = rng.integers(1, max_entry + 1, size=shape)
        data = [[int(vals[i, j]) if mask[i, j] else 0 for j in range(shape[1])] for i in range(shape[0])]
    else:
        vals = rng.uniform(0.1, max_entry, size=shape)
        data = [[float(vals[i, j]) if mask[i, j] else 0.0 for j in range(shape[1])] for i in range(shape[0])]
    return Matrix.from_dense(rows, cols, semiring, data)


def random_linear(rng: np.random.Generator, box: Box, n: int | None = None) -> LinearSystem:
    n = n if n is not None else int(rng.integers(0, 4))
    k, l = box.inputs.dim, box.outputs.dim
    return LinearSystem(box, rng.normal(size=(n, k)), rng.normal(size=(n, n)), rng.normal(size=(l, n)))


def _coef(rng) -> ex.Num:
    return ex.Num(float(np.round(rng.uniform(-3, 3), 3)))


def random_affine_system(rng: np.random.Generator, box: Box, n: int | None = None) -> ContinuousSystem:
    """Dynamics affine in state and inputs; readout affine in state."""
    n = n if n is not None else int(rng.integers(1, 4))
    states = tuple(f"x{i + 1}" for i in range(n))
    names = box.inputs.coordinate_names() + states

    def affine(vars_):
        e: ex.Expr = _coef(rng)
        for v in vars_:
            if rng.random() < 0.7:
                e = ex.Add(e, ex.Mul(_coef(rng), ex.Var(v)))
        return e

    dyn = [affine(names) for _ in range(n)]
    rdt = [affine(states) for _ in range(box.outputs.dim)]
    return ContinuousSystem(box, states, dyn, rdt)


def random_expr(rng: np.random.Generator, names, depth: int = 3, transcendental: bool = True) -> ex.Expr:
    """A random smooth expression (no division, so it is defined everywhere)."""
    if depth <= 0 or rng.random() < 0.25:
        if rng.random() < 0.6 and names:
            return ex.Var(str(rng.choice(list(names))))
        return _coef(rng)
    r = rng.random()
    sub = lambda: random_expr(rng, names, depth - 1, transcendental)  # noqa: E731
    if r < 0.3:
        return ex.Add(sub(), sub())
    if r < 0.45:
        return ex.Sub(sub(), sub())
    if r < 0.7:
        return ex.Mul(sub(), sub())
    if r < 0.8:
        return ex.Pow(sub(), int(rng.integers(2, 4)))
    if r < 0.85:
        return ex.Neg(sub())
    if transcendental:
        return ex.Call(str(rng.choice(["sin", "cos", "tanh", "exp"])), ex.Mul(ex.Num(0.5), sub()))
    return ex.Mul(sub(), sub())


def random_smooth_system(rng: np.random.Generator, box: Box, n: int | None = None,
                         transcendental: bool = True) -> ContinuousSystem:
    n = n if n is not None else int(rng.integers(1, 4))
    states = tuple(f"x{i + 1}" for i in range(n))
    names = box.inputs.coordinate_names() + states
    dyn = [random_expr(rng, names, 3, transcendental) for _ in range(n)]
    rdt = [random_expr(rng, states, 2, transcendental) for _ in range(box.outputs.dim)]
    return ContinuousSystem(box, states, dyn, rdt)
