"""Continuous open systems given by expression vector fields.

The input coordinates of a system are named after the ports of its box: a
port ``p`` of dimension 1 is the variable ``p``, a port of dimension ``n`` gives
``p_1 .. p_n`` (see :meth:`core.TypedFiniteSet.coordinate_names`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import expr as ex
from .core import Box, box_sum
from .errors import BoxMismatch, InvalidEpsilon, NotAffine, WrongInterpretation
from .wiring import WiringDiagram


def _as_expr(e) -> ex.Expr:
    return ex.parse(e) if isinstance(e, str) else e


def _fresh(name: str, taken: set[str]) -> str:
    if name not in taken:
        return name
    k = 2
    while f"{name}_{k}" in taken:
        k += 1
    return f"{name}_{k}"


@dataclass(frozen=True, eq=False)
class ContinuousSystem:
    box: Box
    state_vars: tuple[str, ...]
    dynamics: tuple[ex.Expr, ...]
    readout: tuple[ex.Expr, ...]

    def __post_init__(self):
        if self.box.kind == "finite":
            raise WrongInterpretation("continuous systems need Euclidean ports")
        object.__setattr__(self, "state_vars", tuple(self.state_vars))
        object.__setattr__(self, "dynamics", tuple(_as_expr(e) for e in self.dynamics))
        object.__setattr__(self, "readout", tuple(_as_expr(e) for e in self.readout))
        states, inputs = set(self.state_vars), set(self.input_names)
        if len(states) != len(self.state_vars):
            raise ValueError("state variable names must be distinct")
        if states & inputs:
            raise ValueError(f"state variables clash with input coordinates: {sorted(states & inputs)}")
        if len(self.dynamics) != len(self.state_vars):
            raise ValueError(f"{len(self.dynamics)} dynamics components for {len(self.state_vars)} states")
        if len(self.readout) != self.box.outputs.dim:
            raise ValueError(f"{len(self.readout)} readout components for {self.box.outputs.dim} output coordinates")
        for e in self.readout:
            extra = ex.variables(e) - states
            if extra:
                raise ValueError(f"readout {e} uses non-state variables {sorted(extra)}")
        for e in self.dynamics:
            extra = ex.variables(e) - states - inputs
            if extra:
                raise ValueError(f"dynamics {e} uses undeclared variables {sorted(extra)}")

    @property
    def n(self) -> int:
        return len(self.state_vars)

    @property
    def input_names(self) -> tuple[str, ...]:
        return self.box.inputs.coordinate_names()

    @cached_property
    def _dyn_fns(self):
        names = self.input_names + self.state_vars
        return [ex.compile_expr(e, names) for e in self.dynamics]

    @cached_property
    def _rdt_fns(self):
        return [ex.compile_expr(e, self.state_vars) for e in self.readout]

    def f(self, a: Sequence[float], s: Sequence[float]) -> tuple[float, ...]:
        """Vector field ``f_dyn(a, s)``."""
        x = tuple(a) + tuple(s)
        return tuple(fn(x) for fn in self._dyn_fns)

    def read(self, s: Sequence[float]) -> tuple[float, ...]:
        s = tuple(s)
        return tuple(fn(s) for fn in self._rdt_fns)

    def jacobian_exprs(self) -> tuple[list, list, list]:
        """Symbolic ``(d dyn/d input, d dyn/d state, d readout/d state)``."""
        return self._jacobian

    @cached_property
    def _jacobian(self):
        d_in = [[ex.diff(e, v) for v in self.input_names] for e in self.dynamics]
        d_mid = [[ex.diff(e, v) for v in self.state_vars] for e in self.dynamics]
        d_out = [[ex.diff(e, v) for v in self.state_vars] for e in self.readout]
        return d_in, d_mid, d_out

    def renamed_states(self, names: Sequence[str]) -> "ContinuousSystem":
        mapping = dict(zip(self.state_vars, names))
        return ContinuousSystem(self.box, tuple(names),
                                tuple(ex.rename(e, mapping) for e in self.dynamics),
                                tuple(ex.rename(e, mapping) for e in self.readout))

    def __eq__(self, other):
        if not isinstance(other, ContinuousSystem):
            return NotImplemented
        return (self.box.same_types(other.box) and self.state_vars == other.state_vars
                and self.dynamics == other.dynamics and self.readout == other.readout)

    __hash__ = None

    def __str__(self):
        lines = [f"continuous system on {self.box}"]
        lines += [f"  dot {v} = {e}" for v, e in zip(self.state_vars, self.dynamics)]
        lines += [f"  out {n} = {e}" for n, e in zip(self.box.outputs.coordinate_names(), self.readout)]
        return "\n".join(lines)


def cs_parallel(f1: ContinuousSystem, f2: ContinuousSystem) -> ContinuousSystem:
    box = box_sum(f1.box, f2.box)
    coords = box.inputs.coordinate_names()
    k1 = len(f1.input_names)
    in1 = dict(zip(f1.input_names, coords[:k1]))
    in2 = dict(zip(f2.input_names, coords[k1:]))
    taken = set(coords)
    st1, st2 = {}, {}
    for old, table in [(v, st1) for v in f1.state_vars] + [(v, st2) for v in f2.state_vars]:
        new = _fresh(old, taken)
        taken.add(new)
        table[old] = new
    m1 = {**{a: ex.Var(b) for a, b in in1.items()}, **{a: ex.Var(b) for a, b in st1.items()}}
    m2 = {**{a: ex.Var(b) for a, b in in2.items()}, **{a: ex.Var(b) for a, b in st2.items()}}
    dyn = tuple(ex.substitute(e, m1) for e in f1.dynamics) + tuple(ex.substitute(e, m2) for e in f2.dynamics)
    rdt = tuple(ex.substitute(e, m1) for e in f1.readout) + tuple(ex.substitute(e, m2) for e in f2.readout)
    return ContinuousSystem(box, tuple(st1.values()) + tuple(st2.values()), dyn, rdt)


def _check_diagram(w: WiringDiagram, box: Box):
    if "finite" in (w.inner.kind, w.outer.kind):
        raise WrongInterpretation("continuous systems are wired with Euclidean diagrams")
    if not box.same_types(w.inner):
        raise BoxMismatch(f"system box {box} does not match inner box {w.inner}")


def cs_apply(w: WiringDiagram, f: ContinuousSystem) -> ContinuousSystem:
    """Substitute outer inputs and fed-back readouts for the inner input variables."""
    _check_diagram(w, f.box)
    outer_in = w.outer.inputs.coordinate_names()
    # keep state names apart from the new input coordinates
    taken = set(outer_in)
    states = []
    for v in f.state_vars:
        states.append(_fresh(v, taken))
        taken.add(states[-1])
    f = f.renamed_states(states) if tuple(states) != f.state_vars else f
    xin, xout = w.inner.inputs, w.inner.outputs
    in_names = f.input_names
    mapping: dict[str, ex.Expr] = {}
    for p in range(len(xin)):
        side, q = w.source_of(p)
        for i in range(xin.dims[p]):
            target = in_names[xin.offsets[p] + i]
            if side == "outer":
                mapping[target] = ex.Var(outer_in[w.outer.inputs.offsets[q] + i])
            else:
                mapping[target] = f.readout[xout.offsets[q] + i]
    dyn = tuple(ex.substitute(e, mapping) for e in f.dynamics)
    rdt = []
    for r in w.phi_out:
        rdt.extend(f.readout[xout.offsets[r]:xout.offsets[r] + xout.dims[r]])
    return ContinuousSystem(w.outer, tuple(states), dyn, tuple(rdt))


# -- function-backed discrete systems and Euler ---------------------------------

@dataclass(frozen=True)
class FunctionSystem:
    """A discrete system on Euclidean ports whose states are real vectors."""

    box: Box
    state_dim: int
    readout_fn: Callable[[tuple], tuple]
    update_fn: Callable[[tuple, tuple], tuple]

    def read(self, s) -> tuple:
        return tuple(self.readout_fn(tuple(s)))

    def step(self, a, s) -> tuple:
        return tuple(self.update_fn(tuple(a), tuple(s)))


def fs_apply(w: WiringDiagram, f: FunctionSystem) -> FunctionSystem:
    _check_diagram(w, f.box)

    def readout(s):
        return w.out_eval(f.readout_fn(s))

    def update(y, s):
        return f.update_fn(w.in_eval(y, f.readout_fn(s)), s)

    return FunctionSystem(w.outer, f.state_dim, readout, update)


def fs_parallel(f1: FunctionSystem, f2: FunctionSystem) -> FunctionSystem:
    n1, k1 = f1.state_dim, f1.box.inputs.dim

    def readout(s):
        return tuple(f1.readout_fn(s[:n1])) + tuple(f2.readout_fn(s[n1:]))

    def update(a, s):
        return tuple(f1.update_fn(a[:k1], s[:n1])) + tuple(f2.update_fn(a[k1:], s[n1:]))

    return FunctionSystem(box_sum(f1.box, f2.box), n1 + f2.state_dim, readout, update)


@dataclass(frozen=True)
class EulerSystem:
    """``s -> s + eps * f_dyn(a, s)`` with the source system's readout."""

    source: ContinuousSystem
    epsilon: float

    def __post_init__(self):
        eps = float(self.epsilon)
        if not (eps > 0 and math.isfinite(eps)):
            raise InvalidEpsilon(f"epsilon must be a positive real, got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)

    @property
    def box(self) -> Box:
        return self.source.box

    def step(self, a, s) -> tuple:
        eps = self.epsilon
        return tuple(si + eps * fi for si, fi in zip(s, self.source.f(a, s)))

    def read(self, s) -> tuple:
        return self.source.read(s)

    def as_function_system(self) -> FunctionSystem:
        return FunctionSystem(self.box, self.source.n, self.read, self.step)


def euler(f: ContinuousSystem, eps: float) -> EulerSystem:
    return EulerSystem(f, eps)


# -- steady states -------------------------------------------------------------

@dataclass(frozen=True)
class SteadyState:
    input: tuple
    state: tuple
    output: tuple
    residual: float


@dataclass(frozen=True)
class AffineSolution:
    """All steady states at one input: ``particular + span(basis)``, or none."""

    input: tuple
    particular: np.ndarray | None
    basis: np.ndarray
    readout: tuple[ex.Expr, ...] = ()
    params: tuple[str, ...] = ()

    @property
    def empty(self) -> bool:
        return self.particular is None

    @property
    def unique(self) -> bool:
        return not self.empty and len(self.basis) == 0

    def point(self, t: Sequence[float] = ()) -> np.ndarray:
        t = np.asarray(t, dtype=float).reshape(len(self.basis))
        return self.particular + t @ self.basis if len(self.basis) else self.particular.copy()


@dataclass(frozen=True)
class NewtonConfig:
    lo: float = -10.0
    hi: float = 10.0
    points: int = 5
    max_iter: int = 100
    tol: float = 1e-10
    dedup: float = 1e-6


@dataclass(frozen=True)
class NewtonReport:
    input: tuple
    roots: tuple[SteadyState, ...]
    failures: tuple[tuple[tuple, str], ...] = field(default=())
    heuristic: bool = True


def _jacobian_fn(f: ContinuousSystem):
    names = f.input_names + f.state_vars
    _, d_mid, _ = f.jacobian_exprs()
    fns = [[ex.compile_expr(e, names) for e in row] for row in d_mid]

    def jac(a, s):
        x = tuple(a) + tuple(s)
        return np.array([[fn(x) for fn in row] for row in fns], dtype=float).reshape(f.n, f.n)
    return jac


def steady_states_affine(f: ContinuousSystem, a: Sequence[float], rcond: float = 1e-12) -> AffineSolution:
    """Exact solution set of ``f_dyn(a, s) = 0`` when the dynamics are affine in the state."""
    a = tuple(float(x) for x in a)
    for e in f.dynamics:
        if not ex.is_affine_in(e, f.state_vars):
            raise NotAffine(f"dynamics {e} is not affine in the state")
    n = f.n
    if n == 0:
        return AffineSolution(a, np.zeros(0), np.zeros((0, 0)), tuple(f.readout))
    A = _jacobian_fn(f)(a, (0.0,) * n)
    c = np.array(f.f(a, (0.0,) * n))
    u, sv, vt = np.linalg.svd(A)
    scale = max(sv.max() if len(sv) else 0.0, 1.0)
    rank = int((sv > rcond * scale).sum())
    basis = vt[rank:]
    p, *_ = np.linalg.lstsq(A, -c, rcond=None)
    residual = np.abs(A @ p + c).max() if n else 0.0
    if residual <= 1e-9 * max(1.0, np.abs(c).max()):
        # iterative refinement against the vector field itself
        for _ in range(3):
            r = np.array(f.f(a, tuple(p)))
            if not np.all(np.isfinite(r)) or np.abs(r).max() == 0.0:
                break
            dp, *_ = np.linalg.lstsq(A, -r, rcond=None)
            q = p + dp
            if np.abs(f.f(a, tuple(q))).max() >= np.abs(r).max():
                break
            p = q
    if residual > 1e-9 * max(1.0, np.abs(c).max()):
        return AffineSolution(a, None, basis)
    params = tuple(f"t{i + 1}" for i in range(len(basis)))
    subst = {}
    for j, v in enumerate(f.state_vars):
        e: ex.Expr = ex.Num(p[j])
        for i, t in enumerate(params):
            e = ex.add(e, ex.mul(ex.Num(basis[i, j]), ex.Var(t)))
        subst[v] = e
    rdt = tuple(ex.simplify(ex.substitute(e, subst)) for e in f.readout)
    return AffineSolution(a, p, basis, rdt, params)


def steady_states_newton(f: ContinuousSystem, a: Sequence[float], config: NewtonConfig = NewtonConfig(),
                         starts: Sequence[Sequence[float]] | None = None) -> NewtonReport:
    """Multi-start Newton search.  HEURISTIC: roots can be missed."""
    a = tuple(float(x) for x in a)
    n = f.n
    if starts is None:
        grid = np.linspace(config.lo, config.hi, config.points)
        starts = list(itertools.product(grid, repeat=n))
    jac = _jacobian_fn(f)
    roots: list[np.ndarray] = []
    found: list[SteadyState] = []
    failures = []
    for s0 in starts:
        s = np.array(s0, dtype=float)
        ok = False
        for _ in range(config.max_iter):
            fv = np.array(f.f(a, s))
            if not np.all(np.isfinite(fv)):
                break
            if np.linalg.norm(fv) < config.tol:
                ok = True
                break
            step, *_ = np.linalg.lstsq(jac(a, s), -fv, rcond=None)
            if not np.any(step):
                break
            s = s + step
        if not ok:
            fv = np.array(f.f(a, s))
            ok = bool(np.all(np.isfinite(fv)) and np.linalg.norm(fv) < config.tol)
        if not ok:
            failures.append((tuple(float(x) for x in s0), "did not converge"))
            continue
        if any(np.linalg.norm(s - r) < config.dedup for r in roots):
            continue
        roots.append(s)
        found.append(SteadyState(a, tuple(s.tolist()), f.read(s), float(np.linalg.norm(f.f(a, s)))))
    found.sort(key=lambda r: r.state)
    return NewtonReport(a, tuple(found), tuple(failures))


def steady_states(f: ContinuousSystem, a: Sequence[float], mode: str = "exact-affine", **kw):
    if mode == "exact-affine":
        return steady_states_affine(f, a, **kw)
    if mode == "newton":
        return steady_states_newton(f, a, **kw)
    raise ValueError(f"unknown mode {mode!r}")


def steady_states_at(f: ContinuousSystem, a: Sequence[float], b: Sequence[float], mode: str = "newton",
                     tol: float = 1e-9, **kw) -> list[SteadyState]:
    """Pointwise ``Stst(F)[a, b]``: steady states at ``a`` whose readout is within ``tol`` of ``b``."""
    b = np.asarray(b, dtype=float)
    if mode == "exact-affine":
        sol = steady_states_affine(f, a, **kw)
        if sol.empty:
            return []
        if len(sol.basis):
            raise ValueError("the steady states form a continuum; query the AffineSolution instead")
        cands = [SteadyState(sol.input, tuple(sol.particular.tolist()), f.read(sol.particular),
                             float(np.linalg.norm(f.f(sol.input, sol.particular))))]
    else:
        cands = list(steady_states_newton(f, a, **kw).roots)
    return [c for c in cands if np.all(np.abs(np.asarray(c.output) - b) <= tol)]
