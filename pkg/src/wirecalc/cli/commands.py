"""Command implementations.  Each returns a :class:`Result` with text and JSON data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import expr as ex
from ..continuous import ContinuousSystem, NewtonConfig, euler, steady_states_affine, steady_states_newton
from ..discrete import (
    InitializedDiscreteSystem,
    count_composite_states,
    run_stream,
    steady_state_matrix,
    steady_state_measure,
)
from ..linear import LinearSystem, classify_stability, eigenvalues, stst_linearization
from ..setmat import flatten_label, steady_state_sets
from . import render
from .checks import as_continuous, check_entry, check_random
from .plans import canonical_plan
from .workspace import Entry, Workspace, composite, stst


class CommandError(Exception):
    """A user-facing failure (exit status 1)."""


@dataclass
class Result:
    text: str
    data: dict
    status: int = 0


def _need(e: Entry, *kinds: str):
    if e.kind not in kinds:
        raise CommandError(f"{e.name} is a {e.kind} system; this command needs {' or '.join(kinds)}")


def _reals(text: str | None, n: int, what: str) -> tuple[float, ...]:
    if text is None or text.strip() == "":
        if n == 0:
            return ()
        raise CommandError(f"{what} needs {n} coordinate(s)")
    vals = tuple(float(x) for x in text.replace(",", " ").split())
    if len(vals) != n:
        raise CommandError(f"{what} needs {n} coordinate(s), got {len(vals)}")
    return vals


# -- compose --------------------------------------------------------------------------

def cmd_compose(ws: Workspace, target: str | None, plan="tensor-then-wire", **_) -> Result:
    e = ws.get(target)
    with count_composite_states() as counter:
        c = composite(e, plan)
    data = {"system": e.name, "kind": e.kind, "box": str(e.box), "plan": canonical_plan(plan)}
    if e.kind == "discrete":
        sys = c.system
        data.update(states=sys.n_states, composite_states=counter.composite_states)
        lines = [f"{e.name}: discrete system on {e.box}", f"states: {sys.n_states}"]
        if sys.n_states <= 64 and sys.box.inputs.size <= 64:
            rows = [["state", "output"] + [render.point_label(sys.box.inputs, a) for a in range(sys.box.inputs.size)]]
            for i, s in enumerate(sys.states):
                rows.append([flatten_label(s), render.point_label(sys.box.outputs, int(sys.readout[i]))]
                            + [flatten_label(sys.states[int(t)]) for t in sys.update[:, i]])
            lines.append(render.table(rows))
            data["table"] = rows
        return Result("\n".join(lines), data)
    if e.kind == "continuous":
        data.update(states=list(c.state_vars), dynamics=[str(d) for d in c.dynamics],
                    readout=[str(r) for r in c.readout])
        return Result(f"{e.name}: " + str(c), data)
    if e.kind == "linear":
        data.update(n=c.n, m_in=c.m_in, m_mid=c.m_mid, m_out=c.m_out)
        text = (f"{e.name}: linear system on {e.box}, n = {c.n}\n"
                f"M_in  = {c.m_in.tolist()}\nM_mid = {c.m_mid.tolist()}\nM_out = {c.m_out.tolist()}")
        return Result(text, data)
    data["matrix"] = render.matrix_json(c)
    return Result(f"{e.name}:\n" + render.matrix_text(c), data)


# -- steady-state matrices -------------------------------------------------------------

def _stst(ws: Workspace, target, plan, direct, what) -> Result:
    e = ws.get(target)
    _need(e, "discrete", "matrix")
    plan = canonical_plan(plan)
    used: list = []
    with count_composite_states() as counter:
        if direct:
            c = composite(e)
            if e.kind == "matrix":
                m = c
            else:
                m = {"counts": lambda: steady_state_matrix(c.system), "sets": lambda: steady_state_sets(c.system),
                     "measure": lambda: steady_state_measure(c)}[what]()
            how = "direct"
        else:
            m = stst(e, plan, what, used)
            how = ", ".join(sorted({p for _, p in used})) or "leaf"
    data = {"system": e.name, "what": what, "plan": how, "composite_states": counter.composite_states,
            "matrix": render.matrix_json(m)}
    title = {"counts": "steady-state counts", "sets": "steady-state sets", "measure": "steady-state measure"}[what]
    text = (f"{e.name}: {title} (plan: {how}; composite states built: {counter.composite_states})\n"
            + render.matrix_text(m))
    return Result(text, data)


def cmd_stst(ws, target, plan="tensor-then-wire", direct=False, **_):
    return _stst(ws, target, plan, direct, "counts")


def cmd_stst_sets(ws, target, plan="tensor-then-wire", direct=False, **_):
    return _stst(ws, target, plan, direct, "sets")


def cmd_stst_measure(ws, target, plan="tensor-then-wire", direct=False, **_):
    return _stst(ws, target, plan, direct, "measure")


# -- streams ---------------------------------------------------------------------------

def _default_init(e: Entry, leaf_inits):
    if not e.is_application:
        if leaf_inits is not None:
            return _label(e, next(leaf_inits))
        if e.init is None:
            raise CommandError(f"{e.name} has no 'init' state; pass --init")
        return e.init
    parts = [_default_init(a, leaf_inits) for a in e.args]
    out = parts[0]
    for p in parts[1:]:
        out = (out, p)
    return out


def _label(e: Entry, text: str):
    for s in e.value.states:
        if str(s) == text:
            return s
    raise CommandError(f"{text!r} is not a state of {e.name}")


def cmd_stream(ws, target, init=None, inputs="", **_) -> Result:
    e = ws.get(target)
    _need(e, "discrete")
    sys = composite(e).system
    leaf_inits = None
    if init is not None:
        words = init.split()
        if len(words) != e.leaves():
            raise CommandError(f"--init needs {e.leaves()} state(s), one per component")
        leaf_inits = iter(words)
    s0 = _default_init(e, leaf_inits)
    symbols = [tuple(w.split(",")) if w != "()" else () for w in inputs.split()]
    states, outs = run_stream(InitializedDiscreteSystem(sys, s0), symbols)
    rows = [["step", "input", "state", "output"]]
    for t, (s, b) in enumerate(zip(states, outs)):
        a = ",".join(symbols[t]) if t < len(symbols) else ""
        rows.append([str(t), a, flatten_label(s), ",".join(b)])
    data = {"system": e.name, "inputs": [list(a) for a in symbols],
            "states": [flatten_label(s) for s in states], "outputs": [list(b) for b in outs]}
    return Result(f"{e.name}: stream\n" + render.table(rows), data)


# -- continuous commands -----------------------------------------------------------------

def _continuous(ws, target) -> tuple[Entry, ContinuousSystem]:
    e = ws.get(target)
    if e.kind == "linear":
        return e, as_continuous(composite(e))
    _need(e, "continuous")
    return e, composite(e)


def cmd_euler(ws, target, eps=None, init=None, inputs="", steps=None, **_) -> Result:
    if eps is None:
        raise CommandError("euler needs --eps")
    e, f = _continuous(ws, target)
    d = euler(f, eps)
    lines = [f"{e.name}: Euler discretisation with eps = {d.epsilon!r}"]
    lines += [f"  {v} <- {v} + {d.epsilon!r} * ({dyn})" for v, dyn in zip(f.state_vars, f.dynamics)]
    lines += [f"  out {n} = {r}" for n, r in zip(f.box.outputs.coordinate_names(), f.readout)]
    data = {"system": e.name, "eps": d.epsilon, "states": list(f.state_vars),
            "update": [f"{v} + {d.epsilon!r} * ({dyn})" for v, dyn in zip(f.state_vars, f.dynamics)],
            "readout": [str(r) for r in f.readout]}
    if init is not None:
        s = _reals(init, f.n, "--init")
        k = f.box.inputs.dim
        seq = [_reals(w, k, "each input") for w in inputs.split()] if inputs.strip() else []
        if not seq:
            if k:
                raise CommandError("--inputs is required for a system with inputs")
            seq = [()] * (steps or 1)
        traj = [s]
        for a in seq:
            s = d.step(a, s)
            traj.append(s)
        rows = [["step"] + list(f.state_vars) + list(f.box.outputs.coordinate_names())]
        rows += [[str(t)] + [f"{x:.10g}" for x in st] + [f"{y:.10g}" for y in d.read(st)]
                 for t, st in enumerate(traj)]
        lines.append(render.table(rows))
        data["trajectory"] = [list(st) for st in traj]
    return Result("\n".join(lines), data)


def _mode(f: ContinuousSystem, mode: str) -> str:
    if mode == "auto":
        return "exact-affine" if all(ex.is_affine_in(d, f.state_vars) for d in f.dynamics) else "newton"
    if mode not in ("exact-affine", "newton"):
        raise CommandError(f"unknown mode {mode!r}")
    return mode


def cmd_roots(ws, target, at=None, mode="auto", **_) -> Result:
    e, f = _continuous(ws, target)
    a = _reals(at, f.box.inputs.dim, "--at")
    mode = _mode(f, mode)
    data = {"system": e.name, "input": list(a), "mode": mode}
    if mode == "exact-affine":
        sol = steady_states_affine(f, a)
        if sol.empty:
            data.update(kind="empty")
            return Result(f"{e.name}: no steady states at {a}", data)
        data.update(kind="affine", particular=sol.particular, basis=sol.basis,
                    readout=[str(r) for r in sol.readout], params=list(sol.params))
        lines = [f"{e.name}: steady states at input {list(a)} (exact)"]
        lines.append(f"  state  = {np.round(sol.particular, 12).tolist()}"
                     + "".join(f" + {t} * {np.round(v, 12).tolist()}" for t, v in zip(sol.params, sol.basis)))
        lines += [f"  out {n} = {r}" for n, r in zip(f.box.outputs.coordinate_names(), sol.readout)]
        if len(sol.basis):
            lines.append(f"  (a {len(sol.basis)}-dimensional family)")
        return Result("\n".join(lines), data)
    rep = steady_states_newton(f, a, NewtonConfig())
    data.update(kind="newton", heuristic=True,
                roots=[{"state": list(r.state), "output": list(r.output), "residual": r.residual} for r in rep.roots],
                failures=len(rep.failures))
    lines = [f"{e.name}: steady states at input {list(a)} (Newton search, HEURISTIC: roots may be missed)"]
    rows = [["state", "output", "residual"]]
    rows += [[_vec(r.state), _vec(r.output), f"{r.residual:.1e}"] for r in rep.roots]
    lines.append(render.table(rows))
    lines.append(f"  {len(rep.roots)} root(s), {len(rep.failures)} start(s) did not converge")
    return Result("\n".join(lines), data)


def _vec(v) -> str:
    return "(" + ", ".join(f"{x:.10g}" for x in v) + ")"


def _linearizations(f, a, mode):
    return stst_linearization(f, [a], mode, NewtonConfig())


def cmd_linearize(ws, target, at=None, mode="auto", **_) -> Result:
    e, f = _continuous(ws, target)
    a = _reals(at, f.box.inputs.dim, "--at")
    mode = _mode(f, mode)
    recs = _linearizations(f, a, mode)
    lines = [f"{e.name}: linearisation at steady states for input {list(a)} ({mode})"]
    data = {"system": e.name, "input": list(a), "mode": mode, "points": []}
    for r in recs:
        l = r.system
        lines.append(f"  state {_vec(r.state)} output {_vec(r.output)}")
        lines.append(f"    M_in = {l.m_in.tolist()}  M_mid = {l.m_mid.tolist()}  M_out = {l.m_out.tolist()}")
        data["points"].append({"state": list(r.state), "output": list(r.output),
                               "m_in": l.m_in, "m_mid": l.m_mid, "m_out": l.m_out})
    if not recs:
        lines.append("  no steady states found")
    return Result("\n".join(lines), data)


def _eig_json(vals):
    return [[z.real, z.imag] for z in vals]


def cmd_stability(ws, target, at=None, mode="auto", **_) -> Result:
    e = ws.get(target)
    if e.kind == "linear":
        l: LinearSystem = composite(e)
        vals = eigenvalues(l.m_mid)
        verdict = classify_stability(l)
        text = f"{e.name}: {verdict} (eigenvalues of M_mid: {_fmt_eigs(vals)})"
        return Result(text, {"system": e.name, "verdict": verdict, "eigenvalues": _eig_json(vals)})
    e, f = _continuous(ws, target)
    a = _reals(at, f.box.inputs.dim, "--at")
    mode = _mode(f, mode)
    lines = [f"{e.name}: stability of steady states at input {list(a)} ({mode})"]
    data = {"system": e.name, "input": list(a), "mode": mode, "points": []}
    for r in _linearizations(f, a, mode):
        vals = eigenvalues(r.system.m_mid)
        verdict = classify_stability(r.system)
        lines.append(f"  state {_vec(r.state)}: {verdict} (eigenvalues {_fmt_eigs(vals)})")
        data["points"].append({"state": list(r.state), "verdict": verdict, "eigenvalues": _eig_json(vals)})
    if not data["points"]:
        lines.append("  no steady states found")
    return Result("\n".join(lines), data)


def _fmt_eigs(vals) -> str:
    def one(z):
        if abs(z.imag) < 1e-12:
            return f"{z.real:.6g}"
        return f"{z.real:.6g}{z.imag:+.6g}i"
    return "[" + ", ".join(one(z) for z in vals) + "]"


# -- checks ------------------------------------------------------------------------------

def cmd_check_compositional(ws: Workspace | None, target, seed=0, jobs=1, random=0, samples=200, **_) -> Result:
    results = []
    if ws is not None:
        entries = [ws.get(target)] if target else [e for e in ws.systems.values() if e.is_application]
        rng = np.random.default_rng(seed)
        for e in entries:
            results += check_entry(e, rng, samples)
    if random:
        results += check_random(random, seed, jobs, samples=min(samples, 20))
    if not results:
        raise CommandError("nothing to check: no applications in the workspace and --random not given")
    bad = [r for r in results if not r.ok]
    rows = [["system", "check", "result", "detail"]]
    shown = results if ws is not None and not random else bad
    rows += [[r.system, r.check, "ok" if r.ok else "MISMATCH", r.detail] for r in shown]
    summary = f"{len(results) - len(bad)}/{len(results)} checks passed"
    text = (render.table(rows) + "\n" if len(rows) > 1 else "") + summary
    data = {"passed": len(results) - len(bad), "total": len(results),
            "results": [{"system": r.system, "check": r.check, "ok": r.ok, "detail": r.detail} for r in results]}
    return Result(text, data, status=2 if bad else 0)


COMMANDS = {
    "compose": cmd_compose,
    "stst": cmd_stst,
    "stst-sets": cmd_stst_sets,
    "stst-measure": cmd_stst_measure,
    "stream": cmd_stream,
    "euler": cmd_euler,
    "roots": cmd_roots,
    "linearize": cmd_linearize,
    "stability": cmd_stability,
    "check-compositional": cmd_check_compositional,
}
