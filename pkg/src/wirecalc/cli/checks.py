"""Compositionality checks: composing then evaluating must equal evaluating then composing.

Discrete
    ``Stst`` counts, sets and measures of the materialised composite against
    every matrix-level plan.
Continuous
    Euler of the composite against wiring the Euler discretisations of the
    parts (bitwise), and the linearisation of the composite against
    ``ls_apply`` of the parts' linearisations (to 1e-9) at random points.
Linear
    ``ls_apply`` against linearising the wired affine systems.
Matrix
    tensor-then-wire against serial-chain when the chain plan applies.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .. import expr as ex
from .. import gen
from ..continuous import ContinuousSystem, euler, fs_apply, fs_parallel
from ..discrete import steady_state_matrix, steady_state_measure
from ..errors import NonFiniteResult
from ..linear import LinearSystem, linearize_at, ls_apply, ls_parallel
from ..setmat import steady_state_sets
from ..wiring import parallel_boxes
from . import export
from .plans import PLANS, serial_chain
from .workspace import Entry, Wiring, composite, stst

LINEAR_TOL = 1e-9
MEASURE_TOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    system: str
    check: str
    ok: bool
    detail: str = ""


def as_continuous(l: LinearSystem) -> ContinuousSystem:
    """The linear system written as symbolic affine dynamics."""
    states = tuple(f"x{i + 1}" for i in range(l.n))
    ins = l.box.inputs.coordinate_names()

    def row(coefs, names):
        e: ex.Expr = ex.Num(0.0)
        for c, v in zip(coefs, names):
            e = ex.Add(e, ex.Mul(ex.Num(float(c)), ex.Var(v)))
        return e

    dyn = [ex.Add(row(l.m_mid[i], states), row(l.m_in[i], ins)) for i in range(l.n)]
    rdt = [row(l.m_out[j], states) for j in range(l.m_out.shape[0])]
    return ContinuousSystem(l.box, states, dyn, rdt)


def _check_discrete(e: Entry) -> list[CheckResult]:
    out = []
    direct = composite(e)
    counts = steady_state_matrix(direct.system)
    sets = steady_state_sets(direct.system).labels()
    measure = steady_state_measure(direct)
    out.append(CheckResult(e.name, "compose/serial-chain", composite(e, "serial-chain") == direct))
    for plan in PLANS:
        got = stst(e, plan, "counts")
        out.append(CheckResult(e.name, f"counts/{plan}", got == counts))
        got = stst(e, plan, "sets").labels()
        out.append(CheckResult(e.name, f"sets/{plan}", got == sets))
        got = stst(e, plan, "measure")
        out.append(CheckResult(e.name, f"measure/{plan}", got.allclose(measure, MEASURE_TOL)))
    return out


def _check_matrix(e: Entry) -> list[CheckResult]:
    a = stst(e, "tensor-then-wire")
    c = composite(e, "serial-chain")
    used: list = []
    b = stst(e, "serial-chain", used=used)
    ok = a == b if a.semiring.dtype is object else a.allclose(b, MEASURE_TOL)
    ok_c = a == c if a.semiring.dtype is object else a.allclose(c, MEASURE_TOL)
    return [CheckResult(e.name, "matrix/serial-chain", ok, ", ".join(f"{n}:{p}" for n, p in used)),
            CheckResult(e.name, "compose/serial-chain", ok_c)]


def _random_point(rng, n):
    return tuple(float(x) for x in np.round(rng.uniform(-2, 2, size=n), 3))


def _close(x, y, tol) -> bool:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return bool(np.all(np.abs(x - y) <= tol * np.maximum(1.0, np.abs(y))))


def _check_continuous(e: Entry, rng: np.random.Generator, samples: int,
                      linear_samples: int = 20) -> list[CheckResult]:
    w = e.wiring.diagram
    parts = [composite(a) for a in e.args]
    whole = composite(e)
    eps = 0.01
    via_parts = fs_apply(w, reduce(fs_parallel, [euler(p, eps).as_function_system() for p in parts]))
    direct = euler(whole, eps)
    serial = composite(e, "serial-chain")
    k = w.outer.inputs.dim
    field_bad = euler_bad = plan_bad = lin_bad = skipped = 0
    worst = 0.0
    for t in range(samples):
        a, s = _random_point(rng, k), _random_point(rng, whole.n)
        try:
            split = _split(s, parts)
            fed = sum((p.read(s_i) for p, s_i in zip(parts, split)), ())
            inner_in = _split_inputs(w.in_eval(a, fed), parts)
            # the wired vector field evaluated part by part
            field = sum((p.f(a_i, s_i) for p, a_i, s_i in zip(parts, inner_in, split)), ())
            if not (_close(whole.f(a, s), field, 1e-12) and _close(whole.read(s), w.out_eval(fed), 1e-12)):
                field_bad += 1
            if direct.step(a, s) != via_parts.step(a, s) or direct.read(s) != via_parts.read(s):
                euler_bad += 1
            if not (_close(serial.f(a, s), whole.f(a, s), 1e-12) and _close(serial.read(s), whole.read(s), 1e-12)):
                plan_bad += 1
            if t >= linear_samples:
                continue
            whole_lin = linearize_at(whole, a, s)
            lins = [linearize_at(p, a_i, s_i) for p, a_i, s_i in zip(parts, inner_in, split)]
            composed = ls_apply(w, reduce(ls_parallel, lins))
        except (NonFiniteResult, OverflowError, ZeroDivisionError):
            skipped += 1
            continue
        err = _rel_err(whole_lin, composed)
        worst = max(worst, err)
        if err > LINEAR_TOL:
            lin_bad += 1
    detail = f"{samples - skipped} points" + (f", {skipped} skipped (non-finite)" if skipped else "")
    return [CheckResult(e.name, "vector-field", field_bad == 0, f"{field_bad} mismatches, {detail}"),
            CheckResult(e.name, "euler", euler_bad == 0, f"{euler_bad} mismatches, {detail}"),
            CheckResult(e.name, "compose/serial-chain", plan_bad == 0, f"{plan_bad} mismatches"),
            CheckResult(e.name, "linearization", lin_bad == 0, f"max rel err {worst:.2e}")]


def _split(s, parts):
    out, i = [], 0
    for p in parts:
        out.append(tuple(s[i:i + p.n]))
        i += p.n
    return out


def _split_inputs(a, parts):
    out, i = [], 0
    for p in parts:
        k = p.box.inputs.dim
        out.append(tuple(a[i:i + k]))
        i += k
    return out


def _rel_err(l1: LinearSystem, l2: LinearSystem) -> float:
    err = 0.0
    for x, y in zip((l1.m_in, l1.m_mid, l1.m_out), (l2.m_in, l2.m_mid, l2.m_out)):
        if x.size:
            err = max(err, float(np.max(np.abs(x - y) / np.maximum(1.0, np.abs(y)))))
    return err


def _check_linear(e: Entry) -> list[CheckResult]:
    direct = composite(e)
    serial = composite(e, "serial-chain")
    as_cs = Entry(e.name, "continuous", e.box, wiring=e.wiring, args=[_as_cs_entry(a) for a in e.args])
    lin = linearize_at(composite(as_cs), (0.0,) * e.box.inputs.dim, (0.0,) * direct.n)
    err = _rel_err(direct, lin) if direct.n == lin.n else float("inf")
    return [CheckResult(e.name, "linear/derivative", err <= LINEAR_TOL, f"max rel err {err:.2e}"),
            CheckResult(e.name, "compose/serial-chain", serial.allclose(direct, LINEAR_TOL))]


def _as_cs_entry(e: Entry) -> Entry:
    if e.is_application:
        return Entry(e.name, "continuous", e.box, wiring=e.wiring, args=[_as_cs_entry(a) for a in e.args])
    return Entry(e.name, "continuous", e.box, as_continuous(e.value))


def check_entry(e: Entry, rng: np.random.Generator | None = None, samples: int = 200) -> list[CheckResult]:
    if not e.is_application:
        return []
    rng = rng if rng is not None else np.random.default_rng(0)
    if e.kind == "discrete":
        return _check_discrete(e)
    if e.kind == "matrix":
        return _check_matrix(e)
    if e.kind == "continuous":
        return _check_continuous(e, rng, samples)
    return _check_linear(e)


# -- random instances ---------------------------------------------------------------

def random_entry(kind: str, seed: int) -> Entry:
    """A random application of a random diagram to 1-3 random systems."""
    rng = np.random.default_rng(seed)
    cfg = gen.GenConfig(max_ports=2, max_states=3, kind="finite" if kind == "discrete" else "euclid")
    n_slots = int(rng.integers(1, 4))
    boxes = [gen.random_box(rng, cfg) for _ in range(n_slots)]
    slots = [f"s{i + 1}" for i in range(n_slots)]
    w = gen.random_diagram(rng, parallel_boxes(list(zip(slots, boxes))), cfg)
    leaves = []
    for slot, b in zip(slots, boxes):
        if kind == "discrete":
            ws = gen.random_weighted(rng, b, cfg)
            leaves.append(Entry(slot, kind, b, ws.system, weights=ws.weights))
        elif kind == "continuous":
            f = gen.random_smooth_system(rng, b) if rng.random() < 0.5 else gen.random_affine_system(rng, b)
            leaves.append(Entry(slot, kind, b, f))
        else:
            leaves.append(Entry(slot, kind, b, gen.random_linear(rng, b)))
    return Entry(f"{kind}#{seed}", kind, w.outer, wiring=Wiring("random", list(zip(slots, slots)), w, boxes),
                 args=leaves)


def _run_random(args) -> list[CheckResult]:
    kind, seed, samples = args
    e = random_entry(kind, seed)
    return check_entry(e, np.random.default_rng(seed), samples)


def check_random(count: int, seed: int = 0, jobs: int = 1, samples: int = 20,
                 kinds=("discrete", "continuous", "linear")) -> list[CheckResult]:
    tasks = [(k, seed * 100003 + i, samples) for k in kinds for i in range(count)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            chunks = list(pool.map(_run_random, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        chunks = [_run_random(t) for t in tasks]
    return [r for c in chunks for r in c]


def serial_applicable(e: Entry) -> bool:
    return e.is_application and serial_chain(e.wiring.diagram, e.wiring.slot_boxes) is not None


def random_workspace(kind: str, seed: int) -> str:
    """Workspace text for :func:`random_entry`."""
    return export.entry_text(random_entry(kind, seed))
