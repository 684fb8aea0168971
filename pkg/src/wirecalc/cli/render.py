"""Text tables and JSON payloads for command results."""

from __future__ import annotations

import json
import math

import numpy as np

from ..core import TypedFiniteSet, unflatten
from ..semimat import Matrix
from ..setmat import SetMatrix, flatten_label

DENSE_LIMIT = 4096


def point_label(tfs: TypedFiniteSet, idx: int) -> str:
    syms = tfs.symbols(unflatten(tfs, idx))
    if not syms:
        return "()"
    sep = "" if all(len(s) == 1 for s in syms) else ","
    return sep.join(syms)


def value_str(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.6g}"
    return str(v)


def _json_value(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return v


def set_str(s) -> str:
    return "{" + ", ".join(sorted(flatten_label(e) for e in s)) + "}"


def _cells(m):
    if isinstance(m, SetMatrix):
        return {k: set_str(v) for k, v in m.entries.items()}, "{}"
    return {k: value_str(v) for k, v in m.entries.items()}, value_str(m.semiring.zero)


def table(rows: list[list[str]]) -> str:
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows)


def matrix_text(m: Matrix | SetMatrix) -> str:
    """Rows are input points ("Is fixed by"), columns output points ("Outputs")."""
    nr, nc = m.shape
    cells, zero = _cells(m)
    rl = [point_label(m.row_space, i) for i in range(nr)]
    cl = [point_label(m.col_space, j) for j in range(nc)]
    if nr * nc > DENSE_LIMIT:
        rows = [["Is fixed by", "Outputs", "Value"]]
        rows += [[rl[i], cl[j], cells[(i, j)]] for (i, j) in sorted(cells)]
        return table(rows) + f"\n({len(cells)} nonzero of {nr}x{nc})"
    rows = [["Is fixed by / Outputs"] + cl]
    rows += [[rl[i]] + [cells.get((i, j), zero) for j in range(nc)] for i in range(nr)]
    return table(rows)


def matrix_json(m: Matrix | SetMatrix) -> dict:
    nr, nc = m.shape
    out = {
        "row_ports": list(m.row_space.names),
        "col_ports": list(m.col_space.names),
        "shape": [nr, nc],
        "rows": [point_label(m.row_space, i) for i in range(nr)],
        "cols": [point_label(m.col_space, j) for j in range(nc)],
    }
    if isinstance(m, SetMatrix):
        out["kind"] = "sets"
        out["entries"] = [[i, j, sorted(flatten_label(e) for e in s)] for (i, j), s in sorted(m.entries.items())]
    else:
        out["kind"] = "matrix"
        out["semiring"] = m.semiring.name
        out["entries"] = [[i, j, _json_value(v)] for (i, j), v in sorted(m.entries.items())]
    return out


def dumps(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2, default=_default)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"cannot serialise {type(o).__name__}")
