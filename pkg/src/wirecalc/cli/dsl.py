"""Parser and printer for workspace files (``.wd``).

Example::

    type Bool = {T, F}
    box X { in in: Bool; out out: Bool }
    wiring loop : a:X b:X -> X { a.in <- X.in; b.in <- a.out; X.out <- b.out }
    discrete x on X {
      states 1 2
      init 1
      table T 1 -> T 1
      table F 1 -> T 2
      table T 2 -> F 2
      table F 2 -> F 1
    }
    system z = loop(x, x)
    run stst z

Statements are separated by newlines or ``;``; ``#`` starts a comment.
Syntax errors are collected per statement so one run reports all of them.
"""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass, field

from .. import expr as ex
from ..errors import ExprSyntaxError


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str

    def __str__(self):
        return f"{self.line}:{self.col}: {self.message}"


class WorkspaceError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(map(str, self.diagnostics)))


def _loc():
    return field(default=(0, 0), compare=False, repr=False)


# -- AST -------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteType:
    symbols: tuple[str, ...]


@dataclass(frozen=True)
class EuclidType:
    dim: int


@dataclass(frozen=True)
class TypeRef:
    name: str
    loc: tuple = _loc()


@dataclass(frozen=True)
class TypeDecl:
    name: str
    type: FiniteType | EuclidType
    loc: tuple = _loc()


@dataclass(frozen=True)
class PortDecl:
    direction: str
    name: str
    type: FiniteType | EuclidType | TypeRef
    loc: tuple = _loc()


@dataclass(frozen=True)
class BoxDecl:
    name: str
    ports: tuple[PortDecl, ...]
    loc: tuple = _loc()


@dataclass(frozen=True)
class Wire:
    target: tuple[str, str]
    source: tuple[str, str]
    loc: tuple = _loc()


@dataclass(frozen=True)
class WiringDecl:
    name: str
    slots: tuple[tuple[str, str], ...]
    outer: str
    wires: tuple[Wire, ...]
    loc: tuple = _loc()


@dataclass(frozen=True)
class Row:
    input: tuple[str, ...]
    state: str
    output: tuple[str, ...]
    next: str
    loc: tuple = _loc()


@dataclass(frozen=True)
class DiscreteDecl:
    name: str
    box: str
    states: tuple[str, ...]
    init: str | None
    weights: tuple[tuple[str, float], ...]
    rows: tuple[Row, ...]
    loc: tuple = _loc()


@dataclass(frozen=True)
class ContinuousDecl:
    name: str
    box: str
    states: tuple[str, ...]
    dots: tuple[tuple[str, ex.Expr], ...]
    outs: tuple[tuple[str, ex.Expr], ...]
    loc: tuple = _loc()


@dataclass(frozen=True)
class LinearDecl:
    name: str
    box: str
    dim: int
    m_in: tuple[tuple[float, ...], ...]
    m_mid: tuple[tuple[float, ...], ...]
    m_out: tuple[tuple[float, ...], ...]
    loc: tuple = _loc()


@dataclass(frozen=True)
class MatrixDecl:
    name: str
    box: str
    semiring: str
    rows: tuple[tuple[float | int, ...], ...]
    loc: tuple = _loc()


@dataclass(frozen=True)
class SystemDecl:
    name: str
    wiring: str
    args: tuple[str, ...]
    loc: tuple = _loc()


@dataclass(frozen=True)
class RunDecl:
    command: str
    args: tuple[str, ...]
    loc: tuple = _loc()


@dataclass(frozen=True)
class WorkspaceAST:
    decls: tuple = ()

    def of(self, kind) -> list:
        return [d for d in self.decls if isinstance(d, kind)]


# -- lexer -----------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<ws>[ \t\r]+)
  | (?P<arrow><-|->)
  | (?P<num>-?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?(?![A-Za-z_.])|-?inf\b)
  | (?P<word>[A-Za-z0-9_][A-Za-z0-9_.]*)
  | (?P<punct>[{}()\[\],;:=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    pos: int
    line: int
    col: int


class _Error(Exception):
    def __init__(self, line, col, message):
        self.diag = Diagnostic(line, col, message)


class Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line_starts = [0] + [m.end() for m in re.finditer(r"\n", text)]

    def where(self, pos: int) -> tuple[int, int]:
        lo, hi = 0, len(self.line_starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.line_starts[mid] <= pos:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1, pos - self.line_starts[lo] + 1

    def _scan(self, pos: int) -> tuple[Tok, int]:
        while True:
            if pos >= len(self.text):
                line, col = self.where(pos)
                return Tok("eof", "", pos, line, col), pos
            m = _TOKEN.match(self.text, pos)
            if not m:
                line, col = self.where(pos)
                raise _Error(line, col, f"unexpected character {self.text[pos]!r}")
            kind = m.lastgroup
            if kind in ("comment", "ws"):
                pos = m.end()
                continue
            line, col = self.where(pos)
            text = m.group()
            if kind == "punct" and text == ";":
                kind = "nl"
            return Tok(kind, text, pos, line, col), m.end()

    def peek(self) -> Tok:
        return self._scan(self.pos)[0]

    def next(self) -> Tok:
        tok, self.pos = self._scan(self.pos)
        return tok

    def raw_statement(self) -> tuple[str, int]:
        """Raw text up to the end of the statement (newline, ``;`` or closing ``}``)."""
        start = self.pos
        depth = 0
        pos = start
        while pos < len(self.text):
            c = self.text[pos]
            if c == "#" or c == "\n" or c == ";":
                break
            if c == "(":
                depth += 1
            elif c == ")":
                depth -= 1
            elif c == "}" and depth <= 0:
                break
            pos += 1
        self.pos = pos
        return self.text[start:pos], start


# -- parser ----------------------------------------------------------------------

KEYWORDS = ("type", "box", "wiring", "discrete", "continuous", "linear", "matrix", "system", "run")


class Parser:
    def __init__(self, text: str):
        self.lx = Lexer(text)
        self.diags: list[Diagnostic] = []

    # helpers
    def err(self, tok: Tok, msg: str):
        raise _Error(tok.line, tok.col, msg)

    def expect(self, kind: str, text: str | None = None) -> Tok:
        t = self.lx.next()
        if t.kind != kind or (text is not None and t.text != text):
            want = repr(text) if text else kind
            got = "end of file" if t.kind == "eof" else ("end of line" if t.kind == "nl" else repr(t.text))
            self.err(t, f"expected {want}, got {got}")
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.lx.peek()
        return t.kind == kind and (text is None or t.text == text)

    def word(self) -> str:
        t = self.lx.next()
        if t.kind not in ("word", "num"):
            got = "end of line" if t.kind == "nl" else repr(t.text)
            self.err(t, f"expected a name, got {got}")
        return t.text

    def skip_nl(self):
        while self.at("nl"):
            self.lx.next()

    def end_statement(self):
        t = self.lx.peek()
        if t.kind == "nl":
            self.lx.next()
        elif not (t.kind == "eof" or (t.kind == "punct" and t.text == "}")):
            self.err(t, f"unexpected {t.text!r}")

    def recover(self, in_block: bool):
        """Skip to the next statement; at top level also skip the rest of a block."""
        depth = 0
        while True:
            try:
                t = self.lx.peek()
            except _Error:
                self.lx.pos += 1
                continue
            if t.kind == "eof":
                return
            if t.kind == "punct" and t.text == "{":
                depth += 1
            if t.kind == "punct" and t.text == "}":
                if depth == 0 and in_block:
                    return
                depth -= 1
                if depth <= 0 and not in_block:
                    self.lx.next()
                    return
            if t.kind == "nl" and depth <= 0:
                self.lx.next()
                return
            self.lx.next()

    # top level
    def parse(self) -> WorkspaceAST:
        decls = []
        while True:
            try:
                self.skip_nl()
                t = self.lx.peek()
                if t.kind == "eof":
                    break
                decl = self.statement()
                if decl is not None:
                    decls.append(decl)
            except _Error as e:
                self.diags.append(e.diag)
                self.recover(in_block=False)
        if self.diags:
            raise WorkspaceError(self.diags)
        return WorkspaceAST(tuple(decls))

    def statement(self):
        t = self.lx.next()
        if t.kind != "word" or t.text not in KEYWORDS:
            self.err(t, f"expected one of {', '.join(KEYWORDS)}, got {t.text!r}")
        loc = (t.line, t.col)
        return getattr(self, "p_" + t.text)(loc)

    def type_expr(self):
        t = self.lx.peek()
        if t.kind == "punct" and t.text == "{":
            self.lx.next()
            syms = [self.word()]
            while self.at("punct", ","):
                self.lx.next()
                syms.append(self.word())
            self.expect("punct", "}")
            if len(set(syms)) != len(syms):
                self.err(t, "duplicate symbol in alphabet")
            return FiniteType(tuple(syms))
        name = self.lx.next()
        if name.kind != "word":
            self.err(name, "expected a type")
        if name.text == "R":
            if self.at("num"):
                d = self.lx.next()
                if not re.fullmatch(r"\d+", d.text):
                    self.err(d, "dimension must be a natural number")
                return EuclidType(int(d.text))
            return EuclidType(1)
        return TypeRef(name.text, (name.line, name.col))

    def p_type(self, loc):
        name = self.word()
        self.expect("punct", "=")
        ty = self.type_expr()
        if isinstance(ty, TypeRef):
            self.err(self.lx.peek(), "type aliases must be literal types")
        self.end_statement()
        return TypeDecl(name, ty, loc)

    def block(self, item):
        """``{ item; item; ... }`` with per-item error recovery."""
        self.expect("punct", "{")
        out = []
        while True:
            self.skip_nl()
            if self.at("punct", "}"):
                self.lx.next()
                break
            if self.at("eof"):
                self.err(self.lx.peek(), "unterminated block, expected '}'")
            try:
                r = item()
                if r is not None:
                    out.append(r)
                self.end_statement()
            except _Error as e:
                self.diags.append(e.diag)
                self.recover(in_block=True)
        self.end_statement()
        return out

    def p_box(self, loc):
        name = self.word()

        def port():
            d = self.lx.next()
            if d.text not in ("in", "out"):
                self.err(d, f"expected 'in' or 'out', got {d.text!r}")
            pname = self.word()
            self.expect("punct", ":")
            return PortDecl(d.text, pname, self.type_expr(), (d.line, d.col))

        return BoxDecl(name, tuple(self.block(port)), loc)

    def ref(self) -> tuple[str, str]:
        t = self.lx.next()
        if t.kind != "word" or "." not in t.text:
            self.err(t, f"expected OWNER.port, got {t.text!r}")
        owner, _, port = t.text.partition(".")
        return owner, port

    def p_wiring(self, loc):
        name = self.word()
        self.expect("punct", ":")
        slots = []
        while not self.at("arrow", "->"):
            s = self.word()
            self.expect("punct", ":")
            slots.append((s, self.word()))
        self.lx.next()
        outer = self.word()

        def wire():
            t = self.lx.peek()
            target = self.ref()
            self.expect("arrow", "<-")
            return Wire(target, self.ref(), (t.line, t.col))

        return WiringDecl(name, tuple(slots), outer, tuple(self.block(wire)), loc)

    def point(self) -> tuple[str, ...]:
        if self.at("punct", "("):
            self.lx.next()
            self.expect("punct", ")")
            return ()
        syms = [self.word()]
        while self.at("punct", ","):
            self.lx.next()
            syms.append(self.word())
        return tuple(syms)

    def number(self) -> float:
        t = self.lx.next()
        if t.kind != "num":
            self.err(t, f"expected a number, got {t.text!r}")
        return float(t.text)

    def p_discrete(self, loc):
        name = self.word()
        self.expect("word", "on")
        box = self.word()
        states, init, weights, rows = [], [None], [], []

        def item():
            t = self.lx.next()
            if t.text == "states":
                while self.at("word") or self.at("num"):
                    states.append(self.word())
            elif t.text == "init":
                init[0] = self.word()
            elif t.text == "weight":
                weights.append((self.word(), self.number()))
            elif t.text == "table":
                a = self.point()
                s = self.word()
                self.expect("arrow", "->")
                b = self.point()
                rows.append(Row(a, s, b, self.word(), (t.line, t.col)))
            else:
                self.err(t, f"expected states, init, weight or table, got {t.text!r}")

        self.block(item)
        return DiscreteDecl(name, box, tuple(states), init[0], tuple(weights), tuple(rows), loc)

    def expression(self) -> ex.Expr:
        text, start = self.lx.raw_statement()
        line, col = self.lx.where(start)
        try:
            return ex.parse(text)
        except ExprSyntaxError as e:
            # map the position inside the expression back to the file
            ecol = col + e.col - 1 if e.line == 1 else e.col
            raise _Error(line + e.line - 1, ecol, e.bare_message) from None

    def p_continuous(self, loc):
        name = self.word()
        self.expect("word", "on")
        box = self.word()
        states, dots, outs = [], [], []

        def item():
            t = self.lx.next()
            if t.text == "state":
                while self.at("word"):
                    states.append(self.word())
            elif t.text in ("dot", "out"):
                v = self.word()
                self.expect("punct", "=")
                (dots if t.text == "dot" else outs).append((v, self.expression()))
            else:
                self.err(t, f"expected state, dot or out, got {t.text!r}")

        self.block(item)
        return ContinuousDecl(name, box, tuple(states), tuple(dots), tuple(outs), loc)

    def matrix_lit(self) -> tuple[tuple[float, ...], ...]:
        self.expect("punct", "[")
        rows = []
        while self.at("punct", "["):
            self.lx.next()
            row = []
            while not self.at("punct", "]"):
                row.append(self.number())
                if self.at("punct", ","):
                    self.lx.next()
            self.lx.next()
            rows.append(tuple(row))
            if self.at("punct", ","):
                self.lx.next()
        self.expect("punct", "]")
        return tuple(rows)

    def p_linear(self, loc):
        name = self.word()
        self.expect("word", "on")
        box = self.word()
        parts = {"dim": None, "in": (), "mid": (), "out": ()}

        def item():
            t = self.lx.next()
            if t.text == "dim":
                d = self.lx.next()
                if d.kind != "num" or not re.fullmatch(r"\d+", d.text):
                    self.err(d, "dim must be a natural number")
                parts["dim"] = int(d.text)
            elif t.text in ("in", "mid", "out"):
                parts[t.text] = self.matrix_lit()
            else:
                self.err(t, f"expected dim, in, mid or out, got {t.text!r}")

        self.block(item)
        dim = parts["dim"] if parts["dim"] is not None else len(parts["mid"])
        return LinearDecl(name, box, dim, parts["in"], parts["mid"], parts["out"], loc)

    def p_matrix(self, loc):
        name = self.word()
        self.expect("word", "on")
        box = self.word()
        sr = self.lx.next()
        if sr.text not in ("nat", "real"):
            self.err(sr, f"expected semiring nat or real, got {sr.text!r}")
        rows = []

        def item():
            t = self.lx.next()
            if t.text != "row":
                self.err(t, f"expected row, got {t.text!r}")
            vals = []
            while self.at("num"):
                v = self.lx.next()
                vals.append(float(v.text) if sr.text == "real" or "inf" in v.text else _nat(self, v))
            rows.append(tuple(vals))

        self.block(item)
        return MatrixDecl(name, box, sr.text, tuple(rows), loc)

    def p_system(self, loc):
        name = self.word()
        self.expect("punct", "=")
        wiring = self.word()
        self.expect("punct", "(")
        args = []
        while not self.at("punct", ")"):
            args.append(self.word())
            if self.at("punct", ","):
                self.lx.next()
            elif not self.at("punct", ")"):
                self.err(self.lx.peek(), "expected ',' or ')'")
        self.lx.next()
        self.end_statement()
        return SystemDecl(name, wiring, tuple(args), loc)

    def p_run(self, loc):
        tok = self.lx.peek()
        text, _ = self.lx.raw_statement()
        try:
            words = shlex.split(text)
        except ValueError as e:
            self.err(tok, f"bad quoting in run line: {e}")
        if not words:
            self.err(self.lx.peek(), "run needs a command")
        self.end_statement()
        return RunDecl(words[0], tuple(words[1:]), loc)


def _nat(p: Parser, t: Tok) -> int:
    if not re.fullmatch(r"\d+", t.text):
        p.err(t, f"{t.text} is not a natural number")
    return int(t.text)


def parse_workspace(text: str) -> WorkspaceAST:
    return Parser(text).parse()


# -- printer -----------------------------------------------------------------------

def _num(v) -> str:
    if isinstance(v, int):
        return str(v)
    if v == float("inf"):
        return "inf"
    return repr(float(v)) if not float(v).is_integer() else str(int(v)) + ".0"


def _type_str(t) -> str:
    if isinstance(t, FiniteType):
        return "{" + ", ".join(t.symbols) + "}"
    if isinstance(t, EuclidType):
        return f"R {t.dim}"
    return t.name


def _point_str(p: tuple[str, ...]) -> str:
    return ",".join(p) if p else "()"


def _mat_str(m) -> str:
    return "[" + ", ".join("[" + ", ".join(_num(v) for v in row) + "]" for row in m) + "]"


def print_workspace(ws: WorkspaceAST) -> str:
    out = []
    for d in ws.decls:
        if isinstance(d, TypeDecl):
            out.append(f"type {d.name} = {_type_str(d.type)}")
        elif isinstance(d, BoxDecl):
            ports = "; ".join(f"{p.direction} {p.name}: {_type_str(p.type)}" for p in d.ports)
            out.append(f"box {d.name} {{ {ports} }}")
        elif isinstance(d, WiringDecl):
            slots = " ".join(f"{s}:{b}" for s, b in d.slots)
            out.append(f"wiring {d.name} : {slots} -> {d.outer} {{")
            out += [f"  {'.'.join(w.target)} <- {'.'.join(w.source)}" for w in d.wires]
            out.append("}")
        elif isinstance(d, DiscreteDecl):
            out.append(f"discrete {d.name} on {d.box} {{")
            out.append("  states " + " ".join(d.states))
            if d.init is not None:
                out.append(f"  init {d.init}")
            out += [f"  weight {s} {_num(w)}" for s, w in d.weights]
            out += [f"  table {_point_str(r.input)} {r.state} -> {_point_str(r.output)} {r.next}" for r in d.rows]
            out.append("}")
        elif isinstance(d, ContinuousDecl):
            out.append(f"continuous {d.name} on {d.box} {{")
            out.append("  state " + " ".join(d.states))
            out += [f"  dot {v} = {e}" for v, e in d.dots]
            out += [f"  out {v} = {e}" for v, e in d.outs]
            out.append("}")
        elif isinstance(d, LinearDecl):
            out.append(f"linear {d.name} on {d.box} {{")
            out.append(f"  dim {d.dim}")
            out.append(f"  in {_mat_str(d.m_in)}")
            out.append(f"  mid {_mat_str(d.m_mid)}")
            out.append(f"  out {_mat_str(d.m_out)}")
            out.append("}")
        elif isinstance(d, MatrixDecl):
            out.append(f"matrix {d.name} on {d.box} {d.semiring} {{")
            out += ["  row " + " ".join(_num(v) for v in row) for row in d.rows]
            out.append("}")
        elif isinstance(d, SystemDecl):
            out.append(f"system {d.name} = {d.wiring}({', '.join(d.args)})")
        elif isinstance(d, RunDecl):
            out.append("run " + shlex.join((d.command,) + d.args))
    return "\n".join(out) + ("\n" if out else "")
