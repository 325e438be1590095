"""The definition language: lexer, parser, canonical printer and loader.

Example::

    chart M { even: t; odd: xi1, xi2; box: t in (0.1, 3.0); }
    metric g on M = dt*dt + 2*dxi1*dxi2;
    vector Q on M (odd) = d_xi1;
    check killing(g, Q);

Metric expressions are polynomials in fiber symbols ``d<coord>`` standing for
the velocities; the loader reads them as functions on the tangent chart and
extracts components from second fiber derivatives.  Vector expressions are
sums ``coeff * d_<coord>`` with coefficients on the left.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Union

from .charts import Chart, CoordinateChange
from .geometry import MetricTensor, VectorField
from .liealg import LieAlgebraData, LieDataError
from .oracles import components_from_quadratic, fiber_chart, fiber_index
from .scalar import FUNCTIONS
from .superalgebra import NotInvertible, Parity, SuperFunction, apply_function, invert

DIRECTIVES = {
    "homological": (1, 1),
    "killing": (2, 2),
    "riemannian_q": (2, 2),
    "divergence": (1, 2),
    "modular": (1, 2),
    "unimodular": (2, 2),
    "shander": (2, 2),
    "morphism": (5, 5),
    "liealg_killing": (1, 1),
    "liealg_trace": (1, 1),
}

KEYWORDS = {"chart", "metric", "vector", "change", "liealg", "check", "on", "from", "to", "inverse",
            "even", "odd", "box", "in", "dim", "structure", "form"}


class DSLError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message, self.line, self.col = message, line, col
        super().__init__(f"{line}:{col}: {message}" if line else message)


# -- lexer ---------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # NAME NUM OP EOF
    text: str
    line: int
    col: int


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>[{}();:,=+\-*/^])
""", re.VERBOSE)


def tokenize(text: str) -> list[Token]:
    out = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise DSLError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line, col = line + 1, 1
        else:
            if kind in ("num", "name", "op"):
                out.append(Token(kind.upper(), s, line, col))
            col += len(s)
        pos = m.end()
    out.append(Token("EOF", "", line, col))
    return out


# -- AST -------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exp: int


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]


@dataclass(frozen=True)
class ChartDecl:
    name: str
    even: tuple[str, ...]
    odd: tuple[str, ...]
    box: tuple[tuple[str, Fraction, Fraction], ...] = ()
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class MetricDecl:
    name: str
    chart: str
    expr: Expr
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class VectorDecl:
    name: str
    chart: str
    parity: str
    expr: Expr
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ChangeDecl:
    name: str
    source: str
    target: str
    images: tuple[tuple[str, Expr], ...]
    inverse: tuple[tuple[str, Expr], ...] | None = None
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class LieDecl:
    name: str
    dim: int
    structure: tuple[tuple[int, int, int, Fraction], ...] = ()
    form: tuple[tuple[int, int, Fraction], ...] = ()
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class CheckDecl:
    directive: str
    args: tuple[str, ...]
    pos: tuple[int, int] = field(default=(0, 0), compare=False)


Item = Union[ChartDecl, MetricDecl, VectorDecl, ChangeDecl, LieDecl, CheckDecl]


@dataclass
class Document:
    items: list[Item]
    charts: dict[str, Chart] = field(default_factory=dict, compare=False, repr=False)
    metrics: dict[str, MetricTensor] = field(default_factory=dict, compare=False, repr=False)
    vectors: dict[str, VectorField] = field(default_factory=dict, compare=False, repr=False)
    changes: dict[str, CoordinateChange] = field(default_factory=dict, compare=False, repr=False)
    liealgs: dict[str, LieAlgebraData] = field(default_factory=dict, compare=False, repr=False)

    @property
    def checks(self) -> list[CheckDecl]:
        return [i for i in self.items if isinstance(i, CheckDecl)]

    def of_type(self, cls) -> list:
        return [i for i in self.items if isinstance(i, cls)]


# -- parser ------------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def err(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise DSLError(f"{msg} (found {found!r})", tok.line, tok.col)

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("OP", "NAME") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.err(f"expected {text!r}")
        return self.next()

    def name(self, what: str = "identifier") -> str:
        if self.tok.kind != "NAME":
            self.err(f"expected {what}")
        if self.tok.text in KEYWORDS:
            self.err(f"keyword cannot be used as {what}")
        return self.next().text

    def integer(self) -> int:
        sign = -1 if self.at("-") and self.next() else 1
        if self.tok.kind != "NUM" or not self.tok.text.isdigit():
            self.err("expected an integer")
        return sign * int(self.next().text)

    def number(self) -> Fraction:
        """Signed rational literal, optionally a/b."""
        sign = 1
        if self.at("-"):
            self.next()
            sign = -1
        if self.tok.kind != "NUM":
            self.err("expected a number")
        v = Fraction(self.next().text)
        if self.at("/"):
            self.next()
            if self.tok.kind != "NUM":
                self.err("expected a denominator")
            d = Fraction(self.next().text)
            if d == 0:
                self.err("zero denominator")
            v /= d
        return sign * v

    # -- items ---------------------------------------------------------
    def document(self) -> list[Item]:
        items = []
        while self.tok.kind != "EOF":
            t = self.tok
            if t.kind != "NAME":
                self.err("expected a declaration")
            handler = {"chart": self.chart, "metric": self.metric, "vector": self.vector,
                       "change": self.change, "liealg": self.liealg, "check": self.check}.get(t.text)
            if handler is None:
                self.err("expected chart, metric, vector, change, liealg or check")
            self.next()
            items.append(handler((t.line, t.col)))
        return items

    def ids(self) -> tuple[str, ...]:
        out = []
        if self.at(";"):
            return ()
        out.append(self.name("coordinate name"))
        while self.at(","):
            self.next()
            out.append(self.name("coordinate name"))
        return tuple(out)

    def chart(self, pos) -> ChartDecl:
        name = self.name("chart name")
        self.expect("{")
        self.expect("even")
        self.expect(":")
        even = self.ids()
        self.expect(";")
        self.expect("odd")
        self.expect(":")
        odd = self.ids()
        self.expect(";")
        box = []
        if self.at("box"):
            self.next()
            self.expect(":")
            while True:
                var = self.name("coordinate name")
                self.expect("in")
                self.expect("(")
                lo = self.number()
                self.expect(",")
                hi = self.number()
                self.expect(")")
                box.append((var, lo, hi))
                if not self.at(","):
                    break
                self.next()
            self.expect(";")
        self.expect("}")
        return ChartDecl(name, even, odd, tuple(box), pos)

    def metric(self, pos) -> MetricDecl:
        name = self.name("metric name")
        self.expect("on")
        chart = self.name("chart name")
        self.expect("=")
        e = self.expr()
        self.expect(";")
        return MetricDecl(name, chart, e, pos)

    def vector(self, pos) -> VectorDecl:
        name = self.name("vector name")
        self.expect("on")
        chart = self.name("chart name")
        if not self.at("("):
            self.err("expected '(' followed by the parity (even|odd)")
        self.next()
        if not (self.at("even") or self.at("odd")):
            self.err("expected parity 'even' or 'odd'")
        parity = self.next().text
        self.expect(")")
        self.expect("=")
        e = self.expr()
        self.expect(";")
        return VectorDecl(name, chart, parity, e, pos)

    def assignments(self) -> tuple[tuple[str, Expr], ...]:
        self.expect("{")
        out = []
        while not self.at("}"):
            var = self.name("coordinate name")
            self.expect("=")
            out.append((var, self.expr()))
            self.expect(";")
        self.expect("}")
        return tuple(out)

    def change(self, pos) -> ChangeDecl:
        name = self.name("change name")
        self.expect("from")
        src = self.name("chart name")
        self.expect("to")
        tgt = self.name("chart name")
        images = self.assignments()
        inv = None
        if self.at("inverse"):
            self.next()
            inv = self.assignments()
        return ChangeDecl(name, src, tgt, images, inv, pos)

    def liealg(self, pos) -> LieDecl:
        name = self.name("lie algebra name")
        self.expect("{")
        self.expect("dim")
        self.expect(":")
        dim = self.integer()
        self.expect(";")
        structure, form = [], []
        while not self.at("}"):
            if self.at("structure"):
                self.next()
                self.expect(":")
                while True:
                    self.expect("(")
                    c = self.integer()
                    self.expect(",")
                    b = self.integer()
                    self.expect(",")
                    a = self.integer()
                    self.expect(")")
                    self.expect("=")
                    structure.append((c, b, a, self.number()))
                    if not self.at(","):
                        break
                    self.next()
                self.expect(";")
            elif self.at("form"):
                self.next()
                self.expect(":")
                while True:
                    self.expect("(")
                    b = self.integer()
                    self.expect(",")
                    a = self.integer()
                    self.expect(")")
                    self.expect("=")
                    form.append((b, a, self.number()))
                    if not self.at(","):
                        break
                    self.next()
                self.expect(";")
            else:
                self.err("expected 'structure', 'form' or '}'")
        self.expect("}")
        return LieDecl(name, dim, tuple(structure), tuple(form), pos)

    def check(self, pos) -> CheckDecl:
        tok = self.tok
        d = self.name("directive")
        if d not in DIRECTIVES:
            self.err(f"unknown directive (expected one of {', '.join(sorted(DIRECTIVES))})", tok)
        self.expect("(")
        args = [self.name("argument")]
        while self.at(","):
            self.next()
            args.append(self.name("argument"))
        self.expect(")")
        self.expect(";")
        lo, hi = DIRECTIVES[d]
        if not lo <= len(args) <= hi:
            raise DSLError(f"{d} takes {lo if lo == hi else f'{lo}-{hi}'} argument(s), got {len(args)}",
                           tok.line, tok.col)
        return CheckDecl(d, tuple(args), pos)

    # -- expressions ---------------------------------------------------
    def expr(self) -> Expr:
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.next().text
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.at("*") or self.at("/"):
            op = self.next().text
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.at("-"):
            self.next()
            return Neg(self.unary())
        if self.at("+"):
            self.next()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at("^"):
            self.next()
            return Pow(base, self.integer() if not self.at("(") else self._paren_int())
        return base

    def _paren_int(self) -> int:
        self.expect("(")
        k = self.integer()
        self.expect(")")
        return k

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "NUM":
            self.next()
            return Num(Fraction(t.text))
        if t.kind == "NAME":
            if t.text in KEYWORDS:
                self.err("unexpected keyword in expression")
            self.next()
            if t.text in FUNCTIONS and self.at("("):
                self.next()
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            return Var(t.text)
        if self.at("("):
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        self.err("expected an expression")


# -- printer --------------------------------------------------------------------------

def _decimal(v: Fraction) -> str | None:
    """Exact decimal form when the denominator is 2^a 5^b."""
    d = v.denominator
    k = 0
    while d % 10 == 0 or d % 2 == 0 or d % 5 == 0:
        if d % 10 == 0:
            d //= 10
        elif d % 2 == 0:
            d //= 2
        else:
            d //= 5
        k += 1
    if d != 1:
        return None
    for digits in range(1, k + 1):
        scaled = v * 10 ** digits
        if scaled.denominator == 1:
            n = abs(scaled.numerator)
            body = str(n).rjust(digits + 1, "0")
            out = body[:-digits] + "." + body[-digits:]
            return ("-" if v < 0 else "") + out
    return None


def _num_str(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return _decimal(v) or f"{v.numerator}/{v.denominator}"


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return 1 if e.op in "+-" else 2
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Pow):
        return 4
    if isinstance(e, Num) and e.value < 0:
        return 3
    if isinstance(e, Num) and _decimal(e.value) is None and e.value.denominator != 1:
        return 2
    return 5


def print_expr(e: Expr) -> str:
    if isinstance(e, Num):
        return _num_str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.fn}({print_expr(e.arg)})"
    if isinstance(e, Neg):
        inner = print_expr(e.arg)
        return f"-{inner}" if _prec(e.arg) >= 3 else f"-({inner})"
    if isinstance(e, Pow):
        b = print_expr(e.base)
        if _prec(e.base) < 5:
            b = f"({b})"
        return f"{b}^{e.exp}" if e.exp >= 0 else f"{b}^({e.exp})"
    if isinstance(e, BinOp):
        p = _prec(e)
        left = print_expr(e.left)
        if _prec(e.left) < p:
            left = f"({left})"
        right = print_expr(e.right)
        # left-associative: the right operand needs parentheses at equal precedence
        if _prec(e.right) <= p or isinstance(e.right, Neg) or (isinstance(e.right, Num) and e.right.value < 0):
            right = f"({right})"
        return f"{left} {e.op} {right}" if p == 1 else f"{left}{e.op}{right}"
    raise TypeError(f"not an expression node: {e!r}")


def print_item(item: Item) -> str:
    if isinstance(item, ChartDecl):
        out = f"chart {item.name} {{ even: {', '.join(item.even)}; odd: {', '.join(item.odd)};"
        if item.box:
            out += " box: " + ", ".join(f"{v} in ({_num_str(lo)}, {_num_str(hi)})" for v, lo, hi in item.box) + ";"
        return out + " }"
    if isinstance(item, MetricDecl):
        return f"metric {item.name} on {item.chart} = {print_expr(item.expr)};"
    if isinstance(item, VectorDecl):
        return f"vector {item.name} on {item.chart} ({item.parity}) = {print_expr(item.expr)};"
    if isinstance(item, ChangeDecl):
        def block(pairs):
            return "{ " + " ".join(f"{v} = {print_expr(e)};" for v, e in pairs) + " }"
        out = f"change {item.name} from {item.source} to {item.target} {block(item.images)}"
        if item.inverse is not None:
            out += f" inverse {block(item.inverse)}"
        return out
    if isinstance(item, LieDecl):
        out = f"liealg {item.name} {{ dim: {item.dim};"
        if item.structure:
            out += " structure: " + ", ".join(f"({c}, {b}, {a}) = {_num_str(v)}" for c, b, a, v in item.structure) + ";"
        if item.form:
            out += " form: " + ", ".join(f"({b}, {a}) = {_num_str(v)}" for b, a, v in item.form) + ";"
        return out + " }"
    if isinstance(item, CheckDecl):
        return f"check {item.directive}({', '.join(item.args)});"
    raise TypeError(f"not a declaration: {item!r}")


def print_document(doc: Document) -> str:
    return "\n".join(print_item(i) for i in doc.items) + "\n"


# -- loader ---------------------------------------------------------------------------

class _Vec:
    """Intermediate value: a linear combination of coordinate vector fields."""

    def __init__(self, comps: list[SuperFunction]):
        self.comps = comps


class _Evaluator:
    """Evaluates expression trees on a chart.

    ``mode`` is ``scalar`` (coordinates only), ``fiber`` (metric: d<coord>
    fiber symbols allowed), or ``vector`` (d_<coord> basis fields allowed).
    """

    def __init__(self, chart: Chart, mode: str, base: Chart | None = None, pos=(0, 0)):
        self.chart, self.mode, self.base, self.pos = chart, mode, base or chart, pos
        self.names = {n: i for i, n in enumerate(self.base.names)}

    def fail(self, msg: str):
        raise DSLError(msg, *self.pos)

    def var(self, name: str):
        ch = self.chart
        if name in self.names:
            a = self.names[name]
            if self.mode == "fiber":
                from .charts import embed
                return embed(SuperFunction.coordinate(self.base, a), ch)
            return SuperFunction.coordinate(ch, a)
        if self.mode == "fiber" and name.startswith("d") and name[1:] in self.names:
            return SuperFunction.coordinate(ch, fiber_index(self.base, self.names[name[1:]]))
        if self.mode == "vector" and name.startswith("d_") and name[2:] in self.names:
            a = self.names[name[2:]]
            zero = SuperFunction.zero(ch)
            one = SuperFunction.constant(ch, 1)
            return _Vec([one if b == a else zero for b in range(ch.dim)])
        hint = ""
        if self.mode == "vector" and name.startswith("d") and name[1:] in self.names:
            hint = f" (basis fields are written d_{name[1:]})"
        self.fail(f"unknown symbol {name!r} on chart {self.base.name}{hint}")

    def eval(self, e: Expr):
        if isinstance(e, Num):
            return SuperFunction.constant(self.chart, e.value)
        if isinstance(e, Var):
            return self.var(e.name)
        if isinstance(e, Neg):
            v = self.eval(e.arg)
            return _Vec([-c for c in v.comps]) if isinstance(v, _Vec) else -v
        if isinstance(e, Call):
            v = self.eval(e.arg)
            if isinstance(v, _Vec):
                self.fail(f"{e.fn} applied to a vector field")
            if not v.parity_homogeneous() or v.parity != Parity.EVEN:
                self.fail(f"{e.fn} needs an even argument")
            try:
                return apply_function(e.fn, v)
            except (ValueError, NotInvertible, ZeroDivisionError) as exc:
                self.fail(str(exc))
        if isinstance(e, Pow):
            v = self.eval(e.base)
            if isinstance(v, _Vec):
                self.fail("powers of vector fields are not defined")
            try:
                return v ** e.exp
            except (ValueError, NotInvertible, ZeroDivisionError) as exc:
                self.fail(f"cannot raise to a negative power: {exc}")
        if isinstance(e, BinOp):
            left, right = self.eval(e.left), self.eval(e.right)
            lv, rv = isinstance(left, _Vec), isinstance(right, _Vec)
            if e.op in "+-":
                if lv != rv:
                    if lv and right.is_structurally_zero:
                        return left
                    if rv and left.is_structurally_zero:
                        return right if e.op == "+" else _Vec([-c for c in right.comps])
                    self.fail("cannot add a function and a vector field")
                if lv:
                    f = (lambda x, y: x + y) if e.op == "+" else (lambda x, y: x - y)
                    return _Vec([f(x, y) for x, y in zip(left.comps, right.comps)])
                return left + right if e.op == "+" else left - right
            if e.op == "*":
                if lv and rv:
                    self.fail("product of two vector fields")
                if lv:
                    self.fail("write coefficients to the left of d_<coord>")
                if rv:
                    return _Vec([left * c for c in right.comps])
                return left * right
            if e.op == "/":
                if rv:
                    self.fail("division by a vector field")
                try:
                    inv = invert(right)
                except (ValueError, NotInvertible) as exc:
                    self.fail(f"division by a non-invertible function: {exc}")
                if lv:
                    if right.parity != Parity.EVEN:
                        self.fail("vector fields can only be divided by even functions")
                    return _Vec([c * inv for c in left.comps])
                return left * inv
        raise TypeError(f"unexpected node {e!r}")


def _box(decl: ChartDecl):
    return tuple((v, (float(lo), float(hi))) for v, lo, hi in decl.box)


def load(items: list[Item]) -> Document:
    doc = Document(items)
    names: dict[str, str] = {}

    def declare(name, kind, pos):
        if name in names:
            raise DSLError(f"duplicate name {name!r} (already a {names[name]})", *pos)
        names[name] = kind

    def ref(table, name, kind, pos):
        if name not in table:
            other = names.get(name)
            extra = f" ({name!r} is a {other})" if other else ""
            raise DSLError(f"unknown {kind} {name!r}{extra}", *pos)
        return table[name]

    for item in items:
        pos = item.pos
        try:
            if isinstance(item, ChartDecl):
                declare(item.name, "chart", pos)
                coords = item.even + item.odd
                for s in coords:
                    if s.startswith("d") and s[1:] in coords:
                        raise DSLError(f"coordinate {s!r} is ambiguous with the fiber symbol of {s[1:]!r}", *pos)
                    if s.startswith("d_"):
                        raise DSLError(f"coordinate names may not start with 'd_': {s!r}", *pos)
                try:
                    doc.charts[item.name] = Chart(item.name, item.even, item.odd, _box(item))
                except ValueError as exc:
                    raise DSLError(str(exc), *pos) from exc
            elif isinstance(item, MetricDecl):
                declare(item.name, "metric", pos)
                ch = ref(doc.charts, item.chart, "chart", pos)
                T = fiber_chart(ch)
                G = _Evaluator(T, "fiber", ch, pos).eval(item.expr)
                if isinstance(G, _Vec):
                    raise DSLError("metric expression evaluates to a vector field", *pos)
                if not G.parity_homogeneous() or G.parity != Parity.EVEN:
                    raise DSLError("metric expression must be even", *pos)
                try:
                    rows = components_from_quadratic(ch, G)
                    doc.metrics[item.name] = MetricTensor(ch, rows)
                except (ValueError, NotInvertible) as exc:
                    raise DSLError(f"metric {item.name}: {exc}", *pos) from exc
            elif isinstance(item, VectorDecl):
                declare(item.name, "vector", pos)
                ch = ref(doc.charts, item.chart, "chart", pos)
                v = _Evaluator(ch, "vector", pos=pos).eval(item.expr)
                if not isinstance(v, _Vec):
                    if v.is_structurally_zero:
                        v = _Vec([SuperFunction.zero(ch)] * ch.dim)
                    else:
                        raise DSLError("vector expression must be a sum of coeff*d_<coord> terms", *pos)
                try:
                    doc.vectors[item.name] = VectorField(ch, Parity.ODD if item.parity == "odd" else Parity.EVEN,
                                                         v.comps)
                except ValueError as exc:
                    raise DSLError(f"vector {item.name}: parity mismatch: {exc}", *pos) from exc
            elif isinstance(item, ChangeDecl):
                declare(item.name, "change", pos)
                src = ref(doc.charts, item.source, "chart", pos)
                tgt = ref(doc.charts, item.target, "chart", pos)
                images = _images(item.images, src, tgt, pos)
                inv = _images(item.inverse, tgt, src, pos) if item.inverse is not None else None
                try:
                    doc.changes[item.name] = CoordinateChange(src, tgt, images, inv, name=item.name)
                except (ValueError, NotInvertible) as exc:
                    raise DSLError(f"change {item.name}: {exc}", *pos) from exc
            elif isinstance(item, LieDecl):
                declare(item.name, "liealg", pos)
                try:
                    doc.liealgs[item.name] = LieAlgebraData.from_entries(item.dim, item.structure, item.form,
                                                                         name=item.name)
                except LieDataError as exc:
                    raise DSLError(f"liealg {item.name}: {exc}", *pos) from exc
            elif isinstance(item, CheckDecl):
                _validate_check(doc, item)
        except DSLError:
            raise
    return doc


def _images(pairs, src: Chart, tgt: Chart, pos):
    got = {}
    for var, e in pairs:
        if var not in tgt.names:
            raise DSLError(f"{var!r} is not a coordinate of chart {tgt.name}", *pos)
        if var in got:
            raise DSLError(f"coordinate {var!r} assigned twice", *pos)
        v = _Evaluator(src, "scalar", pos=pos).eval(e)
        if isinstance(v, _Vec):
            raise DSLError("coordinate images must be functions", *pos)
        got[var] = v
    missing = [v for v in tgt.names if v not in got]
    if missing:
        raise DSLError(f"missing images for {', '.join(missing)}", *pos)
    return tuple(got[v] for v in tgt.names)


def _validate_check(doc: Document, c: CheckDecl):
    pos = c.pos
    kinds = {
        "homological": ("vector",),
        "killing": ("metric", "vector"),
        "riemannian_q": ("metric", "vector"),
        "unimodular": ("metric", "vector"),
        "shander": ("metric", "coordinate"),
        "morphism": ("metric", "vector", "metric", "vector", "change"),
        "liealg_killing": ("liealg",),
        "liealg_trace": ("liealg",),
    }
    if c.directive == "divergence":
        wanted = ("vector",) if len(c.args) == 1 else ("metric", "vector")
    elif c.directive == "modular":
        wanted = ("vector",) if len(c.args) == 1 else ("vector", "metric")
    else:
        wanted = kinds[c.directive]
    tables = {"metric": doc.metrics, "vector": doc.vectors, "change": doc.changes, "liealg": doc.liealgs}
    for arg, kind in zip(c.args, wanted):
        if kind == "coordinate":
            g = doc.metrics[c.args[0]]
            if arg not in g.chart.names:
                raise DSLError(f"{arg!r} is not a coordinate of chart {g.chart.name}", *pos)
            continue
        if arg not in tables[kind]:
            raise DSLError(f"{c.directive}: unknown {kind} {arg!r}", *pos)
    needs_odd = {"homological": 0, "riemannian_q": 1, "unimodular": 1, "modular": 0}
    if c.directive in needs_odd:
        X = doc.vectors[c.args[needs_odd[c.directive]]]
        if X.parity != Parity.ODD:
            raise DSLError(f"{c.directive}: field {c.args[needs_odd[c.directive]]!r} must be odd", *pos)
    if c.directive == "shander":
        ch = doc.metrics[c.args[0]].chart
        if ch.parity(ch.index(c.args[1])) != Parity.ODD:
            raise DSLError(f"shander: coordinate {c.args[1]!r} must be odd", *pos)
    objs = [tables[k][a] for a, k in zip(c.args, wanted) if k in ("metric", "vector")]
    if c.directive != "morphism" and len({o.chart for o in objs}) > 1:
        raise DSLError(f"{c.directive}: arguments live on different charts", *pos)
    if c.directive == "morphism":
        g, q, g2, q2 = (tables[k][a] for a, k in zip(c.args[:4], wanted[:4]))
        phi = doc.changes[c.args[4]]
        if g.chart != q.chart or g2.chart != q2.chart:
            raise DSLError("morphism: metric and field on different charts", *pos)
        if phi.source != g.chart or phi.target != g2.chart:
            raise DSLError("morphism: change does not connect the two charts", *pos)


def parse(text: str) -> Document:
    """Parse and validate a definition file."""
    return load(_Parser(text).document())


def parse_items(text: str) -> list[Item]:
    """Syntax only, no reference resolution."""
    return _Parser(text).document()


def iter_expr(e: Expr) -> Iterator[Expr]:
    yield e
    for child in getattr(e, "__dataclass_fields__", {}):
        v = getattr(e, child)
        if isinstance(v, (Num, Var, Neg, BinOp, Pow, Call)):
            yield from iter_expr(v)
