"""Expression trees over phase-space coordinates and explicit time.

Nodes are hash-consed: two structurally equal expressions are the same
object, so ``a is b`` is structural equality and derivative caches can be
shared.  Construction applies only local simplification (constant folding,
neutral elements); identities are verified numerically with
:class:`Sampler` rather than by canonicalisation.
"""

from __future__ import annotations

import math
import re
import weakref
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

Number = Union[int, Fraction, float]

TIME = "t"
FUNCTIONS = ("exp", "ln", "sin", "cos")

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position}")


class UnknownIdentifierError(ParseError):
    pass


class DomainError(ExprError, ArithmeticError):
    """Raised when evaluation leaves the domain (x/0, ln of x <= 0, ...)."""

    def __init__(self, message: str, subtree: "Expr | None" = None, point=None, time=None):
        self.subtree = subtree
        self.point = point
        self.time = time
        where = f" in `{subtree}`" if subtree is not None else ""
        super().__init__(f"{message}{where}")


class Expr:
    __slots__ = ("op", "args", "value", "skey", "_derivs", "__weakref__")

    op: str
    args: tuple
    value: object

    def __new__(cls, *a, **k):  # pragma: no cover - use the factory functions
        raise TypeError("build expressions with const(), symbol() and operators")

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    # arithmetic sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    # inspection -------------------------------------------------------
    @property
    def is_const(self) -> bool:
        return self.op == "const"

    def is_const_value(self, v) -> bool:
        return self.op == "const" and self.value == v

    def symbols(self) -> set["Expr"]:
        return {n for n in walk(self) if n.op == "sym"}

    def depends_on(self, s: "Expr") -> bool:
        return s in self.symbols()

    def __repr__(self):
        return f"Expr({self})"

    def __str__(self):
        return to_string(self)


_table: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


def _node(op: str, args: tuple = (), value=None) -> Expr:
    key = (op, type(value).__name__, value, tuple(id(a) for a in args))
    node = _table.get(key)
    if node is not None:
        return node
    node = object.__new__(Expr)
    init = object.__setattr__
    init(node, "op", op)
    init(node, "args", args)
    init(node, "value", value)
    init(node, "skey", _structural_key(op, value, args))
    init(node, "_derivs", {})
    _table[key] = node
    return node


_OPS = {name: k for k, name in enumerate(
    ("const", "sym", "add", "sub", "mul", "div", "neg", "pow", "exp", "ln", "sin", "cos", "inv"))}


def _structural_key(op: str, value, args: tuple) -> int:
    # stable across processes (no salted str hashing); orders commutative operands
    if op == "sym":
        v = zlib.crc32(value[0].encode()) * 31 + (-1 if value[1] is None else value[1])
    elif value is None:
        v = 0
    else:
        v = hash(value)
    return hash((_OPS[op], v) + tuple(a.skey for a in args))


def _normalize_number(v: Number) -> Union[Fraction, float]:
    if isinstance(v, bool):
        v = int(v)
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if v == 0.0:
            return Fraction(0)
        return v
    if isinstance(v, np.integer):
        return Fraction(int(v))
    raise TypeError(f"not a number: {v!r}")


def const(v: Number) -> Expr:
    return _node("const", (), _normalize_number(v))


ZERO = const(0)
ONE = const(1)


def symbol(name: str, index: int | None) -> Expr:
    """Coordinate ``name`` stored at position ``index`` of the point vector.

    The time symbol uses ``index=None``.
    """
    return _node("sym", (), (name, index))


T = symbol(TIME, None)


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    return const(v)


def _fold(v) -> Expr:
    return const(v)


def _is_neg_one(e: Expr) -> bool:
    return e.op == "const" and e.value == -1


def add(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        return _fold(a.value + b.value)
    if a.is_const_value(0):
        return b
    if b.is_const_value(0):
        return a
    if b.op == "neg":
        return sub(a, b.args[0])
    if b.op == "const" and b.value < 0:
        return sub(a, const(-b.value))
    if a.op == "neg":
        return sub(b, a.args[0])
    return _node("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        return _fold(a.value - b.value)
    if a is b:
        return ZERO
    if b.is_const_value(0):
        return a
    if a.is_const_value(0):
        return neg(b)
    if b.op == "neg":
        return add(a, b.args[0])
    if b.op == "const" and b.value < 0:
        return add(a, const(-b.value))
    return _node("sub", (a, b))


def neg(a: Expr) -> Expr:
    if a.op == "const":
        return _fold(-a.value)
    if a.op == "neg":
        return a.args[0]
    if a.op == "sub":
        return sub(a.args[1], a.args[0])
    if a.op == "mul" and a.args[0].op == "const":
        return mul(const(-a.args[0].value), a.args[1])
    return _node("neg", (a,))


def mul(a: Expr, b: Expr) -> Expr:
    if a.op == "const" and b.op == "const":
        return _fold(a.value * b.value)
    if b.op == "const":
        a, b = b, a
    if a.op == "const":
        if a.value == 0:
            return ZERO
        if a.value == 1:
            return b
        if b.op == "mul" and b.args[0].op == "const":
            return mul(const(a.value * b.args[0].value), b.args[1])
        if b.op == "neg":
            return mul(const(-a.value), b.args[0])
        if a.value == -1:
            return neg(b)
        return _node("mul", (a, b))
    if a.op == "neg" and b.op == "neg":
        return mul(a.args[0], b.args[0])
    if a.op == "neg":
        return neg(mul(a.args[0], b))
    if b.op == "neg":
        return neg(mul(a, b.args[0]))
    if b.op == "mul" and b.args[0].op == "const":
        return mul(b.args[0], mul(a, b.args[1]))
    if a.op == "mul" and a.args[0].op == "const":
        return mul(a.args[0], mul(a.args[1], b))
    if a is b:
        return power(a, 2)
    if a.op == "pow" and a.args[0] is b:
        return power(b, a.value + 1)
    if b.op == "pow" and b.args[0] is a:
        return power(a, b.value + 1)
    if a.skey > b.skey:
        a, b = b, a
    return _node("mul", (a, b))


def div(a: Expr, b: Expr) -> Expr:
    if b.op == "const":
        if b.value == 0:
            raise DomainError("division by constant zero", b)
        if isinstance(b.value, Fraction) and (a.op != "const" or isinstance(a.value, Fraction)):
            return mul(const(1 / b.value), a)
        if a.op == "const":
            return _fold(a.value / b.value)
    if a.is_const_value(0):
        return ZERO
    if a is b:
        return ONE
    if a.op == "neg":
        return neg(div(a.args[0], b))
    if b.op == "neg":
        return neg(div(a, b.args[0]))
    return _node("div", (a, b))


def power(base: Expr, exponent: Number) -> Expr:
    if isinstance(exponent, Expr):
        if exponent.op != "const":
            raise ExprError("exponent must be a constant")
        exponent = exponent.value
    exponent = _normalize_number(exponent)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if base.op == "const":
        bv = base.value
        if isinstance(bv, Fraction) and isinstance(exponent, Fraction) and exponent.denominator == 1:
            if bv == 0 and exponent < 0:
                raise DomainError("zero to a negative power", base)
            return _fold(bv ** int(exponent))
        if isinstance(bv, Fraction) and isinstance(exponent, Fraction):
            if bv < 0:
                raise DomainError("fractional power of a negative constant", base)
            if bv == 0:
                if exponent < 0:
                    raise DomainError("zero to a negative power", base)
                return ZERO
            if bv == 1:
                return ONE
            return _node("pow", (base,), exponent)
        try:
            v = float(bv) ** float(exponent)
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise DomainError(str(exc), base) from None
        if isinstance(v, complex):
            raise DomainError("fractional power of a negative constant", base)
        return _fold(v)
    return _node("pow", (base,), exponent)


def _unary(op: str, a: Expr) -> Expr:
    if a.op == "const":
        v = a.value
        if op == "exp" and v == 0:
            return ONE
        if op == "ln" and v == 1:
            return ZERO
        if op in ("sin",) and v == 0:
            return ZERO
        if op == "cos" and v == 0:
            return ONE
        if op == "ln" and v <= 0:
            raise DomainError("ln of non-positive constant", a)
        if isinstance(v, float):
            return _fold(getattr(math, "log" if op == "ln" else op)(v))
        # keep exact arguments symbolic, e.g. exp(1)
    return _node(op, (a,))


def exp(a) -> Expr:
    return _unary("exp", as_expr(a))


def ln(a) -> Expr:
    return _unary("ln", as_expr(a))


def sin(a) -> Expr:
    return _unary("sin", as_expr(a))


def cos(a) -> Expr:
    return _unary("cos", as_expr(a))


def inverse_entry(matrix: Sequence[Sequence[Expr]], i: int, j: int) -> Expr:
    """Entry (i, j) of the inverse of a square matrix, evaluated numerically.

    Used for charts too large for a symbolic adjugate; evaluation performs a
    dense LU solve at each point.
    """
    n = len(matrix)
    flat = tuple(as_expr(x) for row in matrix for x in row)
    if len(flat) != n * n:
        raise ValueError("matrix must be square")
    return _node("inv", flat, (n, i, j))


def _linear_terms(e: Expr, out: dict) -> None:
    """Flatten additive structure into ``{base: coefficient}``."""
    stack = [(e, Fraction(1))]
    while stack:
        node, c = stack.pop()
        op = node.op
        if op == "add":
            stack.append((node.args[1], c))
            stack.append((node.args[0], c))
        elif op == "sub":
            stack.append((node.args[1], -c))
            stack.append((node.args[0], c))
        elif op == "neg":
            stack.append((node.args[0], -c))
        elif op == "mul" and node.args[0].op == "const":
            stack.append((node.args[1], c * node.args[0].value))
        elif op == "const":
            out[ONE] = out.get(ONE, 0) + c * node.value
        else:
            out[node] = out.get(node, 0) + c


def sum_exprs(terms: Iterable[Expr]) -> Expr:
    """Sum with like terms collected, built as a balanced tree."""
    coeffs: dict[Expr, Number] = {}
    for t in terms:
        if not t.is_const_value(0):
            _linear_terms(t, coeffs)
    items = [mul(const(c), base) for base, c in coeffs.items() if c != 0 and base is not ONE]
    if coeffs.get(ONE, 0) != 0:
        items.append(const(coeffs[ONE]))
    if not items:
        return ZERO
    while len(items) > 1:
        nxt = [add(items[k], items[k + 1]) for k in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def collect(e: Expr) -> Expr:
    """Collect like terms of a single expression (used for display)."""
    return sum_exprs([e])


def walk(e: Expr):
    """Iterate over distinct nodes of the DAG, children before parents."""
    seen: set[int] = set()
    order: list[Expr] = []
    stack = [(e, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded or not node.args:
            seen.add(id(node))
            order.append(node)
            continue
        stack.append((node, True))
        for a in node.args:
            if id(a) not in seen:
                stack.append((a, False))
    return order


def size(e: Expr) -> int:
    return len(walk(e))


# ---------------------------------------------------------------------------
# differentiation


def diff(e: Expr, s: Expr) -> Expr:
    """Exact partial derivative of ``e`` with respect to symbol ``s``."""
    if s.op != "sym":
        raise ExprError("can only differentiate with respect to a symbol")
    for node in walk(e):
        if s in node._derivs:
            continue
        node._derivs[s] = _diff_node(node, s)
    return e._derivs[s]


def _d(node: Expr, s: Expr) -> Expr:
    return node._derivs[s]


def _diff_node(node: Expr, s: Expr) -> Expr:
    op, args = node.op, node.args
    if op == "const":
        return ZERO
    if op == "sym":
        return ONE if node is s else ZERO
    if op == "add":
        return add(_d(args[0], s), _d(args[1], s))
    if op == "sub":
        return sub(_d(args[0], s), _d(args[1], s))
    if op == "neg":
        return neg(_d(args[0], s))
    if op == "mul":
        a, b = args
        return add(mul(_d(a, s), b), mul(a, _d(b, s)))
    if op == "div":
        a, b = args
        da, db = _d(a, s), _d(b, s)
        if db.is_const_value(0):
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), power(b, 2))
    if op == "pow":
        (a,) = args
        k = node.value
        return mul(mul(const(k), power(a, k - 1)), _d(a, s))
    if op == "exp":
        return mul(node, _d(args[0], s))
    if op == "ln":
        return div(_d(args[0], s), args[0])
    if op == "sin":
        return mul(cos(args[0]), _d(args[0], s))
    if op == "cos":
        return neg(mul(sin(args[0]), _d(args[0], s)))
    if op == "inv":
        n, i, j = node.value
        rows = [args[r * n:(r + 1) * n] for r in range(n)]
        terms = []
        for k in range(n):
            for m in range(n):
                dkm = _d(args[k * n + m], s)
                if dkm.is_const_value(0):
                    continue
                terms.append(mul(mul(inverse_entry(rows, i, k), dkm), inverse_entry(rows, m, j)))
        return neg(sum_exprs(terms))
    raise ExprError(f"unknown node {op}")


# ---------------------------------------------------------------------------
# printing


def _prec(e: Expr) -> int:
    if e.op == "const":
        v = e.value
        if isinstance(v, Fraction):
            if v < 0:
                return 3
            return 5 if v.denominator == 1 else 2
        return 3 if v < 0 else 5
    return _PREC.get(e.op, 5)


def _const_str(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return repr(float(v))


def to_string(e: Expr) -> str:
    strings: dict[int, str] = {}

    def wrap(child: Expr, cond: bool) -> str:
        s = strings[id(child)]
        return f"({s})" if cond else s

    for node in walk(e):
        op, args = node.op, node.args
        if op == "const":
            s = _const_str(node.value)
        elif op == "sym":
            s = node.value[0]
        elif op in ("add", "sub", "mul", "div"):
            p = _PREC[op]
            sym = {"add": " + ", "sub": " - ", "mul": "*", "div": "/"}[op]
            s = wrap(args[0], _prec(args[0]) < p) + sym + wrap(args[1], _prec(args[1]) <= p)
        elif op == "neg":
            s = "-" + wrap(args[0], _prec(args[0]) < 3)
        elif op == "pow":
            k = node.value
            ks = _const_str(k)
            if not (isinstance(k, Fraction) and k.denominator == 1 and k >= 0):
                ks = f"({ks})"
            s = wrap(args[0], _prec(args[0]) <= 4) + "^" + ks
        elif op == "inv":
            n, i, j = node.value
            s = f"inv{n}[{i},{j}]"
        else:
            s = f"{op}({strings[id(args[0])]})"
        strings[id(node)] = s
    return strings[id(e)]


# ---------------------------------------------------------------------------
# charts and parsing


@dataclass(frozen=True)
class Chart:
    """Ordered coordinate names of a 2n-dimensional chart."""

    names: tuple[str, ...]
    includes_time: bool = True

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(names) < 2 or len(names) % 2:
            raise ValueError(f"chart dimension must be even and >= 2, got {len(names)}")
        if len(set(names)) != len(names):
            raise ValueError("coordinate names must be distinct")
        for n in names:
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", n):
                raise ValueError(f"invalid coordinate name {n!r}")
            if n == TIME or n in FUNCTIONS:
                raise ValueError(f"reserved name used as coordinate: {n!r}")

    @classmethod
    def standard(cls, dim: int, prefix: str = "z") -> "Chart":
        return cls(tuple(f"{prefix}{k + 1}" for k in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def n(self) -> int:
        return len(self.names) // 2

    @cached_property
    def coords(self) -> tuple[Expr, ...]:
        return tuple(symbol(name, k) for k, name in enumerate(self.names))

    def symbol(self, name_or_index) -> Expr:
        if isinstance(name_or_index, str):
            if name_or_index == TIME:
                return T
            return symbol(name_or_index, self.names.index(name_or_index))
        return symbol(self.names[name_or_index], name_or_index)

    def parse(self, source: str) -> Expr:
        return parse(source, self)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str):
    pos = 0
    out = []
    while True:
        m = _TOKEN.match(source, pos)
        if m is None:
            rest = source[pos:]
            if rest.strip() == "":
                break
            bad = pos + len(rest) - len(rest.lstrip())
            raise ParseError(f"unexpected character {source[bad]!r}", bad, source)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(source)))
    return out


class _Parser:
    def __init__(self, source: str, chart: Chart):
        self.source = source
        self.chart = chart
        self.tokens = _tokenize(source)
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def take(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect(self, value: str):
        tok = self.take()
        if tok[1] != value:
            raise ParseError(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok[2], self.source)

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            raise ParseError("empty expression", 0, self.source)
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected {tok[1]!r}", tok[2], self.source)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            tok = self.take()
            rhs = self.unary()
            if tok[1] == "*":
                e = mul(e, rhs)
            else:
                try:
                    e = div(e, rhs)
                except DomainError:
                    raise ParseError("division by constant zero", tok[2], self.source) from None
        return e

    def unary(self) -> Expr:
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("-", "+"):
            self.take()
            inner = self.unary()
            return neg(inner) if tok[1] == "-" else inner
        return self.pow()

    def pow(self) -> Expr:
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            exponent = self.unary()
            if exponent.op != "const":
                raise ParseError("exponent must be a constant", tok[2], self.source)
            try:
                return power(base, exponent.value)
            except DomainError as exc:
                raise ParseError(str(exc), tok[2], self.source) from None
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.take()
        if kind == "num":
            return const(Fraction(text))
        if kind == "id":
            if text in FUNCTIONS:
                if self.peek()[1] != "(":
                    raise ParseError(f"function {text} needs an argument", pos, self.source)
                self.take()
                arg = self.expr()
                self.expect(")")
                try:
                    return _unary(text, arg)
                except DomainError as exc:
                    raise ParseError(str(exc), pos, self.source) from None
            if text == TIME:
                return T
            if text in self.chart.names:
                return self.chart.symbol(text)
            raise UnknownIdentifierError(f"unknown identifier {text!r}", pos, self.source)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {text or 'end of input'!r}", pos, self.source)


def parse(source: str, chart: Chart) -> Expr:
    """Parse ``source`` into an expression over ``chart`` coordinates and ``t``."""
    return _Parser(source, chart).parse()


# ---------------------------------------------------------------------------
# numeric evaluation

_MATH = {"exp": math.exp, "ln": math.log, "sin": math.sin, "cos": math.cos}


def evaluate(e: Expr, point: Sequence[float], time: float = 0.0) -> float:
    """Evaluate at a single point with IEEE doubles.

    Raises :class:`DomainError` naming the offending subtree.
    """
    vals: dict[int, float] = {}
    for node in walk(e):
        op, args = node.op, node.args
        try:
            if op == "const":
                v = float(node.value)
            elif op == "sym":
                idx = node.value[1]
                v = float(time) if idx is None else float(point[idx])
            elif op == "add":
                v = vals[id(args[0])] + vals[id(args[1])]
            elif op == "sub":
                v = vals[id(args[0])] - vals[id(args[1])]
            elif op == "mul":
                v = vals[id(args[0])] * vals[id(args[1])]
            elif op == "div":
                v = vals[id(args[0])] / vals[id(args[1])]
            elif op == "neg":
                v = -vals[id(args[0])]
            elif op == "pow":
                b = vals[id(args[0])]
                k = node.value
                if isinstance(k, Fraction) and k.denominator == 1:
                    v = b ** int(k)
                else:
                    v = b ** float(k)
                    if isinstance(v, complex):
                        raise ValueError("fractional power of negative number")
            elif op == "inv":
                n, i, j = node.value
                m = np.array([vals[id(a)] for a in args]).reshape(n, n)
                v = float(np.linalg.inv(m)[i, j])
            else:
                v = _MATH[op](vals[id(args[0])])
        except (ZeroDivisionError, ValueError, OverflowError, np.linalg.LinAlgError) as exc:
            raise DomainError(f"{op}: {exc}", node, tuple(point), time) from None
        if not math.isfinite(v):
            raise DomainError(f"{op}: non-finite result", node, tuple(point), time)
        vals[id(node)] = v
    return vals[id(e)]


_NP_FUNCS = {"exp": "np.exp", "ln": "np.log", "sin": "np.sin", "cos": "np.cos"}


def _batch_inverse(flat_cols: list, n: int, count: int) -> np.ndarray:
    cols = [np.broadcast_to(np.asarray(c, dtype=float), (count,)) for c in flat_cols]
    m = np.stack(cols, axis=-1).reshape(count, n, n).copy()
    det = np.linalg.det(m)
    bad = ~(np.abs(det) > 1e-300)
    m[bad] = np.eye(n)
    out = np.linalg.inv(m)
    out[bad] = np.nan
    return out


@lru_cache(maxsize=512)
def _compile(roots: tuple[Expr, ...]):
    lines = ["def _f(Z, T, N):"]
    names: dict[int, str] = {}
    inv_cache: dict[tuple, str] = {}
    counter = 0
    seen: set[int] = set()
    order: list[Expr] = []
    for r in roots:
        for node in walk(r):
            if id(node) not in seen:
                seen.add(id(node))
                order.append(node)
    for node in order:
        op, args = node.op, node.args
        if op == "const":
            names[id(node)] = repr(float(node.value))
            continue
        if op == "sym":
            idx = node.value[1]
            names[id(node)] = "T" if idx is None else f"Z[:, {idx}]"
            continue
        var = f"v{counter}"
        counter += 1
        a = [names[id(x)] for x in args]
        if op == "add":
            rhs = f"{a[0]} + {a[1]}"
        elif op == "sub":
            rhs = f"{a[0]} - {a[1]}"
        elif op == "mul":
            rhs = f"{a[0]} * {a[1]}"
        elif op == "div":
            rhs = f"np.divide({a[0]}, {a[1]})"
        elif op == "neg":
            rhs = f"-({a[0]})"
        elif op == "pow":
            k = node.value
            if isinstance(k, Fraction) and k.denominator == 1:
                rhs = f"np.power(np.asarray({a[0]}, dtype=float), {int(k)}.0)"
            else:
                rhs = f"np.power(np.asarray({a[0]}, dtype=float), {float(k)!r})"
        elif op == "inv":
            n, i, j = node.value
            key = tuple(id(x) for x in args)
            if key not in inv_cache:
                inv_cache[key] = f"m{len(inv_cache)}"
                lines.append(f"    {inv_cache[key]} = _batch_inverse([{', '.join(a)}], {n}, N)")
            rhs = f"{inv_cache[key]}[:, {i}, {j}]"
        else:
            rhs = f"{_NP_FUNCS[op]}({a[0]})"
        lines.append(f"    {var} = {rhs}")
        names[id(node)] = var
    lines.append("    return [" + ", ".join(names[id(r)] for r in roots) + "]")
    env = {"np": np, "_batch_inverse": _batch_inverse}
    exec(compile("\n".join(lines), "<nonnoether-expr>", "exec"), env)
    return env["_f"]


def evaluate_batch(exprs: Sequence[Expr], points: np.ndarray, times) -> np.ndarray:
    """Evaluate several expressions at many points at once.

    Returns an array of shape ``(len(exprs), len(points))``; entries outside
    the domain come back as ``nan``/``inf`` rather than raising.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    count = points.shape[0]
    times = np.broadcast_to(np.asarray(times, dtype=float), (count,))
    exprs = tuple(as_expr(x) for x in exprs)
    if not exprs:
        return np.zeros((0, count))
    fn = _compile(exprs)
    with np.errstate(all="ignore"):
        cols = fn(points, times, count)
        return np.stack([np.broadcast_to(np.asarray(c, dtype=float), (count,)) for c in cols])


def lambdify(exprs: Sequence[Expr]):
    """Fast scalar callable ``f(z, t) -> list[float]`` for use in integrators."""
    exprs = tuple(as_expr(x) for x in exprs)
    lines = ["def _f(z, t):"]
    names: dict[int, str] = {}
    seen: set[int] = set()
    counter = 0
    for r in exprs:
        for node in walk(r):
            if id(node) in seen:
                continue
            seen.add(id(node))
            op, args = node.op, node.args
            if op == "const":
                names[id(node)] = repr(float(node.value))
                continue
            if op == "sym":
                idx = node.value[1]
                names[id(node)] = "t" if idx is None else f"z[{idx}]"
                continue
            if op == "inv":
                # rare in integrators; defer to the tree walker
                return lambda z, t: [evaluate(x, z, t) for x in exprs]
            a = [names[id(x)] for x in args]
            rhs = {
                "add": lambda: f"{a[0]} + {a[1]}",
                "sub": lambda: f"{a[0]} - {a[1]}",
                "mul": lambda: f"{a[0]} * {a[1]}",
                "div": lambda: f"{a[0]} / {a[1]}",
                "neg": lambda: f"-({a[0]})",
                "pow": lambda: f"({a[0]}) ** {float(node.value)!r}",
            }.get(op, lambda: f"_m.{'log' if op == 'ln' else op}({a[0]})")()
            var = f"v{counter}"
            counter += 1
            lines.append(f"    {var} = {rhs}")
            names[id(node)] = var
    lines.append("    return [" + ", ".join(names[id(r)] for r in exprs) + "]")
    env = {"_m": math}
    exec(compile("\n".join(lines), "<nonnoether-lambdify>", "exec"), env)
    return env["_f"]


# ---------------------------------------------------------------------------
# zero testing


@dataclass
class ZeroTest:
    """Outcome of a sampled zero test: worst residual and where it occurred."""

    ok: bool
    residual: float
    witness: tuple[tuple[float, ...], float] | None = None

    def __bool__(self):
        return self.ok

    @staticmethod
    def combine(tests: Iterable["ZeroTest"]) -> "ZeroTest":
        tests = list(tests)
        if not tests:
            return ZeroTest(True, 0.0, None)
        worst = max(tests, key=lambda z: z.residual)
        return ZeroTest(all(z.ok for z in tests), worst.residual, worst.witness)


@dataclass
class Sampler:
    """Seeded sample points for numeric identity testing.

    Coordinates are uniform in ``[low, high]`` and time uniform in
    ``[t_low, t_high]``.
    """

    dim: int
    count: int = 100
    low: float = -1.0
    high: float = 1.0
    t_low: float = 0.0
    t_high: float = 1.0
    seed: int = 42
    tol: float = 1e-9
    retries: int = 5
    points: np.ndarray = field(init=False, repr=False)
    times: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("need at least one sample point")
        rng = np.random.default_rng(self.seed)
        self.points = rng.uniform(self.low, self.high, size=(self.count, self.dim))
        self.times = rng.uniform(self.t_low, self.t_high, size=self.count)

    def _fresh(self, k: int, attempt: int):
        rng = np.random.default_rng([self.seed, attempt])
        return (
            rng.uniform(self.low, self.high, size=(k, self.dim)),
            rng.uniform(self.t_low, self.t_high, size=k),
        )

    def evaluate(self, exprs: Sequence[Expr]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Values at sample points; points with domain errors are resampled.

        Returns ``(values, points, times)`` with the points actually used.
        """
        exprs = list(exprs)
        pts, ts = self.points.copy(), self.times.copy()
        vals = evaluate_batch(exprs, pts, ts)
        for attempt in range(1, self.retries + 1):
            bad = ~np.all(np.isfinite(vals), axis=0)
            if not bad.any():
                break
            k = int(bad.sum())
            newp, newt = self._fresh(k, attempt)
            pts[bad], ts[bad] = newp, newt
            vals[:, bad] = evaluate_batch(exprs, newp, newt)
        else:
            bad = ~np.all(np.isfinite(vals), axis=0)
            if bad.any():
                j = int(np.argmax(bad))
                for e in exprs:
                    evaluate(e, pts[j], ts[j])  # raises with the offending subtree
                raise DomainError("evaluation failed after resampling", None, tuple(pts[j]), ts[j])
        return vals, pts, ts

    def is_zero(self, exprs, tol: float | None = None) -> ZeroTest:
        if isinstance(exprs, Expr):
            exprs = [exprs]
        exprs = [as_expr(e) for e in exprs]
        exprs = [e for e in exprs if not e.is_const_value(0)]
        if not exprs:
            return ZeroTest(True, 0.0, None)
        tol = self.tol if tol is None else tol
        vals, pts, ts = self.evaluate(exprs)
        per_point = np.max(np.abs(vals), axis=0)
        j = int(np.argmax(per_point))
        worst = float(per_point[j])
        return ZeroTest(worst < tol, worst, (tuple(float(x) for x in pts[j]), float(ts[j])))


def is_zero(e, samples: Sampler, tol: float | None = None) -> ZeroTest:
    return samples.is_zero(e, tol)
