"""Tiny expression language for kernels, curves, nonlinearities and data.

Grammar (ASCII or U+2212 minus accepted)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?          # right-associative exponent
    atom   := number | ident | ident "(" expr ")" | "(" expr ")"

Identifiers are the variables ``t``, ``s``, ``x`` and the functions
``sin``, ``cos``, ``exp``, ``log``, ``sqrt``.  ``^`` binds tighter than
unary minus, so ``-t^2`` is ``-(t^2)``.

Expressions are immutable after parsing and safe to evaluate from several
threads at once.  Two evaluation paths exist: :meth:`Expression.evaluate`
checks domains and raises :class:`~bandvie.errors.EvaluationError`, while
calling the expression directly (``e(t=..., s=...)``) uses a compiled
vectorized form that accepts numpy arrays and leaves non-finite values to
the caller (quadrature checks them).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, ExpressionSyntaxError

VARIABLES = ("t", "s", "x")

_NP_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
}

_BIN_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_NEG_PRECEDENCE = 3
_ATOM_PRECEDENCE = 5


@dataclass(frozen=True)
class _Const:
    value: float


@dataclass(frozen=True)
class _Var:
    name: str


@dataclass(frozen=True)
class _Neg:
    arg: object


@dataclass(frozen=True)
class _Call:
    fn: str
    arg: object


@dataclass(frozen=True)
class _Bin:
    op: str
    lhs: object
    rhs: object


def _const(value):
    return _Const(float(value))


def _neg(a):
    if isinstance(a, _Const):
        return _Const(-a.value)
    if isinstance(a, _Neg):
        return a.arg
    return _Neg(a)


def _add(a, b):
    if isinstance(a, _Const) and isinstance(b, _Const):
        return _Const(a.value + b.value)
    if isinstance(a, _Const) and a.value == 0.0:
        return b
    if isinstance(b, _Const) and b.value == 0.0:
        return a
    return _Bin("+", a, b)


def _sub(a, b):
    if isinstance(a, _Const) and isinstance(b, _Const):
        return _Const(a.value - b.value)
    if isinstance(b, _Const) and b.value == 0.0:
        return a
    if isinstance(a, _Const) and a.value == 0.0:
        return _neg(b)
    return _Bin("-", a, b)


def _mul(a, b):
    if isinstance(a, _Const) and isinstance(b, _Const):
        return _Const(a.value * b.value)
    if isinstance(a, _Const):
        if a.value == 0.0:
            return _Const(0.0)
        if a.value == 1.0:
            return b
    if isinstance(b, _Const):
        if b.value == 0.0:
            return _Const(0.0)
        if b.value == 1.0:
            return a
    return _Bin("*", a, b)


def _div(a, b):
    if isinstance(a, _Const) and isinstance(b, _Const) and b.value != 0.0:
        return _Const(a.value / b.value)
    if isinstance(b, _Const) and b.value == 1.0:
        return a
    return _Bin("/", a, b)


def _pow(a, b):
    if isinstance(a, _Const) and isinstance(b, _Const):
        try:
            v = math.pow(a.value, b.value)
        except (ValueError, OverflowError):
            return _Bin("^", a, b)
        return _Const(v)
    if isinstance(b, _Const):
        if b.value == 1.0:
            return a
        if b.value == 0.0:
            return _Const(1.0)
    return _Bin("^", a, b)


def _call(fn, a):
    if isinstance(a, _Const):
        try:
            v = {
                "sin": math.sin,
                "cos": math.cos,
                "exp": math.exp,
                "log": math.log,
                "sqrt": math.sqrt,
            }[fn](a.value)
        except (ValueError, OverflowError):
            return _Call(fn, a)
        return _Const(v)
    return _Call(fn, a)


class _Tokenizer:
    """Splits text into (kind, value, offset) tuples."""

    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.tokens = []
        self._scan()
        self.index = 0

    def _scan(self):
        text = self.text
        n = len(text)
        i = 0
        while i < n:
            c = text[i]
            if c.isspace():
                i += 1
                continue
            if c == "−":  # unicode minus
                self.tokens.append(("op", "-", i))
                i += 1
                continue
            if c in "+-*/^()":
                self.tokens.append(("op", c, i))
                i += 1
                continue
            if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
                j = i
                while j < n and (text[j].isdigit() or text[j] == "."):
                    j += 1
                if j < n and text[j] in "eE":
                    k = j + 1
                    if k < n and text[k] in "+-":
                        k += 1
                    if k < n and text[k].isdigit():
                        while k < n and text[k].isdigit():
                            k += 1
                        j = k
                lit = text[i:j]
                try:
                    value = float(lit)
                except ValueError:
                    raise ExpressionSyntaxError(f"bad number literal {lit!r}", i)
                self.tokens.append(("num", value, i))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("ident", text[i:j], i))
                i = j
                continue
            raise ExpressionSyntaxError(f"unexpected character {c!r}", i)
        self.tokens.append(("end", None, n))

    def peek(self):
        return self.tokens[self.index]

    def next(self):
        tok = self.tokens[self.index]
        self.index += 1
        return tok


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _Tokenizer(text)

    def parse(self):
        node = self._expr()
        kind, value, offset = self.toks.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected {value!r}", offset)
        return node

    def _expr(self):
        node = self._term()
        while True:
            kind, value, _ = self.toks.peek()
            if kind == "op" and value in "+-":
                self.toks.next()
                rhs = self._term()
                node = _add(node, rhs) if value == "+" else _sub(node, rhs)
            else:
                return node

    def _term(self):
        node = self._unary()
        while True:
            kind, value, _ = self.toks.peek()
            if kind == "op" and value in "*/":
                self.toks.next()
                rhs = self._unary()
                node = _mul(node, rhs) if value == "*" else _div(node, rhs)
            else:
                return node

    def _unary(self):
        kind, value, _ = self.toks.peek()
        if kind == "op" and value == "-":
            self.toks.next()
            return _neg(self._unary())
        return self._power()

    def _power(self):
        base = self._atom()
        kind, value, _ = self.toks.peek()
        if kind == "op" and value == "^":
            self.toks.next()
            return _pow(base, self._unary())
        return base

    def _atom(self):
        kind, value, offset = self.toks.next()
        if kind == "num":
            return _const(value)
        if kind == "ident":
            nk, nv, _ = self.toks.peek()
            if nk == "op" and nv == "(":
                if value not in _NP_FUNCTIONS:
                    raise ExpressionSyntaxError(f"unknown function {value!r}", offset)
                self.toks.next()
                arg = self._expr()
                self._expect(")")
                return _call(value, arg)
            if value in _NP_FUNCTIONS:
                raise ExpressionSyntaxError(
                    f"function {value!r} requires an argument list", offset
                )
            if value not in VARIABLES:
                raise ExpressionSyntaxError(f"unknown identifier {value!r}", offset)
            return _Var(value)
        if kind == "op" and value == "(":
            node = self._expr()
            self._expect(")")
            return node
        raise ExpressionSyntaxError(
            "expected a number, identifier or parenthesized expression", offset
        )

    def _expect(self, op):
        kind, value, offset = self.toks.next()
        if kind != "op" or value != op:
            raise ExpressionSyntaxError(f"expected {op!r}", offset)


def _to_source(node):
    """Python source for the compiled vectorized form (fully parenthesized)."""
    if isinstance(node, _Const):
        return f"({node.value!r})"
    if isinstance(node, _Var):
        return node.name
    if isinstance(node, _Neg):
        return f"(-{_to_source(node.arg)})"
    if isinstance(node, _Call):
        return f"np.{node.fn}({_to_source(node.arg)})"
    if isinstance(node, _Bin):
        op = "**" if node.op == "^" else node.op
        return f"({_to_source(node.lhs)}{op}{_to_source(node.rhs)})"
    raise TypeError(node)


def _node_precedence(node):
    if isinstance(node, _Const):
        return _NEG_PRECEDENCE if node.value < 0 else _ATOM_PRECEDENCE
    if isinstance(node, (_Var, _Call)):
        return _ATOM_PRECEDENCE
    if isinstance(node, _Neg):
        return _NEG_PRECEDENCE
    return _BIN_PRECEDENCE[node.op]


def _format_const(value):
    # integral constants print without the trailing ".0"; both forms
    # re-parse to the identical float
    if value == int(value) and abs(value) <= 1e15:
        return str(int(value))
    return repr(value)


def _to_text(node):
    if isinstance(node, _Const):
        return _format_const(node.value)
    if isinstance(node, _Var):
        return node.name
    if isinstance(node, _Call):
        return f"{node.fn}({_to_text(node.arg)})"
    if isinstance(node, _Neg):
        arg = _to_text(node.arg)
        if _node_precedence(node.arg) < _NEG_PRECEDENCE:
            arg = f"({arg})"
        return f"-{arg}"
    prec = _BIN_PRECEDENCE[node.op]
    lhs, rhs = _to_text(node.lhs), _to_text(node.rhs)
    if node.op == "^":
        # right-associative: parenthesize lhs at equal precedence
        if _node_precedence(node.lhs) <= prec:
            lhs = f"({lhs})"
        if _node_precedence(node.rhs) < prec:
            rhs = f"({rhs})"
    else:
        if _node_precedence(node.lhs) < prec:
            lhs = f"({lhs})"
        if _node_precedence(node.rhs) <= prec:
            rhs = f"({rhs})"
    return f"{lhs}{node.op}{rhs}"


def _evaluate_node(node, bindings):
    if isinstance(node, _Const):
        return node.value
    if isinstance(node, _Var):
        try:
            return float(bindings[node.name])
        except KeyError:
            raise EvaluationError(f"unbound variable {node.name!r}") from None
    if isinstance(node, _Neg):
        return -_evaluate_node(node.arg, bindings)
    if isinstance(node, _Call):
        v = _evaluate_node(node.arg, bindings)
        if node.fn == "log" and v <= 0.0:
            raise EvaluationError(f"log of non-positive value {v}")
        if node.fn == "sqrt" and v < 0.0:
            raise EvaluationError(f"sqrt of negative value {v}")
        try:
            return {
                "sin": math.sin,
                "cos": math.cos,
                "exp": math.exp,
                "log": math.log,
                "sqrt": math.sqrt,
            }[node.fn](v)
        except OverflowError:
            raise EvaluationError(f"{node.fn}({v}) overflows") from None
    if isinstance(node, _Bin):
        a = _evaluate_node(node.lhs, bindings)
        b = _evaluate_node(node.rhs, bindings)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if b == 0.0:
                raise EvaluationError("division by zero")
            return a / b
        # power: reject the cases that would silently produce nan/inf
        if a == 0.0 and b < 0.0:
            raise EvaluationError("zero raised to a negative power")
        if a < 0.0 and b != math.floor(b):
            raise EvaluationError(
                f"negative base {a} with non-integer exponent {b}"
            )
        try:
            return math.pow(a, b)
        except OverflowError:
            raise EvaluationError(f"{a}^{b} overflows") from None
    raise TypeError(node)


def _free_variables(node, acc):
    if isinstance(node, _Var):
        acc.add(node.name)
    elif isinstance(node, _Neg):
        _free_variables(node.arg, acc)
    elif isinstance(node, _Call):
        _free_variables(node.arg, acc)
    elif isinstance(node, _Bin):
        _free_variables(node.lhs, acc)
        _free_variables(node.rhs, acc)


def _diff_node(node, wrt):
    if isinstance(node, _Const):
        return _Const(0.0)
    if isinstance(node, _Var):
        return _Const(1.0 if node.name == wrt else 0.0)
    if isinstance(node, _Neg):
        return _neg(_diff_node(node.arg, wrt))
    if isinstance(node, _Call):
        du = _diff_node(node.arg, wrt)
        u = node.arg
        if node.fn == "sin":
            return _mul(_call("cos", u), du)
        if node.fn == "cos":
            return _neg(_mul(_call("sin", u), du))
        if node.fn == "exp":
            return _mul(_call("exp", u), du)
        if node.fn == "log":
            return _div(du, u)
        if node.fn == "sqrt":
            return _div(du, _mul(_const(2.0), _call("sqrt", u)))
        raise TypeError(node.fn)
    if isinstance(node, _Bin):
        a, b = node.lhs, node.rhs
        da = _diff_node(a, wrt)
        db = _diff_node(b, wrt)
        if node.op == "+":
            return _add(da, db)
        if node.op == "-":
            return _sub(da, db)
        if node.op == "*":
            return _add(_mul(da, b), _mul(a, db))
        if node.op == "/":
            return _div(_sub(_mul(da, b), _mul(a, db)), _pow(b, _const(2.0)))
        # power
        if isinstance(b, _Const):
            c = b.value
            return _mul(_mul(_const(c), _pow(a, _const(c - 1.0))), da)
        # general exponent: a^b * (db*log(a) + b*da/a)
        return _mul(
            _pow(a, b),
            _add(_mul(db, _call("log", a)), _div(_mul(b, da), a)),
        )
    raise TypeError(node)


class Expression:
    """Immutable expression tree over the variables t, s, x."""

    __slots__ = ("_root", "_compiled")

    def __init__(self, root):
        self._root = root
        self._compiled = None

    @property
    def free_variables(self):
        acc = set()
        _free_variables(self._root, acc)
        return frozenset(acc)

    def evaluate(self, bindings):
        """Checked scalar evaluation; raises EvaluationError on domain problems."""
        return float(_evaluate_node(self._root, bindings))

    def __call__(self, t=None, s=None, x=None):
        """Fast vectorized evaluation (numpy arrays or scalars).

        Domain violations yield nan/inf here; quadrature rejects those.
        """
        if self._compiled is None:
            src = "lambda t=None, s=None, x=None: " + _to_source(self._root)
            self._compiled = eval(src, {"np": np})  # noqa: S307 - source built above
        with np.errstate(all="ignore"):
            return self._compiled(t=t, s=s, x=x)

    def diff(self, wrt):
        if wrt not in VARIABLES:
            raise ValueError(f"cannot differentiate with respect to {wrt!r}")
        return Expression(_diff_node(self._root, wrt))

    def __str__(self):
        return _to_text(self._root)

    def __repr__(self):
        return f"Expression({_to_text(self._root)!r})"

    def __eq__(self, other):
        return isinstance(other, Expression) and self._root == other._root

    def __hash__(self):
        return hash(self._root)


def parse(text):
    """Parse expression text into an :class:`Expression`."""
    if not isinstance(text, str) or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return Expression(_Parser(text).parse())


def evaluate(e, bindings):
    """Checked evaluation of ``e`` with a name -> value mapping."""
    return e.evaluate(bindings)


def differentiate(e, wrt):
    """Exact symbolic derivative of ``e`` with respect to ``t``, ``s`` or ``x``."""
    return e.diff(wrt)
