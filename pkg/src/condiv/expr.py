"""Single-variable arithmetic expressions for model coefficients.

Grammar (EBNF):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' factor)?            # right-associative power
    atom   := number | 'x' | func '(' args ')' | '(' expr ')' | '-' atom
    func   := exp | log | sqrt | min2 | max2

Numbers are decimal literals. min2/max2 take two comma-separated
arguments; the other functions take one. Note that per the grammar the
unary minus binds tighter than '^', so "-x^2" parses as "(-x)^2".

Evaluation is routed through numpy, so it accepts scalars or arrays and
never raises on domain problems (log of a negative number yields nan,
division by zero yields inf); the model validator treats non-finite
values as an assumption failure.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ExpressionError

_FUNCS = {
    "exp": (1, np.exp),
    "log": (1, np.log),
    "sqrt": (1, np.sqrt),
    "min2": (2, np.minimum),
    "max2": (2, np.maximum),
}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(source: str):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            # skip over trailing whitespace before complaining
            rest = source[pos:]
            if rest.strip() == "":
                break
            at = pos + len(rest) - len(rest.lstrip())
            raise ExpressionError(f"unexpected character {rest.strip()[0]!r}", at)
        if m.lastgroup == "num":
            tokens.append(("num", float(m.group("num")), m.start("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, off = self.peek()
        if kind != "op" or val != op:
            raise ExpressionError(f"expected {op!r}", off)
        return self.take()

    def parse(self):
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected trailing input {val!r}", off)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                node = ("add" if val == "+" else "sub", node, rhs)
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                rhs = self.factor()
                node = ("mul" if val == "*" else "div", node, rhs)
            else:
                return node

    def factor(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return ("pow", base, self.factor())
        return base

    def atom(self):
        kind, val, off = self.take()
        if kind == "num":
            return ("num", val)
        if kind == "name":
            if val == "x":
                return ("x",)
            if val in _FUNCS:
                arity, _ = _FUNCS[val]
                self.expect_op("(")
                args = [self.expr()]
                while True:
                    k2, v2, _ = self.peek()
                    if k2 == "op" and v2 == ",":
                        self.take()
                        args.append(self.expr())
                    else:
                        break
                self.expect_op(")")
                if len(args) != arity:
                    raise ExpressionError(
                        f"{val} takes {arity} argument(s), got {len(args)}", off
                    )
                return ("call", val, tuple(args))
            raise ExpressionError(f"unknown identifier {val!r}", off)
        if kind == "op" and val == "-":
            return ("neg", self.atom())
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ExpressionError(f"unexpected token {val!r}", off)


def _eval(node, x):
    tag = node[0]
    if tag == "num":
        return np.float64(node[1])
    if tag == "x":
        return x
    if tag == "neg":
        return -_eval(node[1], x)
    if tag == "add":
        return _eval(node[1], x) + _eval(node[2], x)
    if tag == "sub":
        return _eval(node[1], x) - _eval(node[2], x)
    if tag == "mul":
        return _eval(node[1], x) * _eval(node[2], x)
    if tag == "div":
        return _eval(node[1], x) / _eval(node[2], x)
    if tag == "pow":
        return _eval(node[1], x) ** _eval(node[2], x)
    if tag == "call":
        fn = _FUNCS[node[1]][1]
        return fn(*(_eval(a, x) for a in node[2]))
    raise AssertionError(f"bad node {node!r}")


def to_source(node) -> str:
    """Render a tree back to a fully parenthesized source string.

    Re-parsing the result yields a structurally identical tree, so
    evaluation round-trips bit for bit.
    """
    tag = node[0]
    if tag == "num":
        return repr(node[1])
    if tag == "x":
        return "x"
    if tag == "neg":
        return f"(-{to_source(node[1])})"
    if tag == "call":
        return f"{node[1]}({','.join(to_source(a) for a in node[2])})"
    op = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}[tag]
    return f"({to_source(node[1])}{op}{to_source(node[2])})"


def _affine_fold(node):
    """Return (a, b) if the tree is exactly a + b*x, else None.

    Non-linear subtrees of constants fold to constants, so e.g.
    sqrt(0.03) is recognized as constant.
    """
    tag = node[0]
    if tag == "num":
        return (node[1], 0.0)
    if tag == "x":
        return (0.0, 1.0)
    if tag == "neg":
        sub = _affine_fold(node[1])
        return None if sub is None else (-sub[0], -sub[1])
    if tag in ("add", "sub"):
        l, r = _affine_fold(node[1]), _affine_fold(node[2])
        if l is None or r is None:
            return None
        sgn = 1.0 if tag == "add" else -1.0
        return (l[0] + sgn * r[0], l[1] + sgn * r[1])
    if tag == "mul":
        l, r = _affine_fold(node[1]), _affine_fold(node[2])
        if l is None or r is None or (l[1] != 0.0 and r[1] != 0.0):
            return None
        return (l[0] * r[0], l[0] * r[1] + r[0] * l[1])
    if tag == "div":
        l, r = _affine_fold(node[1]), _affine_fold(node[2])
        if l is None or r is None or r[1] != 0.0 or r[0] == 0.0:
            return None
        return (l[0] / r[0], l[1] / r[0])
    if tag == "pow":
        l, r = _affine_fold(node[1]), _affine_fold(node[2])
        if l is None or r is None or r[1] != 0.0:
            return None
        if r[0] == 1.0:
            return l
        if l[1] != 0.0:
            return None
        return (float(np.float64(l[0]) ** np.float64(r[0])), 0.0)
    if tag == "call":
        folded = [_affine_fold(a) for a in node[2]]
        if any(f is None or f[1] != 0.0 for f in folded):
            return None
        fn = _FUNCS[node[1]][1]
        return (float(fn(*(np.float64(f[0]) for f in folded))), 0.0)
    return None


@dataclass(frozen=True)
class CoefficientFunction:
    """A parsed model coefficient, evaluable at any x.

    `tag` is one of 'constant', 'affine', 'expression'. Constant and
    affine coefficients carry their folded (a, b) representation (value
    a + b*x) so that downstream code can take fast paths.
    """

    source: str
    tree: tuple = field(repr=False)
    tag: str = "expression"
    affine: tuple | None = None

    def __call__(self, x):
        if self.affine is not None:
            a, b = self.affine
            if b == 0.0:
                if np.ndim(x) == 0:
                    return np.float64(a)
                return np.full(np.shape(x), a)
            return a + b * np.asarray(x, dtype=np.float64)
        with np.errstate(all="ignore"):
            return _eval(self.tree, np.asarray(x, dtype=np.float64))

    @property
    def is_constant(self) -> bool:
        return self.tag == "constant"

    @property
    def constant_value(self) -> float:
        if not self.is_constant:
            raise ValueError(f"{self.source!r} is not constant")
        return self.affine[0]

    def pretty(self) -> str:
        return to_source(self.tree)


def parse_coefficient(source) -> CoefficientFunction:
    """Parse an expression string (or bare number) into a coefficient."""
    if isinstance(source, (int, float)):
        v = float(source)
        return CoefficientFunction(repr(v), ("num", v), "constant", (v, 0.0))
    tree = _Parser(source).parse()
    affine = _affine_fold(tree)
    if affine is None:
        return CoefficientFunction(source, tree, "expression", None)
    tag = "constant" if affine[1] == 0.0 else "affine"
    return CoefficientFunction(source, tree, tag, affine)
