"""Small total arithmetic expression language for metric components.

The grammar covers ``+ - * / ^`` (``**`` is accepted for ``^``), the
functions ``sin cos sinh cosh exp log sqrt pow``, the constants ``pi`` and
``e``, and coordinate variables ``x1..xn`` (``x y z w`` alias the first
four).  It is deliberately closed: no user-defined functions, so every
expression can be evaluated with floats, numpy arrays, or jets.

Parse errors carry one-based line/column positions.
"""

from __future__ import annotations

import numpy as np

from .jets import Jet

FUNCTIONS = ("sin", "cos", "sinh", "cosh", "exp", "log", "sqrt", "pow")
CONSTANTS = {"pi": np.pi, "e": np.e}
_ALIASES = {"x": 0, "y": 1, "z": 2, "w": 3}


class ExpressionError(ValueError):
    """Tokenizer/parser/evaluator failure with source position."""

    def __init__(self, message, line=1, col=1):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


def _tokenize(src):
    tokens = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        ch = src[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        start_col = col
        if ch.isdigit() or (ch == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            seen_exp = False
            while j < n and (src[j].isdigit() or src[j] == "." or src[j] in "eE" or (seen_exp and src[j] in "+-" and src[j - 1] in "eE")):
                if src[j] in "eE":
                    if seen_exp:
                        break
                    if j + 1 < n and (src[j + 1].isdigit() or (src[j + 1] in "+-" and j + 2 < n and src[j + 2].isdigit())):
                        seen_exp = True
                    else:
                        break
                j += 1
            text = src[i:j]
            try:
                value = float(text)
            except ValueError:
                raise ExpressionError(f"bad number {text!r}", line, start_col)
            tokens.append(("num", value, line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("name", src[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if src.startswith("**", i):
            tokens.append(("op", "^", line, start_col))
            i += 2
            col += 2
            continue
        if ch in "+-*/^(),":
            tokens.append(("op", ch, line, start_col))
            i += 1
            col += 1
            continue
        raise ExpressionError(f"unexpected character {ch!r}", line, start_col)
    tokens.append(("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens, dim):
        self.tokens = tokens
        self.pos = 0
        self.dim = dim

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, val, line, col = self.next()
        if kind != "op" or val != op:
            raise ExpressionError(f"expected {op!r}", line, col)

    def parse(self):
        node = self.expr()
        kind, val, line, col = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected trailing {val!r}", line, col)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, val, _, _ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                rhs = self.term()
                node = ("add" if val == "+" else "sub", node, rhs)
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, val, _, _ = self.peek()
            if kind == "op" and val in "*/":
                self.next()
                rhs = self.factor()
                node = ("mul" if val == "*" else "div", node, rhs)
            else:
                return node

    def factor(self):
        # unary minus binds looser than power: -x^2 == -(x^2)
        kind, val, _, _ = self.peek()
        if kind == "op" and val in "+-":
            self.next()
            node = self.factor()
            return node if val == "+" else ("neg", node)
        return self.power()

    def power(self):
        node = self.primary()
        kind, val, _, _ = self.peek()
        if kind == "op" and val == "^":
            self.next()
            return ("pow", node, self.factor())  # right associative
        return node

    def primary(self):
        kind, val, line, col = self.next()
        if kind == "num":
            return ("num", val)
        if kind == "name":
            nk, nv, _, _ = self.peek()
            if nk == "op" and nv == "(":
                if val not in FUNCTIONS:
                    raise ExpressionError(f"unknown function {val!r}", line, col)
                self.next()
                args = [self.expr()]
                while True:
                    k2, v2, l2, c2 = self.next()
                    if k2 == "op" and v2 == ")":
                        break
                    if k2 == "op" and v2 == ",":
                        args.append(self.expr())
                        continue
                    raise ExpressionError("expected ',' or ')'", l2, c2)
                want = 2 if val == "pow" else 1
                if len(args) != want:
                    raise ExpressionError(
                        f"{val} takes {want} argument(s), got {len(args)}", line, col
                    )
                if val == "pow":
                    return ("pow", args[0], args[1])
                return ("call", val, args[0])
            if val in CONSTANTS:
                return ("num", CONSTANTS[val])
            idx = self._var_index(val)
            if idx is None:
                raise ExpressionError(f"unknown name {val!r}", line, col)
            if idx >= self.dim:
                raise ExpressionError(
                    f"variable {val!r} exceeds dimension {self.dim}", line, col
                )
            return ("var", idx)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionError(f"unexpected token {val!r}", line, col)

    @staticmethod
    def _var_index(name):
        if name in _ALIASES:
            return _ALIASES[name]
        if len(name) >= 2 and name[0] == "x" and name[1:].isdigit():
            return int(name[1:]) - 1
        return None


def parse_expression(src, dim):
    """Parse ``src`` into an AST for a ``dim``-dimensional chart."""
    return _Parser(_tokenize(src), dim).parse()


def _call(name, arg):
    if isinstance(arg, Jet):
        return getattr(arg, name)()
    return getattr(np, name)(arg)


def evaluate(node, coords):
    """Evaluate an AST with coordinate values (floats, arrays, or jets)."""
    op = node[0]
    if op == "num":
        return node[1]
    if op == "var":
        return coords[node[1]]
    if op == "neg":
        return -evaluate(node[1], coords)
    if op == "add":
        return evaluate(node[1], coords) + evaluate(node[2], coords)
    if op == "sub":
        return evaluate(node[1], coords) - evaluate(node[2], coords)
    if op == "mul":
        return evaluate(node[1], coords) * evaluate(node[2], coords)
    if op == "div":
        return evaluate(node[1], coords) / evaluate(node[2], coords)
    if op == "pow":
        base = evaluate(node[1], coords)
        expo = evaluate(node[2], coords)
        if isinstance(base, Jet) or isinstance(expo, Jet):
            if not isinstance(base, Jet):
                base = Jet.constant(float(base), expo.nvars, expo.degree)
            return base ** expo if isinstance(expo, Jet) else base ** expo
        return base ** expo
    if op == "call":
        return _call(node[1], evaluate(node[2], coords))
    raise ValueError(f"corrupt AST node {node!r}")


class Expression:
    """Parsed expression keeping its source for lossless serialization."""

    __slots__ = ("source", "ast", "dim")

    def __init__(self, source, dim):
        self.source = source
        self.dim = dim
        self.ast = parse_expression(source, dim)

    def __call__(self, coords):
        return evaluate(self.ast, coords)

    def jet(self, point, degree):
        return evaluate(self.ast, Jet.variables(point, degree))

    def __repr__(self):
        return f"Expression({self.source!r})"
