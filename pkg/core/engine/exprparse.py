"""
Expression language for right-hand sides, boundary data and candidate fields.

Grammar (recursive descent)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := unary ('^' factor)?          # right-associative, constant exponent
    unary  := '-'? atom
    atom   := number | variable | func '(' expr (',' expr)* ')' | '(' expr ')'

Variables are x1, y1, x2, y2 (as allowed by the dimension), t = |z|^2 and
r = |z|. Evaluation works on floats and on numpy arrays alike.

Parenthesis and exponent nesting is capped at MAX_NESTING levels and the
parse tree at MAX_HEIGHT levels; deeper input is a syntax error.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .exceptions import EvaluationFault, ExprSyntaxError, UnknownIdentifierError

MAX_NESTING = 100
MAX_HEIGHT = 100

FUNCTIONS = {
    'min': (2, None),
    'max': (2, None),
    'abs': (1, 1),
    'exp': (1, 1),
    'log': (1, 1),
    'sqrt': (1, 1),
    'sin': (1, 1),
    'cos': (1, 1),
}

_TOKEN = re.compile(
    r'\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)'
    r'|(?P<name>[A-Za-z_][A-Za-z_0-9]*)'
    r'|(?P<op>[-+*/^(),]))'
)


def allowed_variables(n):
    names = {'t', 'r'}
    for j in range(1, n + 1):
        names.update({f'x{j}', f'y{j}'})
    return names


def coordinate_env(coords):
    """Variable valuation for points given as (..., 2n) real coordinates."""
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[-1] // 2
    env = {}
    for j in range(n):
        env[f'x{j + 1}'] = coords[..., 2 * j]
        env[f'y{j + 1}'] = coords[..., 2 * j + 1]
    t = np.sum(coords * coords, axis=-1)
    env['t'] = t
    env['r'] = np.sqrt(t)
    return env


# =====
# Nodes
# =====

class Expr:
    """Base parse-tree node; immutable once built."""

    def evaluate(self, env):
        raise NotImplementedError

    def variables(self):
        return set()

    def is_constant(self):
        return not self.variables()


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def evaluate(self, env):
        return self.value

    def __str__(self):
        return repr(float(self.value))


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def evaluate(self, env):
        if self.name in env:
            return env[self.name]
        if self.name in ('t', 'r'):
            t = 0.0
            j = 1
            while f'x{j}' in env:
                t = t + env[f'x{j}'] ** 2 + env[f'y{j}'] ** 2
                j += 1
            if j == 1:
                raise EvaluationFault(f"unbound variable '{self.name}'", str(self))
            return t if self.name == 't' else np.sqrt(t)
        raise EvaluationFault(f"unbound variable '{self.name}'", str(self))

    def variables(self):
        return {self.name}

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr

    def evaluate(self, env):
        return -self.operand.evaluate(env)

    def variables(self):
        return self.operand.variables()

    def __str__(self):
        return f'(-{self.operand})'


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == '+':
            return a + b
        if self.op == '-':
            return a - b
        if self.op == '*':
            return a * b
        if self.op == '/':
            if np.any(np.asarray(b) == 0):
                raise EvaluationFault('division by zero', str(self))
            return a / b
        # '^' with a constant exponent
        exponent = float(b)
        if exponent < 0 and np.any(np.asarray(a) == 0):
            raise EvaluationFault('zero base with negative exponent', str(self))
        if exponent.is_integer() and abs(exponent) <= 1024:
            k = int(exponent)
            return np.power(a, k) if k >= 0 else 1.0 / np.power(a, -k)
        if np.any(np.asarray(a) < 0):
            raise EvaluationFault('negative base with fractional exponent', str(self))
        return np.power(a, exponent)

    def variables(self):
        return self.left.variables() | self.right.variables()

    def __str__(self):
        return f'({self.left} {self.op} {self.right})'


@dataclass(frozen=True)
class Call(Expr):
    func: str
    args: tuple

    def evaluate(self, env):
        values = [arg.evaluate(env) for arg in self.args]
        if self.func == 'min':
            result = values[0]
            for v in values[1:]:
                result = np.minimum(result, v)
            return result
        if self.func == 'max':
            result = values[0]
            for v in values[1:]:
                result = np.maximum(result, v)
            return result
        x = values[0]
        if self.func == 'log':
            if np.any(np.asarray(x) <= 0):
                raise EvaluationFault('log of a nonpositive value', str(self))
            return np.log(x)
        if self.func == 'sqrt':
            if np.any(np.asarray(x) < 0):
                raise EvaluationFault('sqrt of a negative value', str(self))
            return np.sqrt(x)
        return {'abs': np.abs, 'exp': np.exp, 'sin': np.sin, 'cos': np.cos}[self.func](x)

    def variables(self):
        names = set()
        for arg in self.args:
            names |= arg.variables()
        return names

    def __str__(self):
        return f"{self.func}({', '.join(str(a) for a in self.args)})"


# ======
# Parser
# ======

class _Parser:

    def __init__(self, src, allowed):
        self.src = src
        self.allowed = allowed
        self.tokens = self._tokenize(src)
        self.pos = 0
        self.depth = 0
        self.heights = {}

    @staticmethod
    def _tokenize(src):
        tokens = []
        i = 0
        while i < len(src):
            if src[i].isspace():
                i += 1
                continue
            match = _TOKEN.match(src, i)
            if not match or match.end() == i:
                raise ExprSyntaxError(f"unexpected character '{src[i]}'", i)
            kind = match.lastgroup
            start = match.start(kind)
            if kind == 'number' and not math.isfinite(float(match.group(kind))):
                raise ExprSyntaxError(f"number '{match.group(kind)}' out of range", start)
            tokens.append((kind, match.group(kind), start))
            i = match.end()
        tokens.append(('end', '', len(src)))
        return tokens

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, text):
        kind, value, position = self.advance()
        if value != text:
            found = 'end of input' if kind == 'end' else f"'{value}'"
            raise ExprSyntaxError(f"expected '{text}', found {found}", position)

    def enter(self, position):
        self.depth += 1
        if self.depth > MAX_NESTING:
            raise ExprSyntaxError(f'nesting deeper than {MAX_NESTING} levels', position)

    def leave(self):
        self.depth -= 1

    def build(self, node, position, *children):
        height = 1 + max((self.heights[id(child)] for child in children), default=0)
        if height > MAX_HEIGHT:
            raise ExprSyntaxError(f'expression deeper than {MAX_HEIGHT} levels', position)
        self.heights[id(node)] = height
        return node

    def parse(self):
        tree = self.expr()
        kind, value, position = self.peek()
        if kind != 'end':
            raise ExprSyntaxError(f"unexpected '{value}'", position)
        return tree

    def expr(self):
        node = self.term()
        while self.peek()[1] in ('+', '-') and self.peek()[0] == 'op':
            _, op, position = self.advance()
            right = self.term()
            node = self.build(BinOp(op, node, right), position, node, right)
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ('*', '/') and self.peek()[0] == 'op':
            _, op, position = self.advance()
            right = self.factor()
            node = self.build(BinOp(op, node, right), position, node, right)
        return node

    def factor(self):
        base = self.unary()
        if self.peek()[1] == '^':
            position = self.advance()[2]
            self.enter(position)
            exponent = self.factor()
            self.leave()
            if not exponent.is_constant():
                raise ExprSyntaxError('exponent must be constant', position)
            try:
                value = float(exponent.evaluate({}))
            except EvaluationFault as exc:
                raise ExprSyntaxError(f'invalid exponent ({exc})', position)
            if not np.isfinite(value):
                raise ExprSyntaxError('exponent must be finite', position)
            folded = self.build(Num(value), position)
            return self.build(BinOp('^', base, folded), position, base, folded)
        return base

    def unary(self):
        if self.peek()[1] == '-':
            position = self.advance()[2]
            operand = self.atom()
            return self.build(Neg(operand), position, operand)
        return self.atom()

    def atom(self):
        kind, value, position = self.advance()
        if kind == 'number':
            return self.build(Num(float(value)), position)
        if kind == 'name':
            if value in FUNCTIONS:
                return self.call(value, position)
            if value not in self.allowed:
                raise UnknownIdentifierError(value, position)
            return self.build(Var(value), position)
        if value == '(':
            self.enter(position)
            node = self.expr()
            self.expect(')')
            self.leave()
            return node
        found = 'end of input' if kind == 'end' else f"'{value}'"
        raise ExprSyntaxError(f'unexpected {found}', position)

    def call(self, name, position):
        self.enter(position)
        self.expect('(')
        args = [self.expr()]
        while self.peek()[1] == ',':
            self.advance()
            args.append(self.expr())
        self.expect(')')
        self.leave()
        low, high = FUNCTIONS[name]
        if len(args) < low or (high is not None and len(args) > high):
            raise ExprSyntaxError(f'{name} takes {low if high == low else f"at least {low}"} argument(s)', position)
        return self.build(Call(name, tuple(args)), position, *args)


def parse(src, n=2):
    """Parse expression text for complex dimension n."""
    if not src or not src.strip():
        raise ExprSyntaxError('empty expression', 0)
    return _Parser(src, allowed_variables(n)).parse()


def evaluate(expr, env):
    """Evaluate a parsed expression; t and r are derived from coordinates if unbound."""
    return expr.evaluate(env)


def evaluate_at(expr, coords):
    """Evaluate on points given as (..., 2n) coordinates; always returns an array."""
    coords = np.asarray(coords, dtype=float)
    values = expr.evaluate(coordinate_env(coords))
    return np.broadcast_to(np.asarray(values, dtype=float), coords.shape[:-1]).copy()
