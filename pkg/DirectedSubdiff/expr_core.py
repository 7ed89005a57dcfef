"""
Expressions built from affine atoms with +, -, *, /, min, max (abs as sugar):
parsing, formatting, evaluation and exact Dini directional derivatives.
"""
import re
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionError, EvaluationError, ExprParseError, NotPolyhedralError
from .geometry import Polytope, convex_hull, inner_products, minkowski_sum

ACTIVE_TOL = 1e-9

CONSTANT = 'constant'
AFFINE = 'affine'
SUM = 'sum'
DIFFERENCE = 'difference'
PRODUCT = 'product'
QUOTIENT = 'quotient'
MIN = 'min'
MAX = 'max'
NEGATION = 'negation'

_BINARY = (SUM, DIFFERENCE, PRODUCT, QUOTIENT)


@dataclass(frozen=True)
class Expr:
    """
    Node of an expression tree in n variables.

    constant: value; affine: <coeffs, x> + value; sum/difference/product/quotient:
    two children; min/max: at least two children; negation: one child.
    """
    kind: str
    n: int
    children: Tuple['Expr', ...] = ()
    coeffs: Optional[Tuple[float, ...]] = None
    value: float = 0.0

    def __add__(self, other: 'ExprLike') -> 'Expr':
        return add(self, _lift_operand(other, self.n))

    def __radd__(self, other: 'ExprLike') -> 'Expr':
        return add(_lift_operand(other, self.n), self)

    def __sub__(self, other: 'ExprLike') -> 'Expr':
        return subtract(self, _lift_operand(other, self.n))

    def __rsub__(self, other: 'ExprLike') -> 'Expr':
        return subtract(_lift_operand(other, self.n), self)

    def __mul__(self, other: 'ExprLike') -> 'Expr':
        return multiply(self, _lift_operand(other, self.n))

    def __rmul__(self, other: 'ExprLike') -> 'Expr':
        return multiply(_lift_operand(other, self.n), self)

    def __truediv__(self, other: 'ExprLike') -> 'Expr':
        return divide(self, _lift_operand(other, self.n))

    def __neg__(self) -> 'Expr':
        return negate(self)

    def __str__(self) -> str:
        return format_expr(self)


ExprLike = object  # Expr or a real number


def _lift_operand(value: 'ExprLike', n: int) -> Expr:
    if isinstance(value, Expr):
        return value
    return constant(float(value), n)


def constant(value: float, n: int) -> Expr:
    if n < 1:
        raise DimensionError(f"arity must be positive, got {n}")
    return Expr(CONSTANT, n, value=float(value))


def affine(coeffs: Sequence[float], offset: float = 0.0) -> Expr:
    """The atom <coeffs, x> + offset; its arity is len(coeffs)."""
    coeffs = tuple(float(c) for c in coeffs)
    if not coeffs:
        raise DimensionError("an affine atom needs at least one coefficient")
    return Expr(AFFINE, len(coeffs), coeffs=coeffs, value=float(offset))


def variable(index: int, n: int) -> Expr:
    """x_index (1-based) in n variables."""
    if not 1 <= index <= n:
        raise DimensionError(f"variable x{index} out of range for arity {n}")
    coeffs = [0.0] * n
    coeffs[index - 1] = 1.0
    return affine(coeffs)


def _binary(kind: str, a: Expr, b: Expr) -> Expr:
    if a.n != b.n:
        raise DimensionError(f"cannot combine expressions of arity {a.n} and {b.n}")
    return Expr(kind, a.n, (a, b))


def add(a: Expr, b: Expr) -> Expr:
    return _binary(SUM, a, b)


def subtract(a: Expr, b: Expr) -> Expr:
    return _binary(DIFFERENCE, a, b)


def multiply(a: Expr, b: Expr) -> Expr:
    return _binary(PRODUCT, a, b)


def divide(a: Expr, b: Expr) -> Expr:
    return _binary(QUOTIENT, a, b)


def negate(a: Expr) -> Expr:
    return Expr(NEGATION, a.n, (a,))


def _extremum(kind: str, children: Iterable[Expr]) -> Expr:
    children = tuple(children)
    if not children:
        raise ValueError(f"{kind} needs at least one argument")
    if len(children) == 1:
        return children[0]
    arities = {c.n for c in children}
    if len(arities) != 1:
        raise DimensionError(f"{kind} over expressions of arities {sorted(arities)}")
    return Expr(kind, children[0].n, children)


def maximum(children: Iterable[Expr]) -> Expr:
    """Pointwise max; a single argument collapses to itself."""
    return _extremum(MAX, children)


def minimum(children: Iterable[Expr]) -> Expr:
    """Pointwise min; a single argument collapses to itself."""
    return _extremum(MIN, children)


def absolute(a: Expr) -> Expr:
    """|a| as max(a, -a)."""
    return maximum([a, negate(a)])


# ---------------------------------------------------------------------------
# parsing and formatting

_TOKEN_RE = re.compile(r"""
    (?P<space>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<var>x\d+)
  | (?P<name>max|min|abs)
  | (?P<op>[-+*/(),])
""", re.VERBOSE)


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ExprParseError(f"unexpected character {text[pos]!r}", pos)
        kind = match.lastgroup
        if kind != 'space':
            tokens.append((kind, match.group(), pos))
        pos = match.end()
    tokens.append(('end', '', len(text)))
    return tokens


class _Parser:
    """Recursive descent over the token list, one method per grammar rule."""

    def __init__(self, tokens: List[Tuple[str, str, int]], n: int):
        self.tokens = tokens
        self.index = 0
        self.n = n

    def peek(self) -> Tuple[str, str, int]:
        return self.tokens[self.index]

    def advance(self) -> Tuple[str, str, int]:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, text: str) -> None:
        kind, found, pos = self.advance()
        if found != text:
            raise ExprParseError(f"expected {text!r}, found {found or 'end of input'!r}", pos)

    def expression(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ('+', '-'):
            op = self.advance()[1]
            right = self.term()
            node = add(node, right) if op == '+' else subtract(node, right)
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek()[1] in ('*', '/'):
            op = self.advance()[1]
            right = self.factor()
            node = multiply(node, right) if op == '*' else divide(node, right)
        return node

    def factor(self) -> Expr:
        kind, text, pos = self.advance()
        if kind == 'number':
            return constant(float(text), self.n)
        if kind == 'var':
            index = int(text[1:])
            if not 1 <= index <= self.n:
                raise ExprParseError(f"variable {text} out of range for n={self.n}", pos)
            return variable(index, self.n)
        if text == '(':
            node = self.expression()
            self.expect(')')
            return node
        if text == '-':
            # a literal directly after unary minus is a negative constant
            if self.peek()[0] == 'number':
                return constant(-float(self.advance()[1]), self.n)
            return negate(self.factor())
        if kind == 'name':
            self.expect('(')
            args = [self.expression()]
            if text == 'abs':
                self.expect(')')
                return absolute(args[0])
            while self.peek()[1] == ',':
                self.advance()
                args.append(self.expression())
            self.expect(')')
            return maximum(args) if text == 'max' else minimum(args)
        raise ExprParseError(f"unexpected {text or 'end of input'!r}", pos)


def parse(text: str, n: int) -> Expr:
    """Parse text into an expression in the variables x1..xn."""
    if n < 1:
        raise DimensionError(f"arity must be positive, got {n}")
    parser = _Parser(_tokenize(text), n)
    node = parser.expression()
    kind, found, pos = parser.peek()
    if kind != 'end':
        raise ExprParseError(f"unexpected {found!r} after complete expression", pos)
    return node


_PRECEDENCE = {SUM: 1, DIFFERENCE: 1, PRODUCT: 2, QUOTIENT: 2}


def _precedence(f: Expr) -> int:
    if f.kind == AFFINE and not _is_variable(f):
        return 3  # formatted inside parentheses
    return _PRECEDENCE.get(f.kind, 3)


def _is_variable(f: Expr) -> bool:
    return f.kind == AFFINE and f.value == 0.0 and \
        sorted(f.coeffs) == [0.0] * (f.n - 1) + [1.0]


def _wrap(f: Expr, min_precedence: int) -> str:
    text = format_expr(f)
    return f"({text})" if _precedence(f) < min_precedence else text


def format_expr(f: Expr) -> str:
    """
    Text for f in the parser's grammar; parse(format_expr(f), f.n) == f for
    every tree produced by parse. General affine atoms are written as sums.
    """
    if f.kind == CONSTANT:
        return repr(f.value)
    if f.kind == AFFINE:
        if _is_variable(f):
            return f"x{f.coeffs.index(1.0) + 1}"
        terms = [f"{c!r}*x{i + 1}" for i, c in enumerate(f.coeffs) if c != 0.0]
        terms.append(repr(f.value))
        return "(" + " + ".join(terms) + ")"
    if f.kind in (SUM, DIFFERENCE):
        op = '+' if f.kind == SUM else '-'
        return f"{_wrap(f.children[0], 1)} {op} {_wrap(f.children[1], 2)}"
    if f.kind in (PRODUCT, QUOTIENT):
        op = '*' if f.kind == PRODUCT else '/'
        return f"{_wrap(f.children[0], 2)} {op} {_wrap(f.children[1], 3)}"
    if f.kind == NEGATION:
        child = f.children[0]
        if child.kind == CONSTANT:
            return f"-({format_expr(child)})"
        return "-" + _wrap(child, 3)
    return f"{f.kind}(" + ", ".join(format_expr(c) for c in f.children) + ")"


# ---------------------------------------------------------------------------
# evaluation and directional derivatives

def _as_point(x: Sequence[float], n: int, what: str = "point") -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != n:
        raise DimensionError(f"{what} of dimension {x.size} for an expression of arity {n}")
    if not np.all(np.isfinite(x)):
        raise EvaluationError(f"{what} has non-finite entries")
    return x


def _affine_value(f: Expr, x: np.ndarray) -> float:
    return float(inner_products(np.array([f.coeffs]), x[None, :])[0, 0]) + f.value


def _active(values: Sequence[float], is_max: bool, active_tol: float) -> Tuple[float, List[int]]:
    best = max(values) if is_max else min(values)
    slack = active_tol * max(1.0, abs(best))
    if is_max:
        active = [i for i, v in enumerate(values) if v >= best - slack]
    else:
        active = [i for i, v in enumerate(values) if v <= best + slack]
    return best, active


def _check_denominator(value: float, node: Expr) -> None:
    if value == 0.0:
        raise EvaluationError("division by zero", f"denominator {format_expr(node)}")


def _evaluate(f: Expr, x: np.ndarray) -> float:
    kind = f.kind
    if kind == CONSTANT:
        return f.value
    if kind == AFFINE:
        return _affine_value(f, x)
    if kind == NEGATION:
        return -_evaluate(f.children[0], x)
    if kind in (MIN, MAX):
        values = [_evaluate(c, x) for c in f.children]
        return max(values) if kind == MAX else min(values)
    a = _evaluate(f.children[0], x)
    b = _evaluate(f.children[1], x)
    if kind == SUM:
        return a + b
    if kind == DIFFERENCE:
        return a - b
    if kind == PRODUCT:
        return a * b
    _check_denominator(b, f.children[1])
    return a / b


def evaluate(f: Expr, x: Sequence[float]) -> float:
    """f(x)."""
    return _evaluate(f, _as_point(x, f.n))


def _batch_value_and_dd(f: Expr, X: np.ndarray, L: np.ndarray, active_tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Row-wise (f(x_i), f'(x_i; l_i)) for X, L of shape (m, n)."""
    kind = f.kind
    m = X.shape[0]
    if kind == CONSTANT:
        return np.full(m, f.value), np.zeros(m)
    if kind == AFFINE:
        coeffs = np.array([f.coeffs])
        return inner_products(coeffs, X)[0] + f.value, inner_products(coeffs, L)[0]
    if kind == NEGATION:
        v, d = _batch_value_and_dd(f.children[0], X, L, active_tol)
        return -v, -d
    if kind in (MIN, MAX):
        pairs = [_batch_value_and_dd(c, X, L, active_tol) for c in f.children]
        values = np.array([v for v, _ in pairs])
        derivatives = np.array([d for _, d in pairs])
        if kind == MAX:
            best = values.max(axis=0)
            active = values >= best - active_tol * np.maximum(1.0, np.abs(best))
            return best, np.where(active, derivatives, -np.inf).max(axis=0)
        best = values.min(axis=0)
        active = values <= best + active_tol * np.maximum(1.0, np.abs(best))
        return best, np.where(active, derivatives, np.inf).min(axis=0)
    v1, d1 = _batch_value_and_dd(f.children[0], X, L, active_tol)
    v2, d2 = _batch_value_and_dd(f.children[1], X, L, active_tol)
    if kind == SUM:
        return v1 + v2, d1 + d2
    if kind == DIFFERENCE:
        return v1 - v2, d1 - d2
    if kind == PRODUCT:
        return v1 * v2, v1 * d2 + v2 * d1
    if np.any(v2 == 0.0):
        raise EvaluationError("division by zero", f"denominator {format_expr(f.children[1])}")
    return v1 / v2, (v2 * d1 - v1 * d2) / (v2 * v2)


def dini_dd_batch(f: Expr, x: Sequence[float], directions: Sequence[Sequence[float]],
                  active_tol: float = ACTIVE_TOL) -> np.ndarray:
    """
    f'(x; l) for every row l of directions, or f'(x_i; l_i) when x is given
    as one point per row.

    Each entry equals dini_dd on the same arguments bit for bit.
    """
    L = np.asarray(directions, dtype=float)
    if L.ndim != 2 or L.shape[1] != f.n:
        raise DimensionError(f"directions of shape {L.shape} for an expression of arity {f.n}")
    if not np.all(np.isfinite(L)):
        raise EvaluationError("direction has non-finite entries")
    X = np.asarray(x, dtype=float)
    if X.ndim == 2:
        if X.shape != L.shape:
            raise DimensionError(f"{X.shape[0]} points for {L.shape[0]} directions")
        if not np.all(np.isfinite(X)):
            raise EvaluationError("point has non-finite entries")
    else:
        X = np.broadcast_to(_as_point(X, f.n), L.shape)
    _, derivatives = _batch_value_and_dd(f, X, L, active_tol)
    if not np.all(np.isfinite(derivatives)):
        raise EvaluationError("non-finite directional derivative", format_expr(f))
    return derivatives


def dini_dd(f: Expr, x: Sequence[float], l: Sequence[float], active_tol: float = ACTIVE_TOL) -> float:
    """
    The one-sided directional derivative f'(x; l), computed structurally.

    Max/min nodes differentiate over their children active at x, i.e. within
    active_tol * max(1, |f_max(x)|) of the extremal value. Quotients use the
    standard rule (f2 f1' - f1 f2') / f2^2.
    """
    x = _as_point(x, f.n)
    l = _as_point(l, f.n, "direction")
    return float(dini_dd_batch(f, x, l[None, :], active_tol)[0])


def _is_linear_leaf(f: Expr) -> bool:
    return f.kind in (CONSTANT, AFFINE)


def _leaf_parts(f: Expr) -> Tuple[np.ndarray, float]:
    if f.kind == CONSTANT:
        return np.zeros(f.n), f.value
    return np.array(f.coeffs), f.value


def _scaled(f: Expr, s: float) -> Expr:
    if s == 1.0:
        return f
    if f.kind == CONSTANT or s == 0.0:
        return constant(s * f.value if f.kind == CONSTANT else 0.0, f.n)
    if f.kind == AFFINE:
        return affine([s * c for c in f.coeffs], s * f.value)
    return multiply(constant(s, f.n), f)


def _combined(a: Expr, b: Expr, sign: float) -> Expr:
    """a + sign * b, merging linear leaves."""
    if _is_linear_leaf(a) and _is_linear_leaf(b):
        ca, va = _leaf_parts(a)
        cb, vb = _leaf_parts(b)
        if a.kind == CONSTANT and b.kind == CONSTANT:
            return constant(va + sign * vb, a.n)
        return affine(ca + sign * cb, va + sign * vb)
    if b.kind == CONSTANT and b.value == 0.0:
        return a
    if a.kind == CONSTANT and a.value == 0.0:
        return b if sign > 0 else _negated(b)
    return add(a, b) if sign > 0 else subtract(a, b)


def _negated(f: Expr) -> Expr:
    if _is_linear_leaf(f):
        return _scaled(f, -1.0)
    return negate(f)


def _dd(f: Expr, x: np.ndarray, active_tol: float) -> Tuple[float, Expr]:
    kind = f.kind
    if kind == CONSTANT:
        return f.value, constant(0.0, f.n)
    if kind == AFFINE:
        return _affine_value(f, x), affine(f.coeffs)
    if kind == NEGATION:
        v, phi = _dd(f.children[0], x, active_tol)
        return -v, _negated(phi)
    if kind in (MIN, MAX):
        parts = [_dd(c, x, active_tol) for c in f.children]
        best, active = _active([v for v, _ in parts], kind == MAX, active_tol)
        chosen = [parts[i][1] for i in active]
        return best, (maximum(chosen) if kind == MAX else minimum(chosen))
    v1, phi1 = _dd(f.children[0], x, active_tol)
    v2, phi2 = _dd(f.children[1], x, active_tol)
    if kind == SUM:
        return v1 + v2, _combined(phi1, phi2, 1.0)
    if kind == DIFFERENCE:
        return v1 - v2, _combined(phi1, phi2, -1.0)
    if kind == PRODUCT:
        return v1 * v2, _combined(_scaled(phi2, v1), _scaled(phi1, v2), 1.0)
    _check_denominator(v2, f.children[1])
    if phi2.kind == CONSTANT and phi2.value == 0.0:
        return v1 / v2, _scaled(phi1, 1.0 / v2)
    numerator = _combined(_scaled(phi1, v2), _scaled(phi2, v1), -1.0)
    return v1 / v2, _scaled(numerator, 1.0 / (v2 * v2))


def dd_function(f: Expr, x: Sequence[float], active_tol: float = ACTIVE_TOL) -> Expr:
    """
    The expression phi(d) = f'(x; d) in the direction variable d.

    Products and quotients become fixed linear combinations with coefficients
    taken at x; max/min nodes keep only the children active at x. The result
    has no quotient nodes.
    """
    x = _as_point(x, f.n)
    _, phi = _dd(f, x, active_tol)
    return phi


def substitute_affine(f: Expr, A: Sequence[Sequence[float]], b: Sequence[float]) -> Expr:
    """g(y) = f(A y + b), rewriting every affine atom <c,.>+beta to <A^T c,.> + <c,b> + beta."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != f.n:
        raise DimensionError(f"substitution matrix of shape {A.shape} for an expression of arity {f.n}")
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.size != f.n:
        raise DimensionError(f"offset of dimension {b.size} for an expression of arity {f.n}")
    return _substitute(f, A, b, A.shape[1])


def _substitute(f: Expr, A: np.ndarray, b: np.ndarray, k: int) -> Expr:
    if f.kind == CONSTANT:
        return constant(f.value, k)
    if f.kind == AFFINE:
        c = np.array(f.coeffs)
        return affine(A.T @ c, float(np.dot(c, b)) + f.value)
    return replace(f, n=k, children=tuple(_substitute(c, A, b, k) for c in f.children))


# ---------------------------------------------------------------------------
# convex polyhedral subdifferentials

def _constant_value(f: Expr) -> Optional[float]:
    """The value of f when it does not depend on x, else None."""
    kind = f.kind
    if kind == CONSTANT:
        return f.value
    if kind == AFFINE:
        return f.value if not any(f.coeffs) else None
    values = [_constant_value(c) for c in f.children]
    if None in values:
        return None
    if kind == NEGATION:
        return -values[0]
    if kind == MAX:
        return max(values)
    if kind == MIN:
        return min(values)
    a, b = values
    if kind == SUM:
        return a + b
    if kind == DIFFERENCE:
        return a - b
    if kind == PRODUCT:
        return a * b
    return a / b if b != 0.0 else None


def _convex_class(f: Expr) -> Optional[str]:
    """'affine', 'convex' or None when f is not certified max-affine."""
    kind = f.kind
    if kind in (CONSTANT, AFFINE) or _constant_value(f) is not None:
        return 'affine'
    if kind == NEGATION:
        return 'affine' if _convex_class(f.children[0]) == 'affine' else None
    if kind == MAX:
        classes = [_convex_class(c) for c in f.children]
        return None if None in classes else 'convex'
    if kind == MIN:
        return None
    left, right = (_convex_class(c) for c in f.children)
    if kind == SUM:
        if left is None or right is None:
            return None
        return 'affine' if left == right == 'affine' else 'convex'
    if kind == DIFFERENCE:
        return left if right == 'affine' else None
    if kind == PRODUCT:
        for scale, other, other_class in ((f.children[0], f.children[1], right),
                                          (f.children[1], f.children[0], left)):
            s = _constant_value(scale)
            if s is not None and other_class is not None:
                if other_class == 'affine' or s >= 0:
                    return other_class
        return None
    # quotient
    s = _constant_value(f.children[1])
    if s is not None and s != 0.0 and left is not None:
        if left == 'affine' or s > 0:
            return left
    return None


def is_max_affine(f: Expr) -> bool:
    """True iff f is built from affine atoms by nonnegative combinations and max."""
    return _convex_class(f) is not None


def _subdifferential(f: Expr, x: np.ndarray, active_tol: float) -> Tuple[float, Polytope]:
    kind = f.kind
    value = _constant_value(f)
    if value is not None:
        return value, Polytope(np.zeros((1, f.n)))
    if kind == AFFINE:
        return _affine_value(f, x), Polytope([f.coeffs])
    if kind == NEGATION:
        v, P = _subdifferential(f.children[0], x, active_tol)
        return -v, P.negate()
    if kind == MAX:
        parts = [_subdifferential(c, x, active_tol) for c in f.children]
        best, active = _active([v for v, _ in parts], True, active_tol)
        return best, convex_hull([parts[i][1] for i in active])
    if kind == PRODUCT:
        scale_index = 0 if _constant_value(f.children[0]) is not None else 1
        s = _constant_value(f.children[scale_index])
        v, P = _subdifferential(f.children[1 - scale_index], x, active_tol)
        return s * v, Polytope(s * P.vertices)
    if kind == QUOTIENT:
        s = _constant_value(f.children[1])
        v, P = _subdifferential(f.children[0], x, active_tol)
        return v / s, Polytope(P.vertices / s)
    v1, P1 = _subdifferential(f.children[0], x, active_tol)
    v2, P2 = _subdifferential(f.children[1], x, active_tol)
    if kind == SUM:
        return v1 + v2, minkowski_sum(P1, P2)
    return v1 - v2, minkowski_sum(P1, P2.negate())


def convex_polyhedral_subdifferential(f: Expr, x: Sequence[float], active_tol: float = ACTIVE_TOL) -> Polytope:
    """
    The convex subdifferential of a max-affine f at x as a vertex list:
    Minkowski sums for sums, scaled vertices for nonnegative scaling, hull of
    the active children for max.
    """
    if not is_max_affine(f):
        raise NotPolyhedralError(f"expression is not in max-affine form: {format_expr(f)}")
    x = _as_point(x, f.n)
    _, P = _subdifferential(f, x, active_tol)
    return P
