"""
Scalar expressions
------------------

Immutable expression trees over the variables ``x, y, z, t`` with a Pratt
parser, exact symbolic differentiation and two evaluation paths: a compiled
fast path (with common-subexpression elimination) and a tree walker that is
used to pinpoint the offending subexpression when evaluation fails.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("-" | "+") unary | power ;
    power   = atom [ ("^" | "**") unary ] ;          (* right associative *)
    atom    = number | "x" | "y" | "z" | "t" | "pi"
            | func "(" expr ")" | "(" expr ")" ;
    func    = "sin" | "cos" | "tan" | "exp" | "log" | "sqrt" ;
    number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
            | "." digits [ ... ] ;

Binding strength is pow > unary minus > mul/div > add/sub, so ``-x^2`` is
``-(x^2)`` and ``2^-x`` is ``2^(-x)``.
"""

from __future__ import annotations

import math
import re
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import EvalDomainError, ExprSyntaxError

VARIABLES = ("x", "y", "z", "t")
UNARY_OPS = ("neg", "sin", "cos", "tan", "exp", "log", "sqrt")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")

_FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")


class Expr:
    """Base node. Instances are immutable and hash structurally."""

    __slots__ = ("_hash", "_dcache", "_fn", "__weakref__")

    precedence = 5

    def __init__(self):
        self._dcache: dict[str, Expr] = {}
        self._fn = None

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or self._hash != other._hash:
            return False
        return self._same(other)

    def __ne__(self, other) -> bool:
        return not self == other

    def _same(self, other) -> bool:  # pragma: no cover - overridden
        raise NotImplementedError

    def children(self) -> tuple[Expr, ...]:
        return ()

    def __str__(self) -> str:
        return to_string(self)

    def __repr__(self) -> str:
        return f"Expr({to_string(self)!r})"

    # arithmetic sugar ---------------------------------------------------
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

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __rpow__(self, other):
        return power(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self

    # convenience ----------------------------------------------------------
    def diff(self, var: str) -> Expr:
        return differentiate(self, var)

    def evaluate(self, point: Sequence[float], time: float = 0.0) -> float:
        return evaluate(self, point, time)

    @property
    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0.0


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float):
        super().__init__()
        self.value = float(value)
        self._hash = hash(("c", self.value))

    @property
    def precedence(self):
        return 3 if self.value < 0 else 5

    def _same(self, other) -> bool:
        return self.value == other.value or (
            math.isnan(self.value) and math.isnan(other.value))


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        if name not in VARIABLES:
            raise ValueError(f"unknown variable {name!r}")
        super().__init__()
        self.name = name
        self._hash = hash(("v", name))

    def _same(self, other) -> bool:
        return self.name == other.name


class Unary(Expr):
    __slots__ = ("op", "arg")

    def __init__(self, op: str, arg: Expr):
        if op not in UNARY_OPS:
            raise ValueError(f"unknown unary op {op!r}")
        super().__init__()
        self.op = op
        self.arg = arg
        self._hash = hash(("u", op, arg._hash))

    @property
    def precedence(self):
        return 3 if self.op == "neg" else 5

    def children(self):
        return (self.arg,)

    def _same(self, other) -> bool:
        return self.op == other.op and self.arg == other.arg


class Binary(Expr):
    __slots__ = ("op", "left", "right")

    _PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "pow": 4}

    def __init__(self, op: str, left: Expr, right: Expr):
        if op not in BINARY_OPS:
            raise ValueError(f"unknown binary op {op!r}")
        super().__init__()
        self.op = op
        self.left = left
        self.right = right
        self._hash = hash(("b", op, left._hash, right._hash))

    @property
    def precedence(self):
        return self._PREC[self.op]

    def children(self):
        return (self.left, self.right)

    def _same(self, other) -> bool:
        return (self.op == other.op and self.left == other.left
                and self.right == other.right)


ZERO = Const(0.0)
ONE = Const(1.0)
X, Y, Z, T = (Var(v) for v in VARIABLES)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse(value)
    return Const(float(value))


def var(name: str) -> Expr:
    return Var(name)


def const(value: float) -> Expr:
    return Const(value)


# ---------------------------------------------------------------------------
# smart constructors (light simplification only)
# ---------------------------------------------------------------------------

def _cval(e: Expr):
    return e.value if isinstance(e, Const) else None


def add(a: Expr, b: Expr) -> Expr:
    ca, cb = _cval(a), _cval(b)
    if ca is not None and cb is not None:
        return Const(ca + cb)
    if ca == 0.0:
        return b
    if cb == 0.0:
        return a
    if isinstance(b, Unary) and b.op == "neg":
        return sub(a, b.arg)
    return Binary("add", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    ca, cb = _cval(a), _cval(b)
    if ca is not None and cb is not None:
        return Const(ca - cb)
    if cb == 0.0:
        return a
    if ca == 0.0:
        return neg(b)
    if a is b:
        return ZERO
    if isinstance(b, Unary) and b.op == "neg":
        return add(a, b.arg)
    return Binary("sub", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    ca, cb = _cval(a), _cval(b)
    if ca is not None and cb is not None:
        return Const(ca * cb)
    if ca == 0.0 or cb == 0.0:
        return ZERO
    if ca == 1.0:
        return b
    if cb == 1.0:
        return a
    if ca == -1.0:
        return neg(b)
    if cb == -1.0:
        return neg(a)
    return Binary("mul", a, b)


def div(a: Expr, b: Expr) -> Expr:
    ca, cb = _cval(a), _cval(b)
    if ca is not None and cb is not None and cb != 0.0:
        return Const(ca / cb)
    if ca == 0.0:
        return ZERO
    if cb == 1.0:
        return a
    if cb == -1.0:
        return neg(a)
    return Binary("div", a, b)


def power(a: Expr, b: Expr) -> Expr:
    ca, cb = _cval(a), _cval(b)
    if ca is not None and cb is not None:
        try:
            return Const(math.pow(ca, cb))
        except (ValueError, OverflowError):
            return Binary("pow", a, b)
    if cb == 0.0:
        return ONE
    if cb == 1.0:
        return a
    if ca == 1.0:
        return ONE
    return Binary("pow", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


_MATH_FUNCS: dict[str, Callable[[float], float]] = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "exp": math.exp, "log": math.log, "sqrt": math.sqrt,
}


def func(name: str, a: Expr) -> Expr:
    if name == "neg":
        return neg(a)
    if isinstance(a, Const):
        try:
            return Const(_MATH_FUNCS[name](a.value))
        except (ValueError, OverflowError):
            pass
    return Unary(name, a)


def sin(a) -> Expr:
    return func("sin", as_expr(a))


def cos(a) -> Expr:
    return func("cos", as_expr(a))


def tan(a) -> Expr:
    return func("tan", as_expr(a))


def exp(a) -> Expr:
    return func("exp", as_expr(a))


def log(a) -> Expr:
    return func("log", as_expr(a))


def sqrt(a) -> Expr:
    return func("sqrt", as_expr(a))


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),])
""", re.VERBOSE)

_LBP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40, "**": 40}
_UNARY_RBP = 30


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = list(self._tokenize(text))
        self.pos = 0

    def _byte_offset(self, char_index: int) -> int:
        return len(self.text[:char_index].encode("utf-8"))

    def error(self, message: str, char_index: int):
        raise ExprSyntaxError(message, self.text, self._byte_offset(char_index))

    def _tokenize(self, text):
        i = 0
        while i < len(text):
            m = _TOKEN_RE.match(text, i)
            if m is None:
                self.error(f"unexpected character {text[i]!r}", i)
            kind = m.lastgroup
            if kind != "ws":
                yield kind, m.group(), i
            i = m.end()
        yield "end", "", len(text)

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expression(self, rbp: int = 0) -> Expr:
        left = self.prefix()
        while True:
            kind, value, _ = self.peek()
            if kind != "op" or value not in _LBP or _LBP[value] <= rbp:
                break
            self.advance()
            left = self.infix(value, left)
        return left

    def prefix(self) -> Expr:
        kind, value, where = self.advance()
        if kind == "num":
            return Const(float(value))
        if kind == "name":
            if value in VARIABLES:
                return Var(value)
            if value == "pi":
                return Const(math.pi)
            if value in _FUNCTIONS:
                k2, v2, w2 = self.peek()
                if not (k2 == "op" and v2 == "("):
                    self.error(f"expected '(' after function {value!r}", w2)
                self.advance()
                arg = self.expression()
                self.expect_close(where)
                return func(value, arg)
            self.error(f"unknown identifier {value!r}", where)
        if kind == "op":
            if value == "(":
                inner = self.expression()
                self.expect_close(where)
                return inner
            if value == "-":
                return neg(self.expression(_UNARY_RBP))
            if value == "+":
                return self.expression(_UNARY_RBP)
        if kind == "end":
            self.error("unexpected end of input", where)
        self.error(f"unexpected {value!r}", where)

    def infix(self, op: str, left: Expr) -> Expr:
        if op in ("^", "**"):
            return power(left, self.expression(_LBP[op] - 1))
        right = self.expression(_LBP[op])
        return {"+": add, "-": sub, "*": mul, "/": div}[op](left, right)

    def expect_close(self, open_at: int):
        kind, value, where = self.peek()
        if kind == "op" and value == ")":
            self.advance()
            return
        if kind == "end":
            self.error(f"unbalanced '(' opened at byte {self._byte_offset(open_at)}",
                       where)
        self.error(f"expected ')' but found {value!r}", where)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression.

    Raises
    ------
    ExprSyntaxError
        With the byte offset of the first offending token.

    Examples
    --------
    >>> evaluate(parse("y*z - x*y - x*z"), (1, 2, 4))
    2.0
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    p = _Parser(text)
    e = p.expression()
    kind, value, where = p.peek()
    if kind != "end":
        if value == ")":
            p.error("unbalanced ')'", where)
        p.error(f"unexpected {value!r}", where)
    return e


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


def to_string(e: Expr) -> str:
    """Render ``e`` in the grammar accepted by :func:`parse`."""
    if isinstance(e, Const):
        if math.isinf(e.value) or math.isnan(e.value):
            raise ValueError("non-finite constant cannot be printed")
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        inner = to_string(e.arg)
        if e.op == "neg":
            if e.arg.precedence <= 3:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{e.op}({inner})"
    p = e.precedence
    left, right = to_string(e.left), to_string(e.right)
    if e.op == "pow":
        if e.left.precedence <= p:
            left = f"({left})"
        if e.right.precedence < p:
            right = f"({right})"
    else:
        if e.left.precedence < p:
            left = f"({left})"
        if e.right.precedence <= p:
            right = f"({right})"
    return f"{left} {_SYMBOL[e.op]} {right}"


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------

def differentiate(e: Expr, var: str) -> Expr:
    """Exact derivative of ``e`` with respect to ``var``.

    Results are memoised on each node, so shared subtrees are
    differentiated once.
    """
    if var not in VARIABLES:
        raise ValueError(f"unknown variable {var!r}")
    cached = e._dcache.get(var)
    if cached is not None:
        return cached
    # post-order walk; recursion depth of big frame expressions can exceed
    # the interpreter limit
    stack = [e]
    while stack:
        node = stack[-1]
        if var in node._dcache:
            stack.pop()
            continue
        pending = [c for c in node.children() if var not in c._dcache]
        if pending:
            stack.extend(pending)
            continue
        node._dcache[var] = _diff_node(node, var)
        stack.pop()
    return e._dcache[var]


def _diff_node(e: Expr, var: str) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Unary):
        a = e.arg
        da = a._dcache[var]
        if da.is_zero:
            return ZERO
        op = e.op
        if op == "neg":
            return neg(da)
        if op == "sin":
            return mul(func("cos", a), da)
        if op == "cos":
            return neg(mul(func("sin", a), da))
        if op == "tan":
            return div(da, power(func("cos", a), Const(2.0)))
        if op == "exp":
            return mul(e, da)
        if op == "log":
            return div(da, a)
        if op == "sqrt":
            return div(da, mul(Const(2.0), e))
    a, b = e.left, e.right
    da, db = a._dcache[var], b._dcache[var]
    op = e.op
    if op == "add":
        return add(da, db)
    if op == "sub":
        return sub(da, db)
    if op == "mul":
        return add(mul(da, b), mul(a, db))
    if op == "div":
        if db.is_zero:
            return div(da, b)
        return div(sub(mul(da, b), mul(a, db)), power(b, Const(2.0)))
    # pow
    if db.is_zero:
        if da.is_zero:
            return ZERO
        if isinstance(b, Const):
            return mul(mul(b, power(a, Const(b.value - 1.0))), da)
        return mul(mul(b, power(a, sub(b, ONE))), da)
    term_b = mul(db, func("log", a))
    if da.is_zero:
        return mul(e, term_b)
    return mul(e, add(term_b, div(mul(b, da), a)))


def gradient_exprs(e: Expr) -> tuple[Expr, Expr, Expr]:
    return tuple(differentiate(e, v) for v in ("x", "y", "z"))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _topological(exprs: Iterable[Expr]) -> tuple[list[Expr], dict]:
    order: list[Expr] = []
    index: dict[Expr, int] = {}
    for root in exprs:
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if node in index:
                continue
            if expanded:
                index[node] = len(order)
                order.append(node)
                continue
            stack.append((node, True))
            for c in node.children():
                if c not in index:
                    stack.append((c, False))
    return order, index


_PY_BINOP = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def lambdify(exprs: Sequence[Expr], backend: str = "math") -> Callable:
    """Compile expressions into ``f(x, y, z, t) -> tuple``.

    ``backend="math"`` raises Python arithmetic errors on poles and bad
    domains; ``backend="numpy"`` broadcasts over arrays and yields
    ``inf``/``nan`` instead.
    """
    exprs = list(exprs)
    order, index = _topological(exprs)
    lines = []
    names = {}
    for i, node in enumerate(order):
        if isinstance(node, Const):
            names[i] = repr(node.value) if math.isfinite(node.value) else f"_c{i}"
            continue
        if isinstance(node, Var):
            names[i] = node.name
            continue
        if isinstance(node, Unary):
            a = names[index[node.arg]]
            code = f"-{a}" if node.op == "neg" else f"_{node.op}({a})"
        else:
            a, b = names[index[node.left]], names[index[node.right]]
            if node.op == "pow":
                code = f"_pow({a}, {b})"
            else:
                code = f"({a} {_PY_BINOP[node.op]} {b})"
        lines.append(f"    _{i} = {code}")
        names[i] = f"_{i}"
    outs = ", ".join(names[index[e]] for e in exprs)
    src = "def _compiled(x, y, z, t):\n" + "\n".join(lines) + f"\n    return ({outs},)\n"
    if backend == "math":
        ns = {f"_{k}": f for k, f in _MATH_FUNCS.items()}
        ns["_pow"] = math.pow
    elif backend == "numpy":
        ns = {"_sin": np.sin, "_cos": np.cos, "_tan": np.tan, "_exp": np.exp,
              "_log": np.log, "_sqrt": np.sqrt, "_pow": np.power}
    else:
        raise ValueError(f"unknown backend {backend!r}")
    for i, node in enumerate(order):
        if isinstance(node, Const) and not math.isfinite(node.value):
            ns[f"_c{i}"] = node.value
    exec(compile(src, "<hamflow-expr>", "exec"), ns)
    return ns["_compiled"]


def _locate_failure(e: Expr, env: dict[str, float]) -> tuple[str, Expr | None]:
    """Walk the tree bottom-up and return (reason, first failing node)."""
    order, index = _topological([e])
    vals: list[float] = []
    for node in order:
        try:
            if isinstance(node, Const):
                val = node.value
            elif isinstance(node, Var):
                val = env[node.name]
            elif isinstance(node, Unary):
                a = vals[index[node.arg]]
                if node.op == "neg":
                    val = -a
                elif node.op == "log" and a <= 0.0:
                    return "log of non-positive value", node
                elif node.op == "sqrt" and a < 0.0:
                    return "square root of negative value", node
                else:
                    val = _MATH_FUNCS[node.op](a)
            else:
                a, b = vals[index[node.left]], vals[index[node.right]]
                if node.op == "div" and b == 0.0:
                    return "division by zero", node
                if node.op == "pow":
                    if a == 0.0 and b < 0.0:
                        return "division by zero", node
                    if a < 0.0 and b != math.floor(b):
                        return "fractional power of negative value", node
                    val = math.pow(a, b)
                else:
                    val = {"add": a + b, "sub": a - b, "mul": a * b,
                           "div": a / b if b != 0.0 else 0.0}[node.op]
        except (ValueError, ZeroDivisionError):
            return "invalid argument", node
        except OverflowError:
            return "overflow", node
        if not math.isfinite(val):
            return "non-finite value", node
        vals.append(val)
    return "non-finite value", None


def _short(node: Expr | None) -> str | None:
    if node is None:
        return None
    s = to_string(node) if _size_at_most(node, 60) else "<large subexpression>"
    return s


def _size_at_most(e: Expr, limit: int) -> bool:
    stack, n = [e], 0
    while stack:
        n += 1
        if n > limit:
            return False
        stack.extend(stack.pop().children())
    return True


def evaluate_compiled(fn: Callable, exprs: Sequence[Expr], point, time: float = 0.0):
    """Run a math-backend compiled function; translate failures."""
    px, py, pz = (float(c) for c in point)
    t = float(time)
    try:
        out = fn(px, py, pz, t)
        if all(math.isfinite(v) for v in out):
            return out
    except (ZeroDivisionError, ValueError, OverflowError):
        pass
    env = {"x": px, "y": py, "z": pz, "t": t}
    for e in exprs:
        reason, node = _locate_failure(e, env)
        if node is not None or reason != "non-finite value":
            raise EvalDomainError(reason, _short(node), (px, py, pz))
    raise EvalDomainError("non-finite value", None, (px, py, pz))


def evaluate(e: Expr, point: Sequence[float], time: float = 0.0) -> float:
    """Evaluate ``e`` at ``point`` (x, y, z) and ``time``.

    Raises
    ------
    EvalDomainError
        Naming the first subexpression that fails (pole, log of a
        non-positive number, even root of a negative number, overflow).
    """
    fn = e._fn
    if fn is None:
        fn = e._fn = lambdify([e])
    return evaluate_compiled(fn, [e], point, time)[0]


def evaluate_many(e: Expr, points, times=0.0) -> np.ndarray:
    """Vectorised evaluation over an ``(N, 3)`` array; singular points give nan."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    fn = lambdify([e], backend="numpy")
    with np.errstate(all="ignore"):
        out = fn(pts[:, 0], pts[:, 1], pts[:, 2], np.broadcast_to(times, pts.shape[:1]))[0]
    out = np.broadcast_to(np.asarray(out, dtype=float), pts.shape[:1]).copy()
    out[~np.isfinite(out)] = np.nan
    return out


def free_variables(e: Expr) -> set[str]:
    order, _ = _topological([e])
    return {n.name for n in order if isinstance(n, Var)}


def node_count(e: Expr) -> int:
    """Number of distinct nodes in the expression DAG."""
    return len(_topological([e])[0])
