"""Shared generators for randomized tests."""

from __future__ import annotations

import itertools

import numpy as np
from hypothesis import strategies as st

from hamflow import expr as ex
from hamflow.errors import EvalDomainError
from hamflow.exterior import VectorField3

UNARY = ("neg", "sin", "cos", "tan", "exp", "log", "sqrt")
BINARY = ("add", "sub", "mul", "div", "pow")


def _build_unary(op, a):
    return ex.neg(a) if op == "neg" else ex.func(op, a)


def _build_binary(op, a, b):
    if op == "pow":
        return ex.power(a, b)
    return {"add": ex.add, "sub": ex.sub, "mul": ex.mul, "div": ex.div}[op](a, b)


def random_ast(rng: np.random.Generator, depth: int = 6) -> ex.Expr:
    """Random expression tree of depth at most ``depth`` over ``x, y, z``."""
    if depth <= 1 or rng.random() < 0.25:
        if rng.random() < 0.6:
            return ex.Var(("x", "y", "z")[rng.integers(3)])
        return ex.Const(round(float(rng.uniform(-3, 3)), 3))
    if rng.random() < 0.35:
        return _build_unary(UNARY[rng.integers(len(UNARY))], random_ast(rng, depth - 1))
    op = BINARY[rng.integers(len(BINARY))]
    if op == "pow":
        # small integer or simple fractional exponents keep values tame
        exp_ = ex.Const(float(rng.choice([2, 3, -1, 0.5])))
        return ex.power(random_ast(rng, depth - 1), exp_)
    return _build_binary(op, random_ast(rng, depth - 1), random_ast(rng, depth - 1))


leaves = st.one_of(
    st.sampled_from([ex.X, ex.Y, ex.Z]),
    st.floats(-3, 3, allow_nan=False).map(lambda v: ex.Const(round(v, 4))),
)


def _extend(children):
    unary = st.tuples(st.sampled_from(UNARY), children).map(lambda a: _build_unary(*a))
    binary = st.tuples(st.sampled_from(BINARY[:4]), children, children).map(lambda a: _build_binary(*a))
    powers = st.tuples(children, st.sampled_from([2.0, 3.0, -1.0, 0.5])).map(
        lambda a: ex.power(a[0], ex.Const(a[1])))
    return st.one_of(unary, binary, powers)


expressions = st.recursive(leaves, _extend, max_leaves=12)
points = st.tuples(*[st.floats(0.3, 1.7, allow_nan=False)] * 3).map(np.array)


def safe_eval(e: ex.Expr, p) -> float | None:
    try:
        return ex.evaluate(e, p)
    except EvalDomainError:
        return None


def central_difference(e: ex.Expr, p, axis: int, h: float = 1e-6) -> float | None:
    q1, q2 = np.array(p, float), np.array(p, float)
    q1[axis] += h
    q2[axis] -= h
    a, b = safe_eval(e, q1), safe_eval(e, q2)
    if a is None or b is None:
        return None
    return (a - b) / (2 * h)


def random_polynomial(rng: np.random.Generator, degree: int = 2) -> ex.Expr:
    """Dense random polynomial in ``x, y, z`` of total degree at most ``degree``."""
    terms = []
    for powers in itertools.product(range(degree + 1), repeat=3):
        if sum(powers) > degree:
            continue
        mono = ex.Const(round(float(rng.uniform(-2, 2)), 3))
        for var, k in zip((ex.X, ex.Y, ex.Z), powers):
            for _ in range(k):
                mono = mono * var
        terms.append(mono)
    out = terms[0]
    for t in terms[1:]:
        out = out + t
    return out


def random_polynomial_field(rng: np.random.Generator, degree: int = 2) -> VectorField3:
    return VectorField3(tuple(random_polynomial(rng, degree) for _ in range(3)))
