"""
Vector and exterior calculus on R^3
-----------------------------------

Vector fields, differential forms and bivectors whose components are
:class:`~hamflow.expr.Expr` trees, together with grad/curl/div, wedge,
exterior derivative, interior product, Lie bracket and Lie derivative.

Canonical component order:

* 1-forms: ``dx, dy, dz``
* 2-forms: ``dy^dz, dz^dx, dx^dy``
* 3-forms: ``dx^dy^dz``

With this order a 1-form and a 2-form are both stored like a Cartesian
vector, so ``wedge`` of two 1-forms is the cross product and ``ext_d`` of a
1-form is the curl.

Evaluating a 2-form on a pair of vectors uses the determinant convention,
``(a^b)(U, V) = a(U) b(V) - a(V) b(U)``; under it the coordinate ``ext_d``
satisfies ``dw(U, V) = U(w(V)) - V(w(U)) - w([U, V])``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from . import expr as ex
from .errors import DegreeError
from .expr import Expr

Scalar = Union[Expr, float, int, str]

_XYZ = ("x", "y", "z")


def _e(value: Scalar) -> Expr:
    return ex.as_expr(value)


def _dot(a: Sequence[Expr], b: Sequence[Expr]) -> Expr:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def _cross(a: Sequence[Expr], b: Sequence[Expr]) -> tuple[Expr, Expr, Expr]:
    return (a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0])


class _Compiled:
    """Lazily compiled evaluators shared by fields and forms."""

    components: tuple[Expr, ...]

    @cached_property
    def _fn(self):
        return ex.lambdify(self.components)

    @cached_property
    def _fn_np(self):
        return ex.lambdify(self.components, backend="numpy")

    def evaluate(self, point: Sequence[float], time: float = 0.0) -> np.ndarray:
        """Components at one point; raises ``EvalDomainError`` on singularities."""
        if not self.components:
            return np.zeros(0)
        return np.array(ex.evaluate_compiled(self._fn, self.components, point, time))

    __call__ = evaluate

    def evaluate_many(self, points, times=0.0) -> np.ndarray:
        """Components on an ``(N, 3)`` array of points, ``nan`` where singular."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        n = pts.shape[0]
        if not self.components:
            return np.zeros((n, 0))
        tt = np.broadcast_to(np.asarray(times, dtype=float), (n,))
        with np.errstate(all="ignore"):
            cols = self._fn_np(pts[:, 0], pts[:, 1], pts[:, 2], tt)
        out = np.column_stack([np.broadcast_to(np.asarray(c, dtype=float), (n,)) for c in cols])
        out[~np.isfinite(out)] = np.nan
        return out


@dataclass(frozen=True, eq=False)
class VectorField3(_Compiled):
    """Cartesian vector field with symbolic components."""

    components: tuple[Expr, Expr, Expr]
    name: str = ""

    def __post_init__(self):
        comps = tuple(_e(c) for c in self.components)
        if len(comps) != 3:
            raise ValueError("a VectorField3 needs exactly three components")
        object.__setattr__(self, "components", comps)

    @classmethod
    def parse(cls, texts: Sequence[str], name: str = "") -> VectorField3:
        return cls(tuple(ex.parse(s) for s in texts), name)

    @classmethod
    def constant(cls, values: Sequence[float], name: str = "") -> VectorField3:
        return cls(tuple(ex.Const(v) for v in values), name)

    def __getitem__(self, i: int) -> Expr:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __add__(self, other: VectorField3) -> VectorField3:
        return VectorField3(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: VectorField3) -> VectorField3:
        return VectorField3(tuple(a - b for a, b in zip(self, other)))

    def __neg__(self) -> VectorField3:
        return VectorField3(tuple(-a for a in self))

    def scale(self, f: Scalar) -> VectorField3:
        f = _e(f)
        return VectorField3(tuple(f * a for a in self))

    def __mul__(self, f: Scalar) -> VectorField3:
        return self.scale(f)

    __rmul__ = __mul__

    def dot(self, other: VectorField3) -> Expr:
        return _dot(self.components, other.components)

    def cross(self, other: VectorField3) -> VectorField3:
        return VectorField3(_cross(self.components, other.components))

    def norm(self) -> Expr:
        return ex.sqrt(self.dot(self))

    def normalized(self) -> VectorField3:
        return self.scale(ex.ONE / self.norm())

    def apply(self, f: Expr) -> Expr:
        """Directional derivative ``V(f) = V . grad f``."""
        return _dot(self.components, ex.gradient_exprs(f))

    def to_strings(self) -> list[str]:
        return [ex.to_string(c) for c in self.components]

    def __repr__(self) -> str:
        label = f"{self.name}: " if self.name else ""
        return f"VectorField3({label}{self.to_strings()})"


@dataclass(frozen=True, eq=False)
class DifferentialForm(_Compiled):
    """Degree-k form on R^3 with ``comb(3, k)`` components."""

    degree: int
    components: tuple[Expr, ...]

    def __post_init__(self):
        comps = tuple(_e(c) for c in self.components)
        if self.degree < 0:
            raise DegreeError("negative degree")
        if len(comps) != math.comb(3, self.degree):
            raise ValueError(
                f"degree-{self.degree} form needs {math.comb(3, self.degree)} components")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zero(cls, degree: int) -> DifferentialForm:
        return cls(degree, (ex.ZERO,) * math.comb(3, degree))

    @classmethod
    def scalar(cls, f: Scalar) -> DifferentialForm:
        return cls(0, (_e(f),))

    @classmethod
    def one_form(cls, a: Scalar, b: Scalar, c: Scalar) -> DifferentialForm:
        return cls(1, (a, b, c))

    @classmethod
    def two_form(cls, yz: Scalar, zx: Scalar, xy: Scalar) -> DifferentialForm:
        return cls(2, (yz, zx, xy))

    @classmethod
    def three_form(cls, f: Scalar) -> DifferentialForm:
        return cls(3, (f,))

    @property
    def as_vector(self) -> tuple[Expr, Expr, Expr]:
        if self.degree not in (1, 2):
            raise DegreeError("only 1- and 2-forms have vector layout")
        return self.components

    @property
    def coefficient(self) -> Expr:
        """The single component of a 0- or 3-form."""
        if self.degree not in (0, 3):
            raise DegreeError("coefficient is defined for degrees 0 and 3")
        return self.components[0]

    def _check_same(self, other: DifferentialForm):
        if other.degree != self.degree:
            raise DegreeError(f"degree mismatch {self.degree} vs {other.degree}")

    def __add__(self, other: DifferentialForm) -> DifferentialForm:
        self._check_same(other)
        return DifferentialForm(self.degree, tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: DifferentialForm) -> DifferentialForm:
        self._check_same(other)
        return DifferentialForm(self.degree, tuple(a - b for a, b in zip(self.components, other.components)))

    def __neg__(self) -> DifferentialForm:
        return DifferentialForm(self.degree, tuple(-a for a in self.components))

    def scale(self, f: Scalar) -> DifferentialForm:
        f = _e(f)
        return DifferentialForm(self.degree, tuple(f * a for a in self.components))

    def __mul__(self, f: Scalar) -> DifferentialForm:
        return self.scale(f)

    __rmul__ = __mul__

    def __xor__(self, other: DifferentialForm) -> DifferentialForm:
        return wedge(self, other)

    def pair(self, point: Sequence[float], *vectors, time: float = 0.0) -> float:
        """Evaluate the form at ``point`` on ``degree`` numeric vectors."""
        if len(vectors) != self.degree:
            raise DegreeError(f"need {self.degree} vectors, got {len(vectors)}")
        c = self.evaluate(point, time)
        vs = [np.asarray(v, dtype=float) for v in vectors]
        if self.degree == 0:
            return float(c[0])
        if self.degree == 1:
            return float(c @ vs[0])
        if self.degree == 2:
            return float(c @ np.cross(vs[0], vs[1]))
        if self.degree == 3:
            return float(c[0] * np.linalg.det(np.array(vs)))
        return 0.0

    def to_json(self) -> dict:
        return {"degree": self.degree, "components": [ex.to_string(c) for c in self.components]}

    @classmethod
    def from_json(cls, doc: dict | str) -> DifferentialForm:
        if isinstance(doc, str):
            doc = json.loads(doc)
        return cls(int(doc["degree"]), tuple(ex.parse(s) for s in doc["components"]))

    def __repr__(self) -> str:
        return f"DifferentialForm({self.degree}, {[ex.to_string(c) for c in self.components]})"


@dataclass(frozen=True, eq=False)
class Bivector3(_Compiled):
    """Skew bivector stored as ``(W^23, W^31, W^12)``."""

    components: tuple[Expr, Expr, Expr]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(_e(c) for c in self.components))


@dataclass(frozen=True, eq=False)
class ExtendedField(_Compiled):
    """Vector field on time-extended space ``I x R^3``.

    ``components`` is ``(dt, dx, dy, dz)``; the spatial part may depend on
    ``t``.
    """

    components: tuple[Expr, Expr, Expr, Expr]
    name: str = ""

    def __post_init__(self):
        comps = tuple(_e(c) for c in self.components)
        if len(comps) != 4:
            raise ValueError("an ExtendedField needs (t, x, y, z) components")
        object.__setattr__(self, "components", comps)

    @classmethod
    def lift(cls, v: VectorField3, dt: Scalar = 0.0, name: str = "") -> ExtendedField:
        return cls((_e(dt),) + v.components, name or v.name)

    @property
    def spatial(self) -> VectorField3:
        return VectorField3(self.components[1:], self.name)

    def apply(self, f: Expr) -> Expr:
        ct, cx, cy, cz = self.components
        return (ct * ex.differentiate(f, "t") + cx * ex.differentiate(f, "x")
                + cy * ex.differentiate(f, "y") + cz * ex.differentiate(f, "z"))

    def __add__(self, other: ExtendedField) -> ExtendedField:
        return ExtendedField(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: ExtendedField) -> ExtendedField:
        return ExtendedField(tuple(a - b for a, b in zip(self.components, other.components)))

    def __neg__(self) -> ExtendedField:
        return ExtendedField(tuple(-a for a in self.components))

    def scale(self, f: Scalar) -> ExtendedField:
        f = _e(f)
        return ExtendedField(tuple(f * a for a in self.components))

    def __mul__(self, f: Scalar) -> ExtendedField:
        return self.scale(f)

    __rmul__ = __mul__

    def evaluate_at(self, point: Sequence[float], time: float) -> np.ndarray:
        return self.evaluate(point, time)


# ---------------------------------------------------------------------------
# vector calculus
# ---------------------------------------------------------------------------

def grad(f: Scalar) -> VectorField3:
    return VectorField3(ex.gradient_exprs(_e(f)))


def curl(v: VectorField3) -> VectorField3:
    d = ex.differentiate
    fx, fy, fz = v.components
    return VectorField3((d(fz, "y") - d(fy, "z"),
                         d(fx, "z") - d(fz, "x"),
                         d(fy, "x") - d(fx, "y")))


def div(v: VectorField3) -> Expr:
    d = ex.differentiate
    return d(v[0], "x") + d(v[1], "y") + d(v[2], "z")


# ---------------------------------------------------------------------------
# exterior calculus
# ---------------------------------------------------------------------------

def wedge(a: DifferentialForm, b: DifferentialForm) -> DifferentialForm:
    """Graded-antisymmetric product in the canonical bases."""
    p, q = a.degree, b.degree
    if p + q > 3:
        return DifferentialForm.zero(p + q)
    if p == 0:
        return b.scale(a.components[0])
    if q == 0:
        return a.scale(b.components[0])
    if p == 1 and q == 1:
        return DifferentialForm(2, _cross(a.components, b.components))
    # 1^2 and 2^1 both give the dot product (even degree commutes)
    return DifferentialForm(3, (_dot(a.components, b.components),))


def ext_d(w: DifferentialForm) -> DifferentialForm:
    """Exterior derivative; ``DegreeError`` for 3-forms."""
    if w.degree == 0:
        return DifferentialForm(1, ex.gradient_exprs(w.components[0]))
    if w.degree == 1:
        return DifferentialForm(2, curl(VectorField3(w.components)).components)
    if w.degree == 2:
        return DifferentialForm(3, (div(VectorField3(w.components)),))
    raise DegreeError("exterior derivative of a 3-form is not represented on R^3")


def interior(v: VectorField3, w: DifferentialForm) -> DifferentialForm:
    """Contraction ``i_V w``; ``DegreeError`` for 0-forms."""
    if w.degree == 0:
        raise DegreeError("cannot contract a 0-form")
    if w.degree == 1:
        return DifferentialForm(0, (_dot(v.components, w.components),))
    if w.degree == 2:
        # i_V B = B x V in the (dy^dz, dz^dx, dx^dy) layout
        return DifferentialForm(1, _cross(w.components, v.components))
    if w.degree == 3:
        c = w.components[0]
        return DifferentialForm(2, tuple(c * vi for vi in v.components))
    return DifferentialForm.zero(w.degree - 1)


def bracket(v: VectorField3, w: VectorField3) -> VectorField3:
    """Jacobi-Lie bracket ``(V.grad)W - (W.grad)V``."""
    return VectorField3(tuple(v.apply(wi) - w.apply(vi) for vi, wi in zip(v, w)))


def bracket_extended(a: ExtendedField, b: ExtendedField) -> ExtendedField:
    """Lie bracket on ``I x R^3`` treating ``d/dt`` explicitly."""
    return ExtendedField(tuple(a.apply(bi) - b.apply(ai)
                               for ai, bi in zip(a.components, b.components)))


def lie_derivative(v: VectorField3, w: DifferentialForm) -> DifferentialForm:
    """Cartan's formula ``L_V = i_V d + d i_V``."""
    if w.degree == 0:
        return DifferentialForm(0, (v.apply(w.components[0]),))
    if w.degree == 3:
        return ext_d(interior(v, w))
    return interior(v, ext_d(w)) + ext_d(interior(v, w))


def lie_derivative_field(v: VectorField3, w: VectorField3) -> VectorField3:
    return bracket(v, w)


def flat(v: VectorField3) -> DifferentialForm:
    return DifferentialForm(1, v.components)


def sharp(w: DifferentialForm) -> VectorField3:
    if w.degree != 1:
        raise DegreeError("sharp is defined on 1-forms")
    return VectorField3(w.components)


def volume_form(density: Scalar = 1.0) -> DifferentialForm:
    return DifferentialForm(3, (_e(density),))


def bivec_to_vec(b: Bivector3) -> VectorField3:
    """``J_i = eps_ijk W^jk``, summed over both index orders: ``J_1 = 2 W^23``."""
    return VectorField3(tuple(ex.Const(2.0) * c for c in b.components))


def vec_to_bivec(j: VectorField3) -> Bivector3:
    return Bivector3(tuple(ex.Const(0.5) * c for c in j.components))


def volume_coefficient(w: DifferentialForm) -> Expr:
    if w.degree != 3:
        raise DegreeError("volume coefficient needs a 3-form")
    return w.components[0]
