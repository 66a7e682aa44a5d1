"""
Frenet-Serret frames of vector fields
-------------------------------------

The frame of a field ``v`` is built symbolically::

    t = v / |v|,   n = -t x (curl t) / |t x curl t|,   b = t x n

so that the helicity densities, which need derivatives of ``n`` and ``b``,
are exact. Numeric normalisation happens only when a sample is taken.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import expr as ex
from .errors import CurlEigenvectorError, EquilibriumError, EvalDomainError, FrameError
from .exterior import (DifferentialForm, VectorField3, curl, ext_d, flat, wedge)
from .expr import Expr

EQ_RTOL = 1e-10
DEG_RTOL = 1e-10
CLASSIFY_TOL = 1e-8


@dataclass(frozen=True)
class FrameSample:
    point: np.ndarray
    t: np.ndarray
    n: np.ndarray
    b: np.ndarray
    speed: float

    def orthonormality_residual(self) -> float:
        """Largest deviation from a right-handed orthonormal triad."""
        t, n, b = self.t, self.n, self.b
        res = [abs(np.linalg.norm(t) - 1), abs(np.linalg.norm(n) - 1), abs(np.linalg.norm(b) - 1),
               abs(t @ n), abs(t @ b), abs(n @ b)]
        res.extend(np.abs(np.cross(t, n) - b))
        return float(max(res))

    def to_json(self) -> dict:
        return {"point": self.point.tolist(), "t": self.t.tolist(), "n": self.n.tolist(),
                "b": self.b.tolist(), "speed": self.speed}


@dataclass(frozen=True)
class HelicitySample:
    point: np.ndarray
    H_n: float
    H_nb: float
    H_b: float

    @property
    def values(self) -> np.ndarray:
        return np.array([self.H_n, self.H_nb, self.H_b])

    def to_json(self) -> dict:
        return {"point": self.point.tolist(), "H_n": self.H_n, "H_nb": self.H_nb, "H_b": self.H_b}


class Verdict(str, enum.Enum):
    GLOBAL_CANDIDATE = "GLOBAL_CANDIDATE"
    LOCAL_ONLY = "LOCAL_ONLY"
    FRAME_DEGENERATE = "FRAME_DEGENERATE"


@dataclass
class StructureClass:
    verdict: Verdict
    tol: float
    n_samples: int
    max_helicity: float
    degenerate_points: list = field(default_factory=list)
    helicities: list = field(default_factory=list)

    @staticmethod
    def decide(max_helicity: float, n_degenerate: int, n_samples: int, tol: float) -> Verdict:
        if n_samples == 0 or n_degenerate > 0.5 * n_samples:
            return Verdict.FRAME_DEGENERATE
        if max_helicity < tol:
            return Verdict.GLOBAL_CANDIDATE
        return Verdict.LOCAL_ONLY

    def reproduce(self) -> Verdict:
        """Recompute the verdict from the recorded evidence alone."""
        return self.decide(self.max_helicity, len(self.degenerate_points), self.n_samples, self.tol)

    def to_json(self) -> dict:
        return {"verdict": self.verdict.value, "tol": self.tol, "n_samples": self.n_samples,
                "max_helicity": self.max_helicity,
                "degenerate_points": [list(map(float, p)) for p in self.degenerate_points],
                "helicities": [h.to_json() for h in self.helicities]}


class FrenetFrame:
    """Symbolic Frenet-Serret frame of ``v`` with point samplers."""

    def __init__(self, v: VectorField3, eq_rtol: float = EQ_RTOL, deg_rtol: float = DEG_RTOL):
        self.v = v
        self.eq_rtol = eq_rtol
        self.deg_rtol = deg_rtol

    @cached_property
    def tangent(self) -> VectorField3:
        return self.v.normalized()

    @cached_property
    def curl_tangent(self) -> VectorField3:
        return curl(self.tangent)

    @cached_property
    def normal(self) -> VectorField3:
        c = self.tangent.cross(self.curl_tangent)
        return c.scale(ex.Const(-1.0) / c.norm())

    @cached_property
    def binormal(self) -> VectorField3:
        return self.tangent.cross(self.normal)

    # one-forms tau, eta, beta
    @cached_property
    def tau(self) -> DifferentialForm:
        return flat(self.tangent)

    @cached_property
    def eta(self) -> DifferentialForm:
        return flat(self.normal)

    @cached_property
    def beta(self) -> DifferentialForm:
        return flat(self.binormal)

    @cached_property
    def helicity_exprs(self) -> tuple[Expr, Expr, Expr]:
        n, b = self.normal, self.binormal
        cn, cb = curl(n), curl(b)
        return n.dot(cn), n.dot(cb) + b.dot(cn), b.dot(cb)

    @cached_property
    def three_forms(self) -> tuple[DifferentialForm, DifferentialForm, DifferentialForm]:
        """``(eta^d eta, eta^d beta + beta^d eta, beta^d beta)``."""
        eta, beta = self.eta, self.beta
        deta, dbeta = ext_d(eta), ext_d(beta)
        return (wedge(eta, deta), wedge(eta, dbeta) + wedge(beta, deta), wedge(beta, dbeta))

    @cached_property
    def _frame_fn(self):
        return ex.lambdify(self.v.components + self.curl_tangent.components)

    @cached_property
    def _helicity_fn(self):
        return ex.lambdify(self.helicity_exprs)

    @cached_property
    def _forms_fn(self):
        return ex.lambdify(tuple(w.components[0] for w in self.three_forms))

    def _checked_eval(self, fn, exprs, point):
        try:
            return np.array(ex.evaluate_compiled(fn, exprs, point))
        except EvalDomainError as err:
            raise FrameError(f"frame undefined: {err}", point) from err

    def frame_at(self, point: Sequence[float]) -> FrameSample:
        """Orthonormal triad at ``point``.

        Raises
        ------
        EquilibriumError
            ``|v| <= 1e-10 (1 + |x|)``.
        CurlEigenvectorError
            ``curl t`` is parallel to ``t`` (includes ``curl t = 0``).
        """
        p = np.asarray(point, dtype=float)
        try:
            vals = np.array(ex.evaluate_compiled(
                self._frame_fn, self.v.components + self.curl_tangent.components, p))
        except EvalDomainError as err:
            vv = self.v.evaluate(p)
            if np.linalg.norm(vv) <= self.eq_rtol * (1 + np.linalg.norm(p)):
                raise EquilibriumError(f"equilibrium point, |v| = {np.linalg.norm(vv):.3g}", p) from err
            raise FrameError(f"frame undefined: {err}", p) from err
        v, ct = vals[:3], vals[3:]
        speed = float(np.linalg.norm(v))
        if speed <= self.eq_rtol * (1 + np.linalg.norm(p)):
            raise EquilibriumError(f"equilibrium point, |v| = {speed:.3g}", p)
        t = v / speed
        c = np.cross(t, ct)
        cn = float(np.linalg.norm(c))
        if cn <= self.deg_rtol * float(np.linalg.norm(ct)):
            raise CurlEigenvectorError("curl of the unit tangent is parallel to the tangent", p)
        n = -c / cn
        b = np.cross(t, n)
        return FrameSample(p, t, n, b, speed)

    def helicities_at(self, point: Sequence[float]) -> HelicitySample:
        """``H_n = n.curl n``, ``H_nb = n.curl b + b.curl n``, ``H_b = b.curl b``."""
        s = self.frame_at(point)
        h = self._checked_eval(self._helicity_fn, self.helicity_exprs, s.point)
        return HelicitySample(s.point, float(h[0]), float(h[1]), float(h[2]))

    def tangent_and_helicities(self, point: Sequence[float]) -> tuple[FrameSample, np.ndarray]:
        s = self.frame_at(point)
        h = self._checked_eval(self._helicity_fn, self.helicity_exprs, s.point)
        return s, h

    def three_form_coefficients_at(self, point: Sequence[float]) -> np.ndarray:
        """Volume coefficients of ``(Omega_n, Omega_nb, Omega_b)``."""
        s = self.frame_at(point)
        exprs = tuple(w.components[0] for w in self.three_forms)
        return self._checked_eval(self._forms_fn, exprs, s.point)

    def directional_derivatives_at(self, f: Expr | str, point: Sequence[float]) -> tuple[float, float, float]:
        """``(t.grad f, n.grad f, b.grad f)``."""
        s = self.frame_at(point)
        g = np.array([ex.evaluate(d, s.point) for d in ex.gradient_exprs(ex.as_expr(f))])
        return float(s.t @ g), float(s.n @ g), float(s.b @ g)


def frame_at(v: VectorField3, point: Sequence[float]) -> FrameSample:
    return FrenetFrame(v).frame_at(point)


def helicities_at(v: VectorField3, point: Sequence[float]) -> HelicitySample:
    return FrenetFrame(v).helicities_at(point)


def directional_derivatives_at(v: VectorField3, f: Expr | str, point) -> tuple[float, float, float]:
    return FrenetFrame(v).directional_derivatives_at(f, point)


def classify_structure(v: VectorField3 | FrenetFrame, sample_points: Iterable[Sequence[float]],
                       tol: float = CLASSIFY_TOL) -> StructureClass:
    """Global/local verdict from sampled helicity densities.

    Frame failures are recorded as degenerate points; more than half of the
    samples failing gives ``FRAME_DEGENERATE``.
    """
    frame = v if isinstance(v, FrenetFrame) else FrenetFrame(v)
    pts = [np.asarray(p, dtype=float) for p in sample_points]
    degenerate, hels = [], []
    for p in pts:
        try:
            hels.append(frame.helicities_at(p))
        except FrameError:
            degenerate.append(p)
    max_h = max((float(np.max(np.abs(h.values))) for h in hels), default=0.0)
    verdict = StructureClass.decide(max_h, len(degenerate), len(pts), tol)
    return StructureClass(verdict, tol, len(pts), max_h, degenerate, hels)
