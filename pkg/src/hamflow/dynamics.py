"""
Flows, drift observables and line integrals
-------------------------------------------

``integrate_ode`` advances ``dx/dt = V(x, t)`` together with the arclength
``ds/dt = |V|`` by classical RK4 (fixed step) or Runge-Kutta-Fehlberg 4(5)
(adaptive). ``line_integral`` integrates a 1-form along polylines,
trajectories or parametric loops with composite Gauss-Legendre quadrature.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from . import expr as ex
from .errors import EvalDomainError, SingularityHit, SingularityOnPath, StepFailure
from .exterior import DifferentialForm, VectorField3
from .expr import Expr

RHS = Callable[[float, np.ndarray], np.ndarray]


@dataclass
class Trajectory:
    """Time samples ``t``, states ``x`` (N x 3) and accumulated arclength ``s``."""

    t: np.ndarray
    x: np.ndarray
    s: np.ndarray
    method: str = "rk4"
    step: float | None = None
    atol: float | None = None
    rtol: float | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def endpoint(self) -> np.ndarray:
        return self.x[-1]

    def samples(self):
        return [(float(t), x.copy(), float(s)) for t, x, s in zip(self.t, self.x, self.s)]

    def to_csv(self, path) -> None:
        """Write columns ``t, x, y, z, s``."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "z", "s"])
            for t, x, s in zip(self.t, self.x, self.s):
                w.writerow([repr(float(t)), *(repr(float(c)) for c in x), repr(float(s))])

    @classmethod
    def from_csv(cls, path) -> Trajectory:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1:4], data[:, 4], method="csv")


def _as_rhs(v: Union[VectorField3, RHS]) -> RHS:
    if isinstance(v, VectorField3):
        def rhs(t, x):
            try:
                return v.evaluate(x, t)
            except EvalDomainError as err:
                raise SingularityHit(f"vector field singular at t={t:.6g}: {err}") from err
        return rhs
    return v


def _checked(f: RHS, t: float, x: np.ndarray) -> np.ndarray:
    out = np.asarray(f(t, x), dtype=float)
    if not np.all(np.isfinite(out)):
        raise SingularityHit(f"non-finite vector field at t={t:.6g}, x={x.tolist()}")
    return out


def _aug(f: RHS):
    def g(t, y):
        dx = _checked(f, t, y[:3])
        return np.append(dx, np.linalg.norm(dx))
    return g


def _rk4(g, t0, t1, y0, h):
    n = max(1, int(math.ceil(abs(t1 - t0) / h - 1e-12)))
    dt = (t1 - t0) / n
    ts = t0 + dt * np.arange(n + 1)
    ts[-1] = t1
    ys = np.empty((n + 1, y0.size))
    ys[0] = y = y0
    for i in range(n):
        t = ts[i]
        k1 = g(t, y)
        k2 = g(t + dt / 2, y + dt / 2 * k1)
        k3 = g(t + dt / 2, y + dt / 2 * k2)
        k4 = g(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[i + 1] = y
    return ts, ys, dt


# Fehlberg tableau
_C = np.array([0, 1 / 4, 3 / 8, 12 / 13, 1, 1 / 2])
_A = [[],
      [1 / 4],
      [3 / 32, 9 / 32],
      [1932 / 2197, -7200 / 2197, 7296 / 2197],
      [439 / 216, -8, 3680 / 513, -845 / 4104],
      [-8 / 27, 2, -3544 / 2565, 1859 / 4104, -11 / 40]]
_B4 = np.array([25 / 216, 0, 1408 / 2565, 2197 / 4104, -1 / 5, 0])
_B5 = np.array([16 / 135, 0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])


def _rkf45(g, t0, t1, y0, atol, rtol, h0=None):
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    h = min(h0 or 1e-3 * max(span, 1e-12), span) if span > 0 else 0.0
    t, y = t0, y0.copy()
    ts, ys = [t], [y.copy()]
    while direction * (t1 - t) > 0:
        h = min(h, abs(t1 - t))
        if h <= 1e-14 * max(1.0, abs(t)):
            raise StepFailure(f"step size underflow at t={t:.6g}")
        hs = direction * h
        k = []
        for i in range(6):
            yi = y + hs * sum(a * kj for a, kj in zip(_A[i], k)) if i else y
            k.append(g(t + _C[i] * hs, yi))
        k = np.array(k)
        y4 = y + hs * (_B4 @ k)
        y5 = y + hs * (_B5 @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y4))
        err = float(np.max(np.abs(y5 - y4) / scale))
        if err <= 1.0:
            t = t + hs
            y = y4
            ts.append(t)
            ys.append(y.copy())
        factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h *= factor
    return np.array(ts), np.array(ys)


def integrate_ode(v: Union[VectorField3, RHS], x0: Sequence[float], t_span: tuple[float, float],
                  method: str = "rk4", h: float = 1e-3, atol: float = 1e-10,
                  rtol: float = 1e-10) -> Trajectory:
    """Integrate ``dx/dt = V(x, t)`` and accumulate arclength.

    ``v`` is a :class:`VectorField3` (its components may involve ``t``) or a
    callable ``f(t, x)``.

    Raises
    ------
    SingularityHit
        The field is singular or non-finite along the path.
    StepFailure
        The adaptive controller underflowed.
    """
    g = _aug(_as_rhs(v))
    y0 = np.append(np.asarray(x0, dtype=float), 0.0)
    t0, t1 = float(t_span[0]), float(t_span[1])
    if method == "rk4":
        ts, ys, dt = _rk4(g, t0, t1, y0, h)
        return Trajectory(ts, ys[:, :3], ys[:, 3], "rk4", step=abs(dt))
    if method == "rkf45":
        ts, ys = _rkf45(g, t0, t1, y0, atol, rtol)
        return Trajectory(ts, ys[:, :3], ys[:, 3], "rkf45", atol=atol, rtol=rtol)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class Drift:
    max_abs: float
    relative: float
    initial: float


def observe_drift(traj: Trajectory, f: Expr | str) -> Drift:
    """Largest change of ``f`` along ``traj`` (absolute and relative to ``|f0|``)."""
    f = ex.as_expr(f)
    vals = ex.evaluate_many(f, traj.x, traj.t)
    if np.any(np.isnan(vals)):
        raise SingularityHit("observable is singular along the trajectory")
    f0 = float(vals[0])
    max_abs = float(np.max(np.abs(vals - f0)))
    denom = abs(f0) if f0 != 0 else 1.0
    return Drift(max_abs, max_abs / denom, f0)


# ---------------------------------------------------------------------------
# paths and line integrals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Polyline:
    vertices: np.ndarray
    closed: bool = False

    def segments(self):
        v = np.asarray(self.vertices, dtype=float)
        pairs = list(zip(v[:-1], v[1:]))
        if self.closed:
            pairs.append((v[-1], v[0]))
        return pairs


@dataclass(frozen=True)
class ParametricLoop:
    """Curve ``p(t)`` for ``t`` in ``[t0, t1]``; components are expressions in ``t``."""

    components: tuple[Expr, Expr, Expr]
    t0: float = 0.0
    t1: float = 2 * math.pi
    pieces: int = 16

    @classmethod
    def parse(cls, texts: Sequence[str], t0: float = 0.0, t1: float = 2 * math.pi,
              pieces: int = 16) -> ParametricLoop:
        return cls(tuple(ex.parse(s) for s in texts), t0, t1, pieces)


def regular_polygon(center: Sequence[float], e1: Sequence[float], e2: Sequence[float],
                    radius: float, sides: int) -> Polyline:
    """Closed polygon with vertices ``center + radius (cos a e1 + sin a e2)``."""
    c, e1, e2 = (np.asarray(a, dtype=float) for a in (center, e1, e2))
    ang = 2 * math.pi * np.arange(sides) / sides
    verts = c + radius * (np.cos(ang)[:, None] * e1 + np.sin(ang)[:, None] * e2)
    return Polyline(verts, closed=True)


def square_loop(center: Sequence[float], e1: Sequence[float], e2: Sequence[float],
                side: float) -> Polyline:
    """Counter-clockwise square (w.r.t. ``e1, e2``) of the given side."""
    c, e1, e2 = (np.asarray(a, dtype=float) for a in (center, e1, e2))
    r = side / 2
    verts = [c + r * (-e1 - e2), c + r * (e1 - e2), c + r * (e1 + e2), c + r * (-e1 + e2)]
    return Polyline(np.array(verts), closed=True)


def loop_from_json(doc: dict) -> Polyline | ParametricLoop:
    """Build a loop from ``{"polygon": {...}}``, ``{"square": {...}}``, ``{"polyline": [...]}``
    or ``{"parametric": {"components": [...], "t0": ..., "t1": ...}}``."""
    if "polyline" in doc:
        return Polyline(np.asarray(doc["polyline"], dtype=float), closed=bool(doc.get("closed", True)))
    if "polygon" in doc:
        d = doc["polygon"]
        return regular_polygon(d["center"], d["e1"], d["e2"], d["radius"], d["sides"])
    if "square" in doc:
        d = doc["square"]
        return square_loop(d["center"], d["e1"], d["e2"], d["side"])
    if "parametric" in doc:
        d = doc["parametric"]
        return ParametricLoop.parse(d["components"], d.get("t0", 0.0), d.get("t1", 2 * math.pi),
                                    d.get("pieces", 16))
    raise ValueError(f"unknown loop spec keys {sorted(doc)}")


def _nodes(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


def line_integral(w: DifferentialForm, path, nodes: int = 32) -> float:
    """Integral of the 1-form ``w`` along ``path``.

    ``path`` may be a :class:`Polyline`, a :class:`Trajectory` (treated as
    the polyline through its samples) or a :class:`ParametricLoop`.
    Each segment uses ``nodes``-point Gauss-Legendre quadrature.
    """
    if w.degree != 1:
        raise ValueError("line integrals need a 1-form")
    tau, wts = _nodes(nodes)
    if isinstance(path, Trajectory):
        path = Polyline(path.x, closed=False)
    if isinstance(path, Polyline):
        segs = path.segments()
        if not segs:
            return 0.0
        a = np.array([s[0] for s in segs])
        d = np.array([s[1] - s[0] for s in segs])
        pts = (a[:, None, :] + tau[None, :, None] * d[:, None, :]).reshape(-1, 3)
        vals = w.evaluate_many(pts).reshape(len(segs), nodes, 3)
        if np.any(np.isnan(vals)):
            raise SingularityOnPath("form is singular on the path")
        return float(np.einsum("snk,sk,n->", vals, d, wts))
    if isinstance(path, ParametricLoop):
        comps = path.components
        dcomps = tuple(ex.differentiate(c, "t") for c in comps)
        edges = np.linspace(path.t0, path.t1, path.pieces + 1)
        ts = (edges[:-1, None] + tau[None, :] * np.diff(edges)[:, None]).ravel()
        jac = np.repeat(np.diff(edges), nodes)
        ww = np.tile(wts, path.pieces) * jac
        zeros = np.zeros((ts.size, 3))
        pos = VectorField3(comps).evaluate_many(zeros, ts)
        vel = VectorField3(dcomps).evaluate_many(zeros, ts)
        vals = w.evaluate_many(pos)
        if np.any(np.isnan(vals)) or np.any(np.isnan(pos)) or np.any(np.isnan(vel)):
            raise SingularityOnPath("form or curve is singular on the path")
        return float(np.sum(np.einsum("nk,nk->n", vals, vel) * ww))
    raise TypeError(f"unsupported path type {type(path).__name__}")
