"""
Poisson vectors in three dimensions
-----------------------------------

Jacobi and Frobenius residuals, the Riccati equation for the ratio
``mu = B/A`` of a Poisson vector ``J = A (n + mu b)``, pencil compatibility,
Hamiltonian residuals, integrating factors, homotopy potentials and Casimir
reconstruction.

The Riccati equation ``mu' = H_n + mu H_nb + mu^2 H_b`` is integrated through
the trace-free projective system::

    p' =  H_nb/2 p + H_n q
    q' = -H_b p    - H_nb/2 q

with ``mu = p/q``; the pair is renormalised to the unit circle after every
step so poles of ``mu`` (``q = 0``) are crossed without trouble.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from . import expr as ex
from .errors import (DegenerateIntegrand, EvalDomainError, FrameError, FrameLost, NotClosed,
                     NotIntegrable, ObstructionGodbillonVey, PencilSingular)
from .exterior import (DifferentialForm, VectorField3, curl, ext_d, flat, interior, sharp,
                       wedge)
from .expr import Expr
from .frenet import FrenetFrame


@dataclass(frozen=True)
class ResidualStats:
    max: float
    mean: float
    samples: int

    @classmethod
    def of(cls, values) -> ResidualStats:
        a = np.abs(np.asarray(values, dtype=float)).ravel()
        if a.size == 0:
            return cls(0.0, 0.0, 0)
        return cls(float(np.max(a)), float(np.mean(a)), int(a.size))

    def to_json(self) -> dict:
        return {"max": self.max, "mean": self.mean, "samples": self.samples}


def _points(points) -> np.ndarray:
    return np.atleast_2d(np.asarray(points, dtype=float))


# ---------------------------------------------------------------------------
# Jacobi identity
# ---------------------------------------------------------------------------

def jacobi_residual(j: VectorField3) -> Expr:
    """``J . curl J``; zero exactly when ``J`` defines a Poisson structure."""
    return j.dot(curl(j))


def frobenius_coefficient(j: VectorField3) -> Expr:
    """Volume coefficient of ``J^dJ`` for the 1-form ``J = flat(J)``."""
    w = flat(j)
    return wedge(w, ext_d(w)).coefficient


def jacobi_stats(j: VectorField3, points) -> ResidualStats:
    r = jacobi_residual(j)
    return ResidualStats.of([ex.evaluate(r, p) for p in _points(points)])


# ---------------------------------------------------------------------------
# Riccati integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExplicitCoefficients:
    """Helicity coefficients given directly as functions of arclength."""

    H_n: Callable[[float], float]
    H_nb: Callable[[float], float]
    H_b: Callable[[float], float]

    @classmethod
    def constant(cls, h_n: float, h_nb: float, h_b: float) -> ExplicitCoefficients:
        return cls(lambda s: h_n, lambda s: h_nb, lambda s: h_b)

    def __call__(self, s: float) -> np.ndarray:
        return np.array([self.H_n(s), self.H_nb(s), self.H_b(s)], dtype=float)


@dataclass
class RiccatiPath:
    """Projective Riccati samples; ``mu = p/q`` and ``J = A (n + mu b)``."""

    s: np.ndarray
    p: np.ndarray
    q: np.ndarray
    x: np.ndarray | None = None
    helicities: np.ndarray | None = None
    gauge_a: float = 1.0
    h: float = 1e-3
    mu0: float = 0.0

    POLE_TOL = 1e-8

    @property
    def mu(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            m = self.p / self.q
        m[np.abs(self.q) <= self.POLE_TOL] = np.nan
        return m

    def mu_at(self, s: float) -> float:
        """``mu`` at arclength ``s`` interpolated projectively between samples."""
        i = int(np.clip(np.searchsorted(self.s, s), 1, len(self.s) - 1))
        w = (s - self.s[i - 1]) / (self.s[i] - self.s[i - 1])
        p = (1 - w) * self.p[i - 1] + w * self.p[i]
        q = (1 - w) * self.q[i - 1] + w * self.q[i]
        return p / q

    def to_csv(self, path) -> None:
        """Columns ``s, x, y, z, p, q, mu`` (position empty in explicit mode)."""
        mu = self.mu
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "x", "y", "z", "p", "q", "mu"])
            for i in range(len(self.s)):
                pos = [repr(float(c)) for c in self.x[i]] if self.x is not None else ["", "", ""]
                w.writerow([repr(float(self.s[i])), *pos, repr(float(self.p[i])),
                            repr(float(self.q[i])), "" if np.isnan(mu[i]) else repr(float(mu[i]))])

    def to_json(self) -> dict:
        return {"s": self.s.tolist(), "p": self.p.tolist(), "q": self.q.tolist(),
                "x": None if self.x is None else self.x.tolist(), "gauge_a": self.gauge_a,
                "h": self.h, "mu0": self.mu0}


def _projective_rhs(hel: np.ndarray, pq: np.ndarray) -> np.ndarray:
    hn, hnb, hb = hel
    p, q = pq
    return np.array([0.5 * hnb * p + hn * q, -hb * p - 0.5 * hnb * q])


def _initial_pq(mu0: float) -> np.ndarray:
    if math.isinf(mu0):
        return np.array([1.0, 0.0])
    v = np.array([mu0, 1.0])
    return v / np.linalg.norm(v)


def riccati_integrate(coeffs: Union[ExplicitCoefficients, VectorField3, FrenetFrame],
                      x0: Sequence[float] | None = None, mu0: float = 0.0,
                      s_max: float = 1.0, h: float = 1e-3) -> RiccatiPath:
    """Integrate ``d mu/ds = H_n + mu H_nb + mu^2 H_b`` by RK4.

    With explicit coefficients only ``(p, q)`` is advanced. With a vector
    field (or its :class:`FrenetFrame`) the position follows the streamline
    ``x' = t(x)`` and the coefficients are the helicity densities there.

    Raises
    ------
    FrameLost
        The frame degenerates along the streamline.
    """
    n = max(1, int(math.ceil(s_max / h - 1e-12)))
    ds = s_max / n
    s = ds * np.arange(n + 1)
    s[-1] = s_max
    pq = np.empty((n + 1, 2))
    pq[0] = _initial_pq(mu0)

    if isinstance(coeffs, ExplicitCoefficients):
        y = pq[0]
        for i in range(n):
            si = s[i]
            k1 = _projective_rhs(coeffs(si), y)
            k2 = _projective_rhs(coeffs(si + ds / 2), y + ds / 2 * k1)
            k3 = _projective_rhs(coeffs(si + ds / 2), y + ds / 2 * k2)
            k4 = _projective_rhs(coeffs(si + ds), y + ds * k3)
            y = y + ds / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            y = y / np.linalg.norm(y)
            pq[i + 1] = y
        return RiccatiPath(s, pq[:, 0], pq[:, 1], h=ds, mu0=mu0)

    if x0 is None:
        raise ValueError("field-driven integration needs a starting point x0")
    frame = coeffs if isinstance(coeffs, FrenetFrame) else FrenetFrame(coeffs)

    def rhs(si, y):
        try:
            sample, hel = frame.tangent_and_helicities(y[:3])
        except FrameError as err:
            raise FrameLost(f"frame lost at s={si:.6g}: {err}", y[:3], si) from err
        return np.concatenate([sample.t, _projective_rhs(hel, y[3:])]), hel

    xs = np.empty((n + 1, 3))
    hels = np.empty((n + 1, 3))
    y = np.concatenate([np.asarray(x0, dtype=float), pq[0]])
    xs[0] = y[:3]
    for i in range(n):
        si = s[i]
        k1, hels[i] = rhs(si, y)
        k2, _ = rhs(si + ds / 2, y + ds / 2 * k1)
        k3, _ = rhs(si + ds / 2, y + ds / 2 * k2)
        k4, _ = rhs(si + ds, y + ds * k3)
        y = y + ds / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        y[3:] /= np.linalg.norm(y[3:])
        xs[i + 1] = y[:3]
        pq[i + 1] = y[3:]
    _, hels[n] = rhs(s[n], y)
    return RiccatiPath(s, pq[:, 0], pq[:, 1], x=xs, helicities=hels, h=ds, mu0=mu0)


def riccati_consistency(path: RiccatiPath) -> np.ndarray:
    """Finite-difference ``mu'`` minus the Riccati right-hand side.

    Central differences on interior samples with ``q`` bounded away from
    zero; entries near poles are ``nan``.
    """
    if path.helicities is None:
        raise ValueError("path carries no helicity samples")
    mu = path.mu
    out = np.full(len(mu), np.nan)
    for i in range(1, len(mu) - 1):
        if np.isnan(mu[i - 1:i + 2]).any() or abs(path.q[i]) < 1e-3:
            continue
        dmu = (mu[i + 1] - mu[i - 1]) / (path.s[i + 1] - path.s[i - 1])
        hn, hnb, hb = path.helicities[i]
        out[i] = dmu - (hn + mu[i] * hnb + mu[i] ** 2 * hb)
    return out


# ---------------------------------------------------------------------------
# Poisson vectors from Riccati paths
# ---------------------------------------------------------------------------

@dataclass
class PoissonVectorReport:
    s: np.ndarray
    points: np.ndarray
    J: np.ndarray
    mu: np.ndarray
    jacobi: np.ndarray
    frobenius: np.ndarray
    b_gauge: np.ndarray

    @property
    def jacobi_stats(self) -> ResidualStats:
        return ResidualStats.of(self.jacobi[~np.isnan(self.jacobi)])

    @property
    def frobenius_stats(self) -> ResidualStats:
        return ResidualStats.of(self.frobenius[~np.isnan(self.frobenius)])

    def routes_agree(self, rtol: float = 1e-9) -> bool:
        ok = ~np.isnan(self.jacobi)
        diff = np.abs(self.jacobi[ok] - self.frobenius[ok])
        return bool(np.all(diff <= rtol * np.maximum(1.0, np.abs(self.jacobi[ok]))))

    def to_json(self) -> dict:
        return {"jacobi": self.jacobi_stats.to_json(), "frobenius": self.frobenius_stats.to_json(),
                "samples": len(self.s), "b_gauge_samples": int(self.b_gauge.sum())}


def _fit_gradient(center: np.ndarray, frame_t, frame_n, frame_b, pts: np.ndarray,
                  vals: np.ndarray) -> np.ndarray:
    """Least-squares quadratic fit of ``mu`` around ``center``; returns grad mu."""
    d = pts - center
    a = d @ frame_t
    n = d @ frame_n
    b = d @ frame_b
    design = np.column_stack([np.ones_like(a), a, n, b, a * a, a * n, a * b, n * n, n * b, b * b])
    coef, *_ = np.linalg.lstsq(design, vals, rcond=None)
    return coef[1] * frame_t + coef[2] * frame_n + coef[3] * frame_b


def poisson_from_riccati(v: Union[VectorField3, FrenetFrame], path: RiccatiPath,
                         delta: float = 1e-3, window: int = 2) -> PoissonVectorReport:
    """Sample ``J = n + mu b`` along a field-driven path and check Jacobi.

    ``mu`` is extended off the path by a quadratic least-squares fit over a
    tube made of the path and two neighbours started ``delta`` away along
    ``n`` and ``b``. The Jacobi residual ``J . curl J`` is then evaluated with
    the fitted gradient (vector-calculus route) and, independently, from the
    three-forms ``Omega_n, Omega_nb, Omega_b`` (forms route).
    """
    if path.x is None:
        raise ValueError("poisson_from_riccati needs a field-driven path")
    frame = v if isinstance(v, FrenetFrame) else FrenetFrame(v)
    s_max = float(path.s[-1])
    f0 = frame.frame_at(path.x[0])
    tubes = [path]
    for offset in (f0.n, f0.b):
        tubes.append(riccati_integrate(frame, path.x[0] + delta * offset, path.mu0, s_max, path.h))

    omega_exprs = tuple(w.coefficient for w in frame.three_forms)
    omega_fn = ex.lambdify(omega_exprs)
    N = len(path.s)
    J = np.zeros((N, 3))
    jac = np.full(N, np.nan)
    frob = np.full(N, np.nan)
    mu_all = path.mu
    b_gauge = np.zeros(N, dtype=bool)
    for k in range(N):
        try:
            sample = frame.frame_at(path.x[k])
        except FrameError as err:
            raise FrameLost(f"frame lost at s={path.s[k]:.6g}", path.x[k], path.s[k]) from err
        if np.isnan(mu_all[k]):
            b_gauge[k] = True
            J[k] = path.q[k] * sample.n + path.p[k] * sample.b
            continue
        mu = mu_all[k]
        J[k] = sample.n + mu * sample.b
        lo = max(0, min(k - window, N - 2 * window - 1))
        hi = min(N, lo + 2 * window + 1)
        pts = np.concatenate([t.x[lo:hi] for t in tubes])
        vals = np.concatenate([t.mu[lo:hi] for t in tubes])
        ok = ~np.isnan(vals)
        if ok.sum() < 10:
            continue
        gmu = _fit_gradient(path.x[k], sample.t, sample.n, sample.b, pts[ok], vals[ok])
        hn, hnb, hb = path.helicities[k]
        twist = J[k] @ np.cross(gmu, sample.b)
        jac[k] = hn + mu * hnb + mu * mu * hb + twist
        om = np.array(ex.evaluate_compiled(omega_fn, omega_exprs, path.x[k]))
        # flat(J)^d(flat J) = Omega_n + mu Omega_nb + mu^2 Omega_b + flat(J)^dmu^beta
        frob[k] = om[0] + mu * om[1] + mu * mu * om[2] + float(
            np.dot(J[k], np.cross(gmu, sample.b)))
    return PoissonVectorReport(path.s.copy(), path.x.copy(), J, mu_all, jac, frob, b_gauge)


def pointwise_angles(j1: np.ndarray, j2: np.ndarray) -> np.ndarray:
    """Angle (radians) between corresponding rows of two sample arrays."""
    c = np.sum(j1 * j2, axis=1) / (np.linalg.norm(j1, axis=1) * np.linalg.norm(j2, axis=1))
    return np.arccos(np.clip(c, -1.0, 1.0))


def pencil_compatibility(j1: VectorField3, j2: VectorField3, c_samples: Sequence[float],
                         points) -> dict[float, ResidualStats]:
    """Jacobi residual of ``J1 + c J2`` for each ``c``."""
    return {float(c): jacobi_stats(j1 + j2.scale(float(c)), points) for c in c_samples}


@dataclass(frozen=True)
class HamiltonianReport:
    residual: ResidualStats
    j_dot_v: ResidualStats
    grad_h_dot_v: ResidualStats

    def to_json(self) -> dict:
        return {"residual": self.residual.to_json(), "J_dot_v": self.j_dot_v.to_json(),
                "gradH_dot_v": self.grad_h_dot_v.to_json()}


def hamiltonian_residual(v: VectorField3, j: VectorField3, h: Expr | str, points) -> HamiltonianReport:
    """Residual ``|V - J x grad H|`` plus the identities ``J.V`` and ``grad H . V``."""
    h = ex.as_expr(h)
    gh = VectorField3(ex.gradient_exprs(h))
    res = v - j.cross(gh)
    pts = _points(points)
    return HamiltonianReport(
        ResidualStats.of([np.linalg.norm(res.evaluate(p)) for p in pts]),
        ResidualStats.of([ex.evaluate(j.dot(v), p) for p in pts]),
        ResidualStats.of([ex.evaluate(gh.dot(v), p) for p in pts]),
    )


# ---------------------------------------------------------------------------
# integrating factors
# ---------------------------------------------------------------------------

@dataclass
class IntegratingFactor:
    """``xi`` with ``d eta = xi ^ eta`` and the gauge ``i_N xi = 0``."""

    eta: DifferentialForm
    xi: DifferentialForm
    transversal: VectorField3
    frobenius: ResidualStats
    residual: ResidualStats
    dxi: ResidualStats
    closed: bool

    @property
    def d_xi(self) -> DifferentialForm:
        return ext_d(self.xi)

    @property
    def godbillon_vey(self) -> DifferentialForm:
        """``xi ^ d xi``."""
        return wedge(self.xi, ext_d(self.xi))


def _all_zero(w: DifferentialForm) -> bool:
    return all(c.is_zero for c in w.components)


def integrating_factor(eta: DifferentialForm, points, transversal: VectorField3 | None = None,
                       tol: float = 1e-9, eps: float = 1e-12) -> IntegratingFactor:
    """Solve ``d eta = xi ^ eta`` with ``xi = -i_N d eta / i_N eta``.

    ``N`` defaults to ``sharp(eta)``, the unique representative orthogonal to
    ``eta``. Any field with ``i_N eta != 0`` may be supplied instead; the
    result then satisfies ``i_N xi = 0``.

    Raises
    ------
    NotIntegrable
        ``eta ^ d eta`` exceeds ``tol`` at a sample point.
    PencilSingular
        ``|i_N eta| < eps`` at a sample point.
    """
    if eta.degree != 1:
        raise ValueError("integrating factors are defined for 1-forms")
    pts = _points(points)
    N = transversal if transversal is not None else sharp(eta)
    deta = ext_d(eta)
    frob_expr = wedge(eta, deta).coefficient
    frob = []
    for p in pts:
        f = ex.evaluate(frob_expr, p)
        scale = max(1.0, float(np.linalg.norm(eta.evaluate(p)) * np.linalg.norm(deta.evaluate(p))))
        if abs(f) > tol * scale:
            raise NotIntegrable(f"eta^d eta = {f:.3g} at {tuple(p)}")
        frob.append(f)
    pairing = interior(N, eta).coefficient
    for p in pts:
        if abs(ex.evaluate(pairing, p)) < eps:
            raise PencilSingular(f"i_N eta vanishes at {tuple(p)}")
    xi = interior(N, deta).scale(ex.Const(-1.0) / pairing)
    resid = deta - wedge(xi, eta)
    res_vals = [np.max(np.abs(resid.evaluate(p))) for p in pts]
    dxi_form = ext_d(xi)
    if _all_zero(dxi_form):
        dxi_vals = np.zeros(len(pts))
    else:
        dxi_vals = np.array([np.max(np.abs(dxi_form.evaluate(p))) for p in pts])
    xi_scale = max([1.0] + [float(np.linalg.norm(xi.evaluate(p))) ** 2 for p in pts])
    closed = bool(np.max(dxi_vals, initial=0.0) <= tol * xi_scale)
    return IntegratingFactor(eta, xi, N, ResidualStats.of(frob), ResidualStats.of(res_vals),
                             ResidualStats.of(dxi_vals), closed)


# ---------------------------------------------------------------------------
# homotopy potentials
# ---------------------------------------------------------------------------

OneFormLike = Union[DifferentialForm, Callable[[np.ndarray], np.ndarray]]


def _form_values(w: OneFormLike, pts: np.ndarray) -> np.ndarray:
    if isinstance(w, DifferentialForm):
        return w.evaluate_many(pts)
    return np.asarray(w(pts), dtype=float).reshape(-1, 3)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(n: int):
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = ((x + 1) / 2, w / 2)
    return _GL_CACHE[n]


def _adaptive_gl(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, tol: float,
                 order: int = 16, depth: int = 0) -> float:
    nodes, weights = _gl(order)
    def rule(lo, hi):
        return (hi - lo) * float(np.dot(weights, f(lo + (hi - lo) * nodes)))
    whole = rule(a, b)
    mid = 0.5 * (a + b)
    halves = rule(a, mid) + rule(mid, b)
    if abs(whole - halves) <= tol * max(1.0, abs(halves)) or depth >= 30:
        return halves
    return (_adaptive_gl(f, a, mid, tol / 2, order, depth + 1)
            + _adaptive_gl(f, mid, b, tol / 2, order, depth + 1))


def finite_difference_gradient(f: Callable[[np.ndarray], float], point, h: float = 1e-3) -> np.ndarray:
    """Fourth-order central differences."""
    p = np.asarray(point, dtype=float)
    g = np.zeros(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        g[i] = (8 * (f(p + e) - f(p - e)) - (f(p + 2 * e) - f(p - 2 * e))) / (12 * h)
    return g


class HomotopyPotential:
    """``H(x) = int_0^1 (x - x0) . w(x0 + s (x - x0)) ds`` evaluated on demand."""

    def __init__(self, form: OneFormLike, base: Sequence[float], tol: float = 1e-10):
        self.form = form
        self.base = np.asarray(base, dtype=float)
        self.tol = tol

    def integrand(self, point, s: np.ndarray) -> np.ndarray:
        d = np.asarray(point, dtype=float) - self.base
        pts = self.base + np.outer(s, d)
        vals = _form_values(self.form, pts)
        if np.any(np.isnan(vals)):
            raise EvalDomainError("one-form singular on the homotopy ray", None, point)
        return vals @ d

    def __call__(self, point) -> float | np.ndarray:
        p = np.asarray(point, dtype=float)
        if p.ndim == 2:
            return np.array([self(q) for q in p])
        return _adaptive_gl(lambda s: self.integrand(p, s), 0.0, 1.0, self.tol)

    def gradient(self, point, h: float = 1e-3) -> np.ndarray:
        return finite_difference_gradient(self, point, h)

    def verify(self, points, h: float = 1e-3) -> ResidualStats:
        """``|grad H - sharp(w)|`` by central differences."""
        pts = _points(points)
        w = _form_values(self.form, pts)
        return ResidualStats.of([np.max(np.abs(self.gradient(p, h) - wi)) for p, wi in zip(pts, w)])


def _numeric_curl(w: OneFormLike, p: np.ndarray, h: float = 1e-5) -> np.ndarray:
    jac = np.zeros((3, 3))
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        jac[:, i] = (_form_values(w, (p + e)[None])[0] - _form_values(w, (p - e)[None])[0]) / (2 * h)
    return np.array([jac[2, 1] - jac[1, 2], jac[0, 2] - jac[2, 0], jac[1, 0] - jac[0, 1]])


def homotopy_potential(w: OneFormLike, base: Sequence[float] = (0.0, 0.0, 0.0), probes=None,
                       tol: float = 1e-10, closed_tol: float = 1e-9,
                       degenerate_tol: float = 1e-12) -> HomotopyPotential:
    """Potential of a closed 1-form by the homotopy (ray) formula.

    ``probes`` are points used for the pre-checks; by default a fixed set
    of points in ``base + [-1, 1]^3``.

    Raises
    ------
    DegenerateIntegrand
        ``(x - x0) . w(x0 + s (x - x0))`` vanishes at every probe and
        quadrature node; the formula yields nothing.
    NotClosed
        ``dw`` does not vanish at the probes.
    """
    base = np.asarray(base, dtype=float)
    if probes is None:
        probes = base + np.random.default_rng(7).uniform(-1, 1, size=(8, 3))
    probes = _points(probes)
    pot = HomotopyPotential(w, base, tol)
    # GL nodes plus s = 1, the probe point itself
    s_nodes = np.append(_gl(8)[0], 1.0)
    at_probes, along_rays = 0.0, 0.0
    degenerate = True
    for p in probes:
        d = p - base
        pts = base + np.outer(s_nodes, d)
        vals = _form_values(w, pts)
        if np.any(np.isnan(vals)):
            continue
        integrand = np.abs(vals @ d)
        at_probes = max(at_probes, float(integrand[-1]))
        along_rays = max(along_rays, float(np.max(integrand)))
        scale = np.linalg.norm(vals, axis=1) * np.linalg.norm(d)
        if np.any(integrand > degenerate_tol * np.maximum(scale, 1e-300)):
            degenerate = False
    if degenerate:
        raise DegenerateIntegrand(
            f"homotopy integrand vanishes identically (max |integrand| = {at_probes:.3g} at probes, "
            f"{along_rays:.3g} along rays)", at_probes, along_rays)
    if isinstance(w, DifferentialForm):
        dw = ext_d(w)
        if not _all_zero(dw):
            for p in probes:
                try:
                    c = dw.evaluate(p)
                    scale = max(1.0, float(np.linalg.norm(w.evaluate(p))))
                except EvalDomainError:
                    continue
                if np.max(np.abs(c)) > closed_tol * scale:
                    raise NotClosed(f"dw = {c.tolist()} at {tuple(p)}")
    else:
        for p in probes:
            c = _numeric_curl(w, p)
            if np.max(np.abs(c)) > max(closed_tol, 1e-6):
                raise NotClosed(f"dw ~ {c.tolist()} at {tuple(p)}")
    return pot


# ---------------------------------------------------------------------------
# Casimir reconstruction
# ---------------------------------------------------------------------------

@dataclass
class CasimirReport:
    casimir: HomotopyPotential
    factor: IntegratingFactor
    phi: HomotopyPotential | None
    conserved: ResidualStats
    lam: ResidualStats
    lam_variation: float
    v: VectorField3 = field(repr=False, default=None)
    points: np.ndarray = field(repr=False, default=None)

    def complementary_vector(self, point) -> np.ndarray:
        """``J2 = grad C x V / |grad C|^2`` so that ``V = J2 x grad C``."""
        g = self.casimir.gradient(point)
        return np.cross(g, self.v.evaluate(point)) / (g @ g)

    def to_json(self) -> dict:
        return {"conserved": self.conserved.to_json(), "lambda": self.lam.to_json(),
                "lambda_relative_variation": self.lam_variation,
                "xi_closed": self.factor.closed, "xi_zero": self.phi is None}


def reconstruct_casimir(v: VectorField3, j: VectorField3, points, base: Sequence[float] = (0.0, 0.0, 0.0),
                        transversal: VectorField3 | None = None, tol: float = 1e-9,
                        probes=None) -> CasimirReport:
    """Casimir ``C`` of ``J``: ``dC = exp(-phi) flat(J)`` with ``d phi = xi``.

    Raises
    ------
    NotIntegrable
        ``J`` fails the Jacobi identity on the sample points.
    ObstructionGodbillonVey
        The integrating factor ``xi`` is not closed; ``dxi`` and
        ``xi ^ dxi`` samples are attached to the exception.
    """
    pts = _points(points)
    jr = jacobi_residual(j)
    for p in pts:
        r = ex.evaluate(jr, p)
        if abs(r) > tol * max(1.0, float(np.linalg.norm(j.evaluate(p))) ** 2):
            raise NotIntegrable(f"J . curl J = {r:.3g} at {tuple(p)}")
    eta = flat(j)
    fac = integrating_factor(eta, pts, transversal, tol)
    if not fac.closed:
        dxi = fac.d_xi
        gv = fac.godbillon_vey
        raise ObstructionGodbillonVey(
            f"integrating factor is not closed (max |d xi| = {fac.dxi.max:.3g})",
            dxi=np.array([dxi.evaluate(p) for p in pts]),
            xi_wedge_dxi=np.array([gv.evaluate(p)[0] for p in pts]),
            points=pts)
    if probes is None:
        probes = pts[: min(len(pts), 8)]
    if _all_zero(fac.xi):
        phi = None
        scaled: OneFormLike = eta
    else:
        phi = homotopy_potential(fac.xi, base, probes=probes)

        def scaled(q, _phi=phi):
            q = np.atleast_2d(q)
            return np.exp(-_phi(q))[:, None] * eta.evaluate_many(q)
    casimir = homotopy_potential(scaled, base, probes=probes)
    vv = v.evaluate_many(pts)
    grads = np.array([casimir.gradient(p) for p in pts])
    conserved = ResidualStats.of(np.sum(grads * vv, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.linalg.norm(vv, axis=1) / np.linalg.norm(grads, axis=1)
    lam_var = float((np.max(lam) - np.min(lam)) / max(np.mean(np.abs(lam)), 1e-300)) if lam.size else 0.0
    return CasimirReport(casimir, fac, phi, conserved, ResidualStats.of(lam), lam_var, v, pts)
