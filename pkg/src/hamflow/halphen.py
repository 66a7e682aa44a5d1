"""
The Darboux-Halphen system
--------------------------

Symbolic fixtures and executable checks for the Darboux-Halphen field

    v = (yz - xy - xz, xz - xy - yz, xy - xz - yz)

its sl(2) companions ``u = 2(x, y, z)`` and ``w = (1, 1, 1)``, the last
multiplier ``rho``, the dual coframe ``(beta, alpha, gamma)`` and the
Godbillon-Vey obstruction.

Two time conventions are in use. ``v`` above generates the flow in time
``tau``; the summed system ``d(x+y)/dt = xy`` (and cyclic) is the same flow
in ``t = -2 tau``. Its explicit form, obtained by solving the pairwise sums,
is ``dx/dt = (xy + xz - yz)/2`` and cyclic. Halphen's Moebius
transformations act on the summed system.

Residuals below are relative: ``|lhs - rhs| / max(1, |lhs|, |rhs|)``, so
that points near the coincidence planes, where ``rho`` is large, do not
swamp absolute tolerances. Identities of the form ``a ^ da = 0`` are scaled
by ``|a| |da|`` instead, the size of the terms that cancel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import expr as ex
from .dynamics import Trajectory, line_integral, square_loop
from .errors import DegenerateIntegrand, DenominatorZero, EvalDomainError
from .exterior import (DifferentialForm, ExtendedField, VectorField3, bracket_extended, div,
                       ext_d, grad, interior, lie_derivative, sharp, volume_form, wedge)
from .expr import Expr
from .poisson import ResidualStats, homotopy_potential, integrating_factor
from .sampling import sample_box

COINCIDENCE_EPS = 1e-3
COINCIDENCE_LOCI = ("x - y", "y - z", "z - x")


@dataclass(frozen=True)
class HalphenFixtures:
    v: VectorField3
    u: VectorField3
    w: VectorField3
    rho_inv: Expr
    rho: Expr
    rho_inv_closed: Expr
    nu: DifferentialForm
    beta: DifferentialForm
    alpha: DifferentialForm
    gamma: DifferentialForm

    @property
    def forms(self) -> tuple[DifferentialForm, DifferentialForm, DifferentialForm]:
        return self.beta, self.alpha, self.gamma

    @property
    def fields(self) -> tuple[VectorField3, VectorField3, VectorField3]:
        return self.v, self.u, self.w


@lru_cache(maxsize=1)
def fixtures() -> HalphenFixtures:
    """Build ``v, u, w, rho, nu, beta, alpha, gamma`` symbolically."""
    v = VectorField3.parse(["y*z - x*y - x*z", "x*z - x*y - y*z", "x*y - x*z - y*z"], "v")
    u = VectorField3.parse(["2*x", "2*y", "2*z"], "u")
    w = VectorField3.parse(["1", "1", "1"], "w")
    rho_inv = -(u.cross(v).dot(w))
    rho = ex.ONE / rho_inv
    rho_inv_closed = ex.parse("-4*(x - y)*(y - z)*(z - x)")
    beta = DifferentialForm(1, u.cross(w).scale(rho).components)
    alpha = DifferentialForm(1, w.cross(v).scale(rho).components)
    gamma = DifferentialForm(1, v.cross(u).scale(rho).components)
    return HalphenFixtures(v, u, w, rho_inv, rho, rho_inv_closed, volume_form(rho),
                           beta, alpha, gamma)


def admissible_points(rng: np.random.Generator, n: int,
                      box=((-2, 2), (-2, 2), (-2, 2)), eps: float = COINCIDENCE_EPS) -> np.ndarray:
    """Random points with ``|x-y|, |y-z|, |z-x| >= eps``."""
    return sample_box(rng, n, box, COINCIDENCE_LOCI, eps)


def _rel(lhs: np.ndarray, rhs: np.ndarray, term_scale: float = 0.0) -> float:
    lhs, rhs = np.atleast_1d(lhs), np.atleast_1d(rhs)
    scale = max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))), term_scale)
    return float(np.max(np.abs(lhs - rhs))) / scale


# ---------------------------------------------------------------------------
# sl(2) triples and symmetries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sl2Triple:
    """Fields ``(e, h, f)`` with ``[h,e] = 2e, [h,f] = -2f, [e,f] = h``.

    For ``(v, u, w)`` this reads ``[u,v] = 2v, [u,w] = -2w, [v,w] = u``.
    """

    e: ExtendedField
    h: ExtendedField
    f: ExtendedField
    name: str = ""

    def relations(self) -> dict[str, ExtendedField]:
        """Each relation written as an expression that must vanish."""
        e, h, f = self.e, self.h, self.f
        return {
            "[h,e]-2e": bracket_extended(h, e) - e.scale(2.0),
            "[h,f]+2f": bracket_extended(h, f) + f.scale(2.0),
            "[e,f]-h": bracket_extended(e, f) - h,
        }


def triples() -> dict[str, Sl2Triple]:
    """``(v,u,w)``, ``(V_t,U_t,W_t)`` on ``I x M`` and ``(V_M,U_M,W_M)``."""
    fx = fixtures()
    lift = ExtendedField.lift
    t = ex.T
    v, u, w = lift(fx.v), lift(fx.u), lift(fx.w)
    zero3 = VectorField3.constant((0, 0, 0))
    V_t = lift(zero3, 1.0, "V_t")
    U_t = lift(fx.u, -2.0 * t, "U_t")
    W_t = ExtendedField((-(t * t),) + (fx.u.scale(t) - fx.w).components, "W_t")
    V_M = lift(-fx.v, 0.0, "V_M")
    U_M = lift(fx.u + fx.v.scale(2.0 * t), 0.0, "U_M")
    W_M = lift(-fx.w + fx.u.scale(t) + fx.v.scale(t * t), 0.0, "W_M")
    return {
        "vuw": Sl2Triple(v, u, w, "(v,u,w)"),
        "time": Sl2Triple(V_t, U_t, W_t, "(V_t,U_t,W_t)"),
        "characteristic": Sl2Triple(V_M, U_M, W_M, "(V_M,U_M,W_M)"),
    }


def _time_points(points, times):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ts = np.broadcast_to(np.asarray(times, dtype=float), (len(pts),))
    return pts, ts


def _max_components(field_: ExtendedField, pts, ts) -> float:
    worst = 0.0
    for p, t in zip(pts, ts):
        worst = max(worst, float(np.max(np.abs(field_.evaluate(p, t)))))
    return worst


def sl2_bracket_residuals(triple: Sl2Triple, points, times=0.0) -> dict[str, float]:
    """Largest component of each sl(2) relation over the sample points."""
    pts, ts = _time_points(points, times)
    return {k: _max_components(r, pts, ts) for k, r in triple.relations().items()}


def symmetry_bracket_residuals(points, times=0.0, w_coefficient: float = 2.0) -> dict[str, float]:
    """Halphen symmetry conditions on ``I x M``.

    ``[D, V_t] = 0``, ``[D, U_t] + 2D = 0``, ``[D, W_t] + c t D = 0`` with
    ``D = d/dt + v`` and ``c = w_coefficient`` (2 in the true condition),
    plus the vanishing brackets of ``D`` with the characteristic forms.
    """
    fx = fixtures()
    tr = triples()
    t = ex.T
    D = ExtendedField.lift(fx.v, 1.0, "D")
    V_t, U_t, W_t = tr["time"].e, tr["time"].h, tr["time"].f
    V_M, U_M, W_M = tr["characteristic"].e, tr["characteristic"].h, tr["characteristic"].f
    checks = {
        "[D,V_t]": bracket_extended(D, V_t),
        "[D,U_t]+2D": bracket_extended(D, U_t) + D.scale(2.0),
        "[D,W_t]+2tD": bracket_extended(D, W_t) + D.scale(ex.Const(w_coefficient) * t),
        "[D,V_M]": bracket_extended(D, V_M),
        "[D,U_M]": bracket_extended(D, U_M),
        "[D,W_M]": bracket_extended(D, W_M),
    }
    pts, ts = _time_points(points, times)
    return {k: _max_components(c, pts, ts) for k, c in checks.items()}


# ---------------------------------------------------------------------------
# coframe identities
# ---------------------------------------------------------------------------

def dual_pairing_matrix(point: Sequence[float]) -> np.ndarray:
    """``M[i, j] = form_i(field_j)`` for forms ``(beta, alpha, gamma)`` and fields ``(v, u, w)``.

    Raises ``EvalDomainError`` on the coincidence planes.
    """
    fx = fixtures()
    forms = np.array([f.evaluate(point) for f in fx.forms])
    fields = np.array([V.evaluate(point) for V in fx.fields])
    return forms @ fields.T


@dataclass
class IdentityCheck:
    name: str
    max_residual: float = 0.0
    samples: int = 0
    extra: dict = field(default_factory=dict)

    def update(self, value: float):
        self.max_residual = max(self.max_residual, float(value))
        self.samples += 1

    def to_json(self) -> dict:
        return {"name": self.name, "max_residual": self.max_residual, "samples": self.samples, **self.extra}


@dataclass
class GeometryReport:
    checks: dict[str, IdentityCheck]
    skipped: list
    alpha_dalpha: np.ndarray
    godbillon_vey: np.ndarray
    rho: np.ndarray

    def __getitem__(self, name: str) -> IdentityCheck:
        return self.checks[name]

    def to_json(self) -> dict:
        return {"checks": [c.to_json() for c in self.checks.values()],
                "skipped": [list(map(float, p)) for p in self.skipped]}


@lru_cache(maxsize=1)
def _identity_pairs():
    """Named ``(lhs, rhs)`` pairs of forms that must agree."""
    fx = fixtures()
    b, a, g, nu = fx.beta, fx.alpha, fx.gamma, fx.nu
    db, da, dg = ext_d(b), ext_d(a), ext_d(g)
    return {
        "maurer_cartan_dbeta": (db, wedge(a, b).scale(-2.0)),
        "maurer_cartan_dalpha": (da, wedge(g, b)),
        "maurer_cartan_dgamma": (dg, wedge(a, g).scale(2.0)),
        "i_v_nu=alpha^gamma": (interior(fx.v, nu), wedge(a, g)),
        "alpha^gamma=dgamma/2": (wedge(a, g), dg.scale(0.5)),
        "i_u_nu=gamma^beta": (interior(fx.u, nu), wedge(g, b)),
        "gamma^beta=dalpha": (wedge(g, b), da),
        "i_w_nu=beta^alpha": (interior(fx.w, nu), wedge(b, a)),
        "beta^alpha=dbeta/2": (wedge(b, a), db.scale(0.5)),
        "beta^dbeta=0": (wedge(b, db), DifferentialForm.zero(3)),
        "gamma^dgamma=0": (wedge(g, dg), DifferentialForm.zero(3)),
        "L_v_gamma=0": (lie_derivative(fx.v, g), DifferentialForm.zero(1)),
    }


@lru_cache(maxsize=1)
def _term_scales():
    """Factors whose magnitudes set the rounding scale of the vanishing identities."""
    fx = fixtures()
    b, g = fx.beta, fx.gamma
    return {
        "beta^dbeta=0": (b, ext_d(b)),
        "gamma^dgamma=0": (g, ext_d(g)),
        "L_v_gamma=0": (fx.v, ext_d(g)),
    }


def _term_scale(factors, p) -> float:
    return float(np.prod([np.linalg.norm(f.evaluate(p)) for f in factors]))


@lru_cache(maxsize=1)
def _scalar_exprs():
    fx = fixtures()
    a = fx.alpha
    rho = fx.rho
    div_nu = {name: div(V.scale(rho)) / rho for name, V in
              (("u", fx.u), ("v", fx.v), ("w", fx.w))}
    return {
        "alpha^dalpha": wedge(a, ext_d(a)).coefficient,
        "alpha^beta^gamma": wedge(wedge(a, fx.beta), fx.gamma).coefficient,
        "rho": rho,
        "rho_inv": fx.rho_inv,
        "rho_inv_closed": fx.rho_inv_closed,
        **{f"div_nu_{k}": e for k, e in div_nu.items()},
    }


def geometry_residuals(points) -> GeometryReport:
    """Evaluate every coframe identity at ``points``.

    Points on the coincidence planes are skipped and listed. The
    ``alpha^dalpha`` entry compares against the volume ``nu`` (coefficient
    ``rho``) and also records the relative distance to ``rho^-1``.
    """
    pairs = _identity_pairs()
    scales = _term_scales()
    scal = _scalar_exprs()
    checks = {k: IdentityCheck(k) for k in pairs}
    for k in ("volume_invariance", "alpha^dalpha=nu", "godbillon_vey=|rho|",
              "rho_det=closed_form"):
        checks[k] = IdentityCheck(k)
    skipped, ad, gv, rhos = [], [], [], []
    rel_vs_rho_inv = 0.0
    min_gv = np.inf
    signs = set()
    for p in np.atleast_2d(np.asarray(points, dtype=float)):
        try:
            vals = {k: (lhs.evaluate(p), rhs.evaluate(p)) for k, (lhs, rhs) in pairs.items()}
            s = {k: ex.evaluate(e, p) for k, e in scal.items()}
            ts = {k: _term_scale(f, p) for k, f in scales.items()}
        except EvalDomainError:
            skipped.append(p)
            continue
        for k, (lhs, rhs) in vals.items():
            checks[k].update(_rel(lhs, rhs, ts.get(k, 0.0)))
        checks["volume_invariance"].update(
            max(abs(s["div_nu_u"]), abs(s["div_nu_v"]), abs(s["div_nu_w"])))
        checks["alpha^dalpha=nu"].update(abs(s["alpha^dalpha"] - s["rho"]) / abs(s["rho"]))
        rel_vs_rho_inv = max(rel_vs_rho_inv, abs(s["alpha^dalpha"] - s["rho_inv"]) / abs(s["rho_inv"]))
        checks["godbillon_vey=|rho|"].update(
            abs(abs(s["alpha^beta^gamma"]) - abs(s["rho"])) / abs(s["rho"]))
        checks["rho_det=closed_form"].update(
            abs(s["rho_inv"] - s["rho_inv_closed"]) / abs(s["rho_inv_closed"]))
        min_gv = min(min_gv, abs(s["alpha^beta^gamma"]))
        signs.add(int(np.sign(s["alpha^beta^gamma"] / s["rho"])))
        ad.append(s["alpha^dalpha"])
        gv.append(s["alpha^beta^gamma"])
        rhos.append(s["rho"])
    checks["alpha^dalpha=nu"].extra["max_rel_error_vs_rho_inv"] = rel_vs_rho_inv
    checks["godbillon_vey=|rho|"].extra["min_abs_coefficient"] = float(min_gv)
    checks["godbillon_vey=|rho|"].extra["sign_relative_to_nu"] = sorted(signs)
    return GeometryReport(checks, skipped, np.array(ad), np.array(gv), np.array(rhos))


@dataclass
class ClosedFormsReport:
    dgamma_minus_2alpha_gamma: float
    dbeta_plus_2alpha_beta: float
    xi_minus_2alpha: float
    dxi_max: float
    dxi_pairing_min: float
    xi_closed: bool
    orthogonal_gauge_xi_minus_2alpha: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def closed_scaled_forms_check(points) -> ClosedFormsReport:
    """Differential content of the closedness of ``e^{-2 int alpha} gamma`` and ``e^{2 int alpha} beta``.

    ``integrating_factor(gamma)`` is taken in the gauge ``i_w xi = 0``
    (``w`` is the field dual to ``gamma``), which gives ``xi = 2 alpha``.
    The orthogonal-gauge result is reported alongside for comparison.
    """
    fx = fixtures()
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    b, a, g = fx.beta, fx.alpha, fx.gamma
    dg_lhs, dg_rhs = ext_d(g), wedge(a, g).scale(2.0)
    db_lhs, db_rhs = ext_d(b), wedge(a, b).scale(-2.0)
    fac = integrating_factor(g, pts, transversal=fx.w)
    ortho = integrating_factor(g, pts)
    two_alpha = a.scale(2.0)
    dxi = ext_d(fac.xi)
    gs, bs = sharp(g), sharp(b)
    r_dg = r_db = r_xi = r_ortho = dxi_max = 0.0
    pair_min = np.inf
    for p in pts:
        r_dg = max(r_dg, _rel(dg_lhs.evaluate(p), dg_rhs.evaluate(p)))
        r_db = max(r_db, _rel(db_lhs.evaluate(p), db_rhs.evaluate(p)))
        r_xi = max(r_xi, _rel(fac.xi.evaluate(p), two_alpha.evaluate(p)))
        r_ortho = max(r_ortho, _rel(ortho.xi.evaluate(p), two_alpha.evaluate(p)))
        dxi_max = max(dxi_max, float(np.max(np.abs(dxi.evaluate(p)))))
        pair_min = min(pair_min, abs(dxi.pair(p, gs.evaluate(p), bs.evaluate(p))))
    return ClosedFormsReport(r_dg, r_db, r_xi, dxi_max, float(pair_min), fac.closed, r_ortho)


@dataclass
class DegeneracyReport:
    """Homotopy integrands ``x . w(x)`` of ``beta`` and ``gamma`` at sample points.

    ``relative_*`` divide by ``|w(x)| |x|``, the scale of rounding in the
    cancelling sum.
    """

    max_integrand_beta: float
    max_integrand_gamma: float
    beta_raises: bool
    gamma_raises: bool
    relative_beta: float = 0.0
    relative_gamma: float = 0.0

    def to_json(self) -> dict:
        return dict(self.__dict__)


def homotopy_integrands(points) -> tuple[np.ndarray, np.ndarray]:
    """``rho (u x w) . x`` and ``rho (v x u) . x`` at ``points``."""
    fx = fixtures()
    pos = VectorField3((ex.X, ex.Y, ex.Z))
    ib = VectorField3(fx.beta.components).dot(pos)
    ig = VectorField3(fx.gamma.components).dot(pos)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return (np.array([ex.evaluate(ib, p) for p in pts]),
            np.array([ex.evaluate(ig, p) for p in pts]))


def homotopy_degeneracy_demo(points) -> DegeneracyReport:
    """The homotopy formula is void for ``beta`` and ``gamma``."""
    fx = fixtures()
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ib, ig = homotopy_integrands(pts)
    raised = []
    for form in (fx.beta, fx.gamma):
        try:
            homotopy_potential(form, probes=pts)
            raised.append(False)
        except DegenerateIntegrand:
            raised.append(True)
    norms = np.linalg.norm(pts, axis=1)
    nb = np.linalg.norm(fx.beta.evaluate_many(pts), axis=1) * norms
    ng = np.linalg.norm(fx.gamma.evaluate_many(pts), axis=1) * norms
    return DegeneracyReport(float(np.max(np.abs(ib))), float(np.max(np.abs(ig))), *raised,
                            float(np.max(np.abs(ib) / np.maximum(nb, 1e-300))),
                            float(np.max(np.abs(ig) / np.maximum(ng, 1e-300))))


@dataclass
class HolonomyReport:
    """Loop integrals of ``alpha`` around small squares.

    ``scaled_errors[k] = |loop - r^2 d alpha(e1, e2)| / r^2`` for side ``r``;
    ``exact_controls`` are the loop integrals of ``dH`` for a test function
    ``H``, which must vanish.
    """

    center: np.ndarray
    sides: list
    loops: list
    area_pairings: list
    scaled_errors: list
    exact_controls: list

    @property
    def monotone(self) -> bool:
        e = self.scaled_errors
        return all(a > b for a, b in zip(e, e[1:]))

    def to_json(self) -> dict:
        return {"center": self.center.tolist(), "sides": list(self.sides), "loops": list(self.loops),
                "area_pairings": list(self.area_pairings), "scaled_errors": list(self.scaled_errors),
                "exact_controls": list(self.exact_controls), "monotone": self.monotone}


def loop_plane(center: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the plane spanned by ``sharp(beta)``, ``sharp(gamma)`` at ``center``."""
    fx = fixtures()
    b = fx.beta.evaluate(center)
    g = fx.gamma.evaluate(center)
    e1 = b / np.linalg.norm(b)
    e2 = g - (g @ e1) * e1
    return e1, e2 / np.linalg.norm(e2)


def holonomy_demo(center: Sequence[float] = (1.0, 2.0, 4.0), sides: Sequence[float] = (0.1, 0.05, 0.025),
                  e1: Sequence[float] | None = None, e2: Sequence[float] | None = None,
                  control: str = "x*y*z + sin(x) - y^2") -> HolonomyReport:
    """``alpha`` is not closed: its loop integrals scale like the enclosed area.

    Squares are centred at ``center`` in the plane of ``sharp(beta)``,
    ``sharp(gamma)`` unless ``e1, e2`` are given.
    """
    fx = fixtures()
    c = np.asarray(center, dtype=float)
    if e1 is None or e2 is None:
        e1, e2 = loop_plane(c)
    da = ext_d(fx.alpha)
    dH = DifferentialForm(1, grad(ex.parse(control)).components)
    loops, areas, errs, ctrl = [], [], [], []
    for r in sides:
        sq = square_loop(c, e1, e2, r)
        loop = line_integral(fx.alpha, sq)
        area = da.pair(c, r * np.asarray(e1, float), r * np.asarray(e2, float))
        loops.append(loop)
        areas.append(float(area))
        errs.append(abs(loop - area) / r ** 2)
        ctrl.append(line_integral(dH, sq))
    return HolonomyReport(c, list(sides), loops, areas, errs, ctrl)


# ---------------------------------------------------------------------------
# Halphen's transformations
# ---------------------------------------------------------------------------

def halp_rhs(t: float, x: np.ndarray) -> np.ndarray:
    """Explicit form of ``d(x+y)/dt = xy`` and cyclic."""
    x1, x2, x3 = x
    return 0.5 * np.array([x1 * x2 + x1 * x3 - x2 * x3,
                           x1 * x2 + x2 * x3 - x1 * x3,
                           x1 * x3 + x2 * x3 - x1 * x2])


def halp_field() -> VectorField3:
    return VectorField3.parse(["(x*y + x*z - y*z)/2", "(x*y + y*z - x*z)/2",
                               "(x*z + y*z - x*y)/2"], "halp")


def halp_time_from_hal(tau):
    """Time of the summed system for a time ``tau`` of the field ``v``."""
    return -2.0 * np.asarray(tau)


def hal_time_from_halp(t):
    return -0.5 * np.asarray(t)


@dataclass(frozen=True)
class HalphenTransform:
    """``t -> (a t + b)/(c t + d)``, ``x -> 2c (ct+d)/D + (ct+d)^2 x / D`` with ``D = ad - bc``."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if self.det == 0:
            raise ValueError("Halphen transform needs ad - bc != 0")

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def denominator(self, t):
        return self.c * np.asarray(t) + self.d

    def apply(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        k = self.denominator(t)
        D = self.det
        t_new = (self.a * t + self.b) / k
        x_new = (2 * self.c * k / D)[..., None] + (k * k / D)[..., None] * x
        return t_new, x_new


def _fd_derivative(t: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Fifth-order-accurate derivative on interior samples of a uniform grid."""
    h = t[1] - t[0]
    out = np.full_like(x, np.nan)
    out[2:-2] = (x[:-4] - 8 * x[1:-3] + 8 * x[3:-1] - x[4:]) / (12 * h)
    return out


def halphen_transform_check(traj: Trajectory, T: HalphenTransform) -> ResidualStats:
    """Residual of the summed system along the transformed trajectory.

    ``traj`` must solve the summed system on a uniform time grid. The
    derivative of the original path comes from finite differences of its
    samples, is pushed through the transformation, and is compared with the
    right-hand side evaluated at the transformed points.

    Raises
    ------
    DenominatorZero
        ``c t + d`` vanishes or changes sign along the trajectory.
    """
    k = T.denominator(traj.t)
    if np.any(k == 0) or (np.min(k) < 0 < np.max(k)):
        raise DenominatorZero("c t + d crosses zero along the trajectory")
    xdot = _fd_derivative(traj.t, traj.x)
    t_new, x_new = T.apply(traj.t, traj.x)
    D = T.det
    dxnew_dt = (2 * T.c ** 2 / D) + (2 * T.c * k / D)[:, None] * traj.x + (k * k / D)[:, None] * xdot
    dtnew_dt = D / (k * k)
    dxnew = dxnew_dt / dtnew_dt[:, None]
    res = []
    for i in range(2, len(traj.t) - 2):
        rhs = halp_rhs(t_new[i], x_new[i])
        res.append(_rel(dxnew[i], rhs))
    return ResidualStats.of(res)
