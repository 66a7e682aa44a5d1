import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamflow import expr as ex
from hamflow.errors import (DegenerateIntegrand, FrameLost, NotClosed, NotIntegrable,
                            ObstructionGodbillonVey, PencilSingular)
from hamflow.exterior import DifferentialForm, VectorField3, ext_d, flat, grad, sharp, wedge
from hamflow.halphen import admissible_points, fixtures
from hamflow.poisson import (ExplicitCoefficients, frobenius_coefficient, hamiltonian_residual,
                             homotopy_potential, integrating_factor, jacobi_residual, jacobi_stats,
                             pencil_compatibility, pointwise_angles, poisson_from_riccati,
                             reconstruct_casimir, riccati_consistency, riccati_integrate)
from hamflow.sampling import sample_box

from helpers import random_polynomial, random_polynomial_field

ROT = VectorField3.parse(["-y", "x", "0"])
EULER = VectorField3.parse(["y*z", "z*x", "x*y"])
HAL = fixtures().v


def box_points(n, seed=0, lo=-2, hi=2):
    return np.random.default_rng(seed).uniform(lo, hi, size=(n, 3))


# --- Jacobi / Frobenius ----------------------------------------------------

def test_jacobi_examples():
    assert jacobi_stats(VectorField3.parse(["-x", "-y", "0"]), box_points(20)).max == 0.0
    assert ex.evaluate(jacobi_residual(VectorField3.parse(["y", "z", "x"])), (1, 2, 4)) == -7.0
    H = random_polynomial(np.random.default_rng(0), 3)
    assert jacobi_stats(grad(H), box_points(20)).max < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_jacobi_equals_frobenius_for_polynomial_fields(seed):
    rng = np.random.default_rng(seed)
    J = random_polynomial_field(rng, 2)
    a, b = jacobi_residual(J), frobenius_coefficient(J)
    for p in rng.uniform(-2, 2, size=(10, 3)):
        va, vb = ex.evaluate(a, p), ex.evaluate(b, p)
        assert abs(va - vb) <= 1e-10 * max(1.0, abs(va))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_frobenius_scaling_identity(seed):
    rng = np.random.default_rng(seed)
    J = random_polynomial_field(rng, 2)
    f = ex.parse("1 + x^2 + y*z/3") * ex.exp(ex.Const(0.3) * ex.Y)
    lhs = frobenius_coefficient(J.scale(f))
    rhs = f * f * frobenius_coefficient(J)
    for p in rng.uniform(-1.5, 1.5, size=(10, 3)):
        a, b = ex.evaluate(lhs, p), ex.evaluate(rhs, p)
        assert abs(a - b) <= 1e-9 * max(1.0, abs(b))


# --- Riccati ---------------------------------------------------------------

def test_riccati_constant_solution():
    for mu0 in (-3.0, 0.0, 0.7, 12.5):
        path = riccati_integrate(ExplicitCoefficients.constant(0, 0, 0), mu0=mu0, s_max=2.0, h=1e-2)
        assert np.max(np.abs(path.mu - mu0)) <= 1e-14 * max(1.0, abs(mu0))


def test_riccati_tangent_oracle():
    path = riccati_integrate(ExplicitCoefficients.constant(1, 0, 1), mu0=0.0, s_max=0.5, h=1e-3)
    assert abs(path.mu[-1] - math.tan(0.5)) < 1e-8
    assert abs(path.mu_at(0.25) - math.tan(0.25)) < 1e-6


def test_riccati_continues_through_pole():
    s_max = 1.5 * math.pi - 0.1
    path = riccati_integrate(ExplicitCoefficients.constant(1, 0, 1), mu0=0.0, s_max=s_max, h=1e-3)
    sel = (path.s > math.pi / 2 + 0.1) & (path.s < s_max)
    assert sel.sum() > 100
    np.testing.assert_allclose(path.mu[sel], np.tan(path.s[sel]), rtol=1e-6, atol=1e-6)
    # (p, q) stays on the unit circle and passes q = 0 with a sign change
    np.testing.assert_allclose(path.p ** 2 + path.q ** 2, 1.0, atol=1e-14)
    assert np.any(path.q < 0) and np.any(path.q > 0)


def test_riccati_explicit_time_dependent():
    # mu' = 2 s mu  ->  mu = mu0 exp(s^2)
    coeffs = ExplicitCoefficients(lambda s: 0.0, lambda s: 2 * s, lambda s: 0.0)
    path = riccati_integrate(coeffs, mu0=0.5, s_max=1.0, h=1e-3)
    assert abs(path.mu[-1] - 0.5 * math.e) < 1e-9


def test_field_driven_rotation_keeps_mu_constant():
    path = riccati_integrate(ROT, (1, 0, 0), mu0=1.0, s_max=2.0, h=1e-2)
    np.testing.assert_allclose(path.mu, 1.0, atol=1e-13)
    # streamline stays on the unit circle at arclength s
    np.testing.assert_allclose(path.x[-1], [math.cos(2.0), math.sin(2.0), 0], atol=1e-8)


def test_field_driven_projective_consistency():
    path = riccati_integrate(HAL, (0.4, 1.1, 1.9), mu0=0.3, s_max=0.3, h=1e-3)
    cons = riccati_consistency(path)
    cons = cons[np.isfinite(cons)]
    assert cons.size > 200
    # central differences are O(h^2)
    assert np.max(np.abs(cons)) < 1e-4


def test_frame_lost_reports_position():
    # the streamline of v = (1, 0, 0) has a degenerate frame everywhere
    with pytest.raises(FrameLost) as info:
        riccati_integrate(VectorField3.parse(["1", "0", "0"]), (0, 0, 0), s_max=0.1, h=1e-2)
    assert info.value.point is not None


def test_riccati_csv_and_json(tmp_path):
    path = riccati_integrate(ROT, (1, 0, 0), mu0=1.0, s_max=0.1, h=1e-2)
    out = tmp_path / "r.csv"
    path.to_csv(out)
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["s", "x", "y", "z", "p", "q", "mu"]
    assert len(rows) == len(path.s) + 1
    assert float(rows[-1][6]) == pytest.approx(1.0)
    assert path.to_json()["mu0"] == 1.0


# --- Poisson vectors -------------------------------------------------------

@pytest.mark.parametrize("mu0, tol", [(0.0, 1e-10), (1.0, 1e-8)])
def test_poisson_from_riccati_rotation(mu0, tol):
    path = riccati_integrate(ROT, (1, 0, 0.2), mu0=mu0, s_max=2.0, h=1e-2)
    rep = poisson_from_riccati(ROT, path)
    assert rep.jacobi_stats.max < tol
    assert rep.jacobi_stats.samples == len(path.s)
    assert rep.routes_agree()
    if mu0 == 1.0:
        x, y, _ = path.x.T
        r = np.hypot(x, y)
        np.testing.assert_allclose(rep.J, np.column_stack([-x / r, -y / r, np.ones_like(r)]), atol=1e-12)


def test_two_seeds_give_independent_structures():
    a = poisson_from_riccati(ROT, riccati_integrate(ROT, (1, 0, 0), mu0=0.0, s_max=1.0, h=1e-2))
    b = poisson_from_riccati(ROT, riccati_integrate(ROT, (1, 0, 0), mu0=1.0, s_max=1.0, h=1e-2))
    assert np.min(pointwise_angles(a.J, b.J)) > 1e-6


def test_poisson_from_riccati_halphen_routes_agree():
    path = riccati_integrate(HAL, (0.4, 1.1, 1.9), mu0=0.3, s_max=0.2, h=1e-2)
    rep = poisson_from_riccati(HAL, path)
    assert rep.routes_agree()
    # the residual measures how well the tube fit resolves d mu; small but not rounding-level
    assert rep.jacobi_stats.max < 1e-4


def test_pencil_examples():
    pts = box_points(30)
    g1, g2 = grad(ex.parse("x^2 - y^2")), grad(ex.parse("y^2 - z^2"))
    for stats in pencil_compatibility(g1, g2, [-2, -1, 0, 1, 2], pts).values():
        assert stats.max < 1e-10
    J = VectorField3.parse(["y", "z", "x"])
    res = pencil_compatibility(J, VectorField3.constant((0, 0, 0)), [1.0], pts)[1.0]
    assert res.max == pytest.approx(np.max(np.abs(pts.sum(axis=1))))


def test_pencil_of_rotation_frame():
    pts = sample_box(np.random.default_rng(0), 30, ((-2, 2), (-2, 2), (-1, 1)), ["x^2+y^2"], 1e-2)
    from hamflow.frenet import FrenetFrame
    fr = FrenetFrame(ROT)
    for stats in pencil_compatibility(fr.normal, fr.binormal, [-2, -1, 1, 2], pts).values():
        assert stats.max < 1e-8


def test_hamiltonian_examples():
    pts = box_points(50)
    rot = hamiltonian_residual(ROT, VectorField3.parse(["-x", "-y", "0"]), "z", pts)
    assert rot.residual.max < 1e-12 and rot.j_dot_v.max < 1e-10 and rot.grad_h_dot_v.max < 1e-10
    J = grad(ex.parse("x^2 - y^2")).scale(0.25)
    eu = hamiltonian_residual(EULER, J, "y^2 - z^2", pts)
    assert eu.residual.max < 1e-12
    bad = hamiltonian_residual(ROT, VectorField3.parse(["-x", "-y", "0"]), "x", pts)
    assert bad.residual.max > 0.1


# --- integrating factors ---------------------------------------------------

def test_integrating_factor_examples():
    pts = box_points(10, lo=0.5, hi=2)
    fac = integrating_factor(DifferentialForm.one_form("y", 0, 0), pts)
    for p in pts:
        np.testing.assert_allclose(fac.xi.evaluate(p), [0, 1 / p[1], 0], rtol=1e-14)
    assert fac.closed
    dH = ext_d(DifferentialForm.scalar(ex.parse("x*y + sin(z)")))
    fac0 = integrating_factor(dH, pts)
    for p in pts:
        np.testing.assert_allclose(fac0.xi.evaluate(p), 0, atol=1e-14)


def test_integrating_factor_of_gamma():
    fx = fixtures()
    pts = admissible_points(np.random.default_rng(4), 20)
    fac = integrating_factor(fx.gamma, pts, transversal=fx.w)
    two_alpha = fx.alpha.scale(2.0)
    for p in pts:
        a = two_alpha.evaluate(p)
        assert np.max(np.abs(fac.xi.evaluate(p) - a)) <= 1e-9 * max(1.0, np.max(np.abs(a)))
    assert not fac.closed
    assert fac.residual.max < 1e-9 * max(1.0, max(np.max(np.abs(fx.gamma.evaluate(p))) for p in pts) ** 2)
    # any transversal gives a valid solution of d eta = xi ^ eta
    ortho = integrating_factor(fx.gamma, pts)
    for p in pts:
        r = (ext_d(fx.gamma) - wedge(ortho.xi, fx.gamma)).evaluate(p)
        assert np.max(np.abs(r)) <= 1e-9 * max(1.0, np.max(np.abs(ext_d(fx.gamma).evaluate(p))))


def test_integrating_factor_errors():
    with pytest.raises(NotIntegrable):
        integrating_factor(flat(VectorField3.parse(["y", "z", "x"])), box_points(5))
    with pytest.raises(PencilSingular):
        integrating_factor(DifferentialForm.one_form("y", 0, 0), [(1, 0, 0)])


# --- homotopy potentials ---------------------------------------------------

def test_homotopy_examples():
    pot = homotopy_potential(DifferentialForm.one_form("y", "x", 0))
    assert abs(pot((2, 3, 0)) - 6.0) < 1e-9
    assert pot.verify(box_points(10)).max < 1e-8
    px = homotopy_potential(DifferentialForm.one_form(1, 0, 0))
    assert px((1.7, -3, 2)) == pytest.approx(1.7, abs=1e-12)


def test_homotopy_degenerate_and_not_closed():
    fx = fixtures()
    for form in (fx.beta, fx.gamma):
        with pytest.raises(DegenerateIntegrand) as info:
            homotopy_potential(form)
        assert info.value.max_integrand < 1e-14
        assert info.value.max_along_rays >= info.value.max_integrand
        # explicit probes near the coincidence loci still trigger detection
        with pytest.raises(DegenerateIntegrand):
            homotopy_potential(form, probes=admissible_points(np.random.default_rng(0), 8))
    with pytest.raises(NotClosed):
        homotopy_potential(DifferentialForm.one_form("y", 0, 0))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_homotopy_recovers_polynomial_potentials(seed):
    rng = np.random.default_rng(seed)
    H = random_polynomial(rng, 4)
    base = rng.uniform(-1, 1, 3)
    pot = homotopy_potential(ext_d(DifferentialForm.scalar(H)), base)
    h0 = ex.evaluate(H, base)
    for p in rng.uniform(-1.5, 1.5, size=(5, 3)):
        want = ex.evaluate(H, p) - h0
        assert abs(pot(p) - want) <= 1e-9 * max(1.0, abs(want))


# --- Casimir reconstruction ------------------------------------------------

def test_reconstruct_rotation():
    pts = sample_box(np.random.default_rng(0), 20, ((-2, 2), (-2, 2), (-1, 1)), ["x^2+y^2"], 1e-2)
    rep = reconstruct_casimir(ROT, VectorField3.parse(["-x", "-y", "0"]), pts)
    assert rep.phi is None
    for p in pts:
        assert abs(rep.casimir(p) + (p[0] ** 2 + p[1] ** 2) / 2) < 1e-8
    assert rep.conserved.max < 1e-10
    assert rep.lam_variation < 1e-6
    for p in pts[:5]:
        np.testing.assert_allclose(np.cross(rep.complementary_vector(p), rep.casimir.gradient(p)),
                                   ROT.evaluate(p), atol=1e-8)


def test_reconstruct_euler_top():
    from hamflow.dynamics import integrate_ode, observe_drift
    pts = box_points(10, lo=-1, hi=1)
    J = grad(ex.parse("x^2 - y^2")).scale(0.25)
    rep = reconstruct_casimir(EULER, J, pts)
    for p in pts:
        assert rep.casimir(p) == pytest.approx((p[0] ** 2 - p[1] ** 2) / 4, abs=1e-10)
    traj = integrate_ode(EULER, (0.5, 0.3, 0.2), (0, 1), h=1e-3)
    vals = rep.casimir(traj.x[::50])
    assert np.max(np.abs(vals - vals[0])) / abs(vals[0]) < 1e-8
    assert observe_drift(traj, "(x^2 - y^2)/4").relative < 1e-8


def test_reconstruct_with_nonzero_integrating_factor():
    # J = y grad(x) has xi = dy / y; Casimir x
    pts = box_points(10, lo=0.5, hi=2)
    rep = reconstruct_casimir(VectorField3.parse(["0", "0", "1"]) , VectorField3.parse(["y", "0", "0"]),
                              pts, base=(0, 1, 0))
    assert rep.phi is not None
    for p in pts:
        assert rep.casimir(p) == pytest.approx(p[0], abs=1e-8)


def test_reconstruct_halphen_is_obstructed():
    fx = fixtures()
    pts = admissible_points(np.random.default_rng(1), 10)
    with pytest.raises(ObstructionGodbillonVey) as info:
        reconstruct_casimir(fx.v, sharp(fx.gamma), pts, base=(1, 2, 4))
    assert np.all(np.abs(info.value.xi_wedge_dxi) > 0)
    with pytest.raises(NotIntegrable):
        reconstruct_casimir(ROT, VectorField3.parse(["y", "z", "x"]), box_points(5))
