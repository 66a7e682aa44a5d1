import numpy as np
import pytest

from hamflow import expr as ex
from hamflow.dynamics import integrate_ode
from hamflow.errors import DenominatorZero, EvalDomainError
from hamflow.exterior import VectorField3, ext_d, wedge
from hamflow.halphen import (ExtendedField, HalphenTransform, Sl2Triple, admissible_points,
                             closed_scaled_forms_check, dual_pairing_matrix, fixtures,
                             geometry_residuals, halp_field, halp_rhs, halp_time_from_hal,
                             hal_time_from_halp, halphen_transform_check, holonomy_demo,
                             homotopy_degeneracy_demo, homotopy_integrands, sl2_bracket_residuals,
                             symmetry_bracket_residuals, triples)

P124 = (1.0, 2.0, 4.0)


@pytest.fixture(scope="module")
def pts():
    return admissible_points(np.random.default_rng(0), 100)


@pytest.fixture(scope="module")
def geometry(pts):
    return geometry_residuals(pts)


def test_fixture_values():
    fx = fixtures()
    np.testing.assert_array_equal(fx.v.evaluate(P124), [2, -6, -10])
    assert ex.evaluate(fx.rho_inv, P124) == -24.0
    assert ex.evaluate(fx.rho_inv_closed, P124) == -24.0
    assert ex.evaluate(fx.rho, P124) == pytest.approx(-1 / 24, rel=1e-15)
    with pytest.raises(EvalDomainError):
        ex.evaluate(fx.rho, (1, 1, 3))


def test_admissible_points_avoid_coincidence_planes(pts):
    assert pts.shape == (100, 3)
    for a, b in ((0, 1), (1, 2), (2, 0)):
        assert np.min(np.abs(pts[:, a] - pts[:, b])) >= 1e-3


# --- brackets --------------------------------------------------------------

@pytest.mark.parametrize("name", ["vuw", "time", "characteristic"])
def test_sl2_triples(name, pts):
    times = np.random.default_rng(1).uniform(-1, 1, len(pts))
    res = sl2_bracket_residuals(triples()[name], pts, times)
    assert set(res) == {"[h,e]-2e", "[h,f]+2f", "[e,f]-h"}
    assert max(res.values()) < 1e-12 * _field_scale(pts)


def _field_scale(pts):
    # components are quadratic in |x|; residuals are compared at that scale
    return max(1.0, float(np.max(np.sum(pts ** 2, axis=1))))


def test_perturbed_triple_fails(pts):
    fx = fixtures()
    lift = ExtendedField.lift
    bad = Sl2Triple(lift(fx.v + VectorField3.constant((1, 0, 0))), lift(fx.u), lift(fx.w))
    assert max(sl2_bracket_residuals(bad, pts[:10]).values()) > 0.5


def test_symmetry_conditions(pts):
    times = np.random.default_rng(2).uniform(-1, 1, len(pts))
    res = symmetry_bracket_residuals(pts, times)
    assert len(res) == 6
    assert max(res.values()) < 1e-12 * _field_scale(pts)
    wrong = symmetry_bracket_residuals(pts[:10], times[:10], w_coefficient=1.0)
    assert wrong["[D,W_t]+2tD"] > 0.1
    assert wrong["[D,V_M]"] == symmetry_bracket_residuals(pts[:10], times[:10])["[D,V_M]"]


# --- coframe ---------------------------------------------------------------

def test_dual_pairing():
    M = dual_pairing_matrix(P124)
    np.testing.assert_allclose(M, np.eye(3), atol=1e-12)
    fx = fixtures()
    assert abs(fx.beta.pair(P124, fx.u.evaluate(P124))) < 1e-15
    with pytest.raises(EvalDomainError):
        dual_pairing_matrix((1, 1, 4))


def test_dual_pairing_random(pts):
    for p in pts:
        np.testing.assert_allclose(dual_pairing_matrix(p), np.eye(3), atol=1e-12)


def test_coframe_identities(geometry):
    for name, chk in geometry.checks.items():
        if name == "alpha^dalpha=nu":
            continue
        assert chk.max_residual < 1e-10, name
        assert chk.samples == 100
    assert geometry.skipped == []


def test_alpha_dalpha_is_nu_with_coefficient_rho(geometry):
    chk = geometry["alpha^dalpha=nu"]
    assert chk.max_residual < 1e-9
    # the coefficient is rho, not rho^{-1}
    assert chk.extra["max_rel_error_vs_rho_inv"] > 0.5
    fx = fixtures()
    c = wedge(fx.alpha, ext_d(fx.alpha)).coefficient
    assert ex.evaluate(c, P124) == pytest.approx(-1 / 24, rel=1e-12)


def test_godbillon_vey_volume(geometry):
    fx = fixtures()
    abg = wedge(wedge(fx.alpha, fx.beta), fx.gamma).coefficient
    assert abs(ex.evaluate(abg, P124)) == pytest.approx(1 / 24, rel=1e-12)
    chk = geometry["godbillon_vey=|rho|"]
    assert chk.max_residual < 1e-9
    assert chk.extra["min_abs_coefficient"] > 0
    # alpha ^ beta ^ gamma = -nu
    assert set(np.atleast_1d(chk.extra["sign_relative_to_nu"])) == {-1}
    assert np.all(np.abs(geometry.godbillon_vey) > 0)


def test_rho_closed_form(geometry):
    assert geometry["rho_det=closed_form"].max_residual < 1e-12


def test_closed_scaled_forms(pts):
    rep = closed_scaled_forms_check(pts[:20])
    assert rep.dgamma_minus_2alpha_gamma < 1e-10
    assert rep.dbeta_plus_2alpha_beta < 1e-10
    assert rep.xi_minus_2alpha < 1e-9
    assert rep.dxi_pairing_min > 0 and not rep.xi_closed
    # the factor depends on the transversal; the orthogonal one does not give 2 alpha
    assert rep.orthogonal_gauge_xi_minus_2alpha > 1e-3
    assert set(rep.to_json()) >= {"xi_minus_2alpha", "xi_closed"}


def test_homotopy_degeneracy(pts):
    ib, ig = homotopy_integrands(P124)
    assert abs(ib[0]) < 1e-14 and abs(ig[0]) < 1e-14
    rep = homotopy_degeneracy_demo(pts[:20])
    assert rep.beta_raises and rep.gamma_raises
    assert rep.relative_beta < 1e-14 and rep.relative_gamma < 1e-14


def test_holonomy():
    rep = holonomy_demo()
    assert rep.monotone
    assert all(abs(x) > 0 for x in rep.loops)
    assert max(abs(x) for x in rep.exact_controls) < 1e-10
    # loops shrink like r^2
    ratios = [a / b for a, b in zip(rep.loops, rep.loops[1:])]
    np.testing.assert_allclose(ratios, 4, rtol=0.05)
    assert rep.to_json()["monotone"] is True


# --- summed system and transformations -------------------------------------

def test_halp_explicit_form_solves_summed_system():
    # d(x+y)/dt = x y and cyclic
    for p in admissible_points(np.random.default_rng(3), 20):
        x, y, z = p
        r = halp_rhs(0.0, p)
        assert r[0] + r[1] == pytest.approx(x * y, abs=1e-13)
        assert r[1] + r[2] == pytest.approx(y * z, abs=1e-13)
        assert r[2] + r[0] == pytest.approx(z * x, abs=1e-13)
        np.testing.assert_allclose(halp_field().evaluate(p), r, atol=1e-14)
        np.testing.assert_allclose(r, -fixtures().v.evaluate(p) / 2, atol=1e-13)


def test_time_conventions():
    # a v-trajectory over tau is a halp-trajectory over t = -2 tau
    x0 = np.array([0.1, 0.2, 0.35])
    a = integrate_ode(fixtures().v, x0, (0, -0.25), h=1e-3)
    b = integrate_ode(halp_field(), x0, (0, float(halp_time_from_hal(-0.25))), h=2e-3)
    np.testing.assert_allclose(a.endpoint, b.endpoint, atol=1e-12)
    assert hal_time_from_halp(halp_time_from_hal(0.7)) == pytest.approx(0.7)


@pytest.fixture(scope="module")
def halp_traj():
    return integrate_ode(halp_field(), (0.1, 0.2, 0.35), (0.1, 1.0), h=1e-3)


def test_transform_translation(halp_traj):
    assert halphen_transform_check(halp_traj, HalphenTransform(1, 1, 0, 1)).max < 1e-9


def test_transform_scaling(halp_traj):
    assert halphen_transform_check(halp_traj, HalphenTransform(2, 0, 0, 1)).max < 1e-6


def test_transform_inversion_away_from_zero(halp_traj):
    # t -> -1/t is a genuine symmetry when the trajectory avoids t = 0
    assert halphen_transform_check(halp_traj, HalphenTransform(0, 1, -1, 0)).max < 1e-6


def test_non_solution_is_detected():
    # a trajectory of v itself does not solve the summed system
    traj = integrate_ode(fixtures().v, (0.1, 0.2, 0.35), (0.1, 1.0), h=1e-3)
    assert halphen_transform_check(traj, HalphenTransform(1, 1, 0, 1)).max > 1e-3


def test_transform_denominator_crossing():
    traj = integrate_ode(halp_field(), (0.1, 0.2, 0.35), (-0.5, 0.5), h=1e-2)
    with pytest.raises(DenominatorZero):
        halphen_transform_check(traj, HalphenTransform(0, 1, -1, 0))
    with pytest.raises(ValueError):
        HalphenTransform(1, 2, 2, 4)


def test_transform_apply_example():
    T = HalphenTransform(1, 1, 0, 1)
    t, x = T.apply(np.array([0.5]), np.array([[1.0, 2.0, 3.0]]))
    assert t[0] == 1.5
    np.testing.assert_array_equal(x[0], [1, 2, 3])
