"""
Geometry of the Darboux-Halphen system
======================================

The fields ``v, u = 2x, w = (1,1,1)`` span an sl(2) action. Their dual
coframe ``(beta, alpha, gamma)`` obeys Maurer-Cartan equations, and the
Godbillon-Vey class ``alpha ^ d alpha`` is the invariant volume, nowhere
zero away from the coincidence planes ``x = y``, ``y = z``, ``z = x``.

Run with ``python3 gallery/demo_halphen_geometry.py``.
"""

import numpy as np

from hamflow import expr as ex
from hamflow import halphen as H
from hamflow.dynamics import integrate_ode
from hamflow.errors import DenominatorZero
from hamflow.exterior import ext_d, wedge

fx = H.fixtures()
p = (1.0, 2.0, 4.0)
pts = H.admissible_points(np.random.default_rng(7), 100)

###############################################################################
# Brackets and duality
# --------------------

for name, tr in H.triples().items():
    res = H.sl2_bracket_residuals(tr, pts, 0.3)
    print(f"sl(2) triple {tr.name:16s} max residual {max(res.values()):.1e}")
print("rho^{-1}(1,2,4) =", ex.evaluate(fx.rho_inv, p))
print("pairing matrix at (1,2,4):\n", np.round(H.dual_pairing_matrix(p), 12) + 0.0)

###############################################################################
# Coframe identities
# ------------------

geo = H.geometry_residuals(pts)
for name, chk in geo.checks.items():
    print(f"  {name:24s} {chk.max_residual:.1e}")
print("alpha ^ d alpha at (1,2,4):", ex.evaluate(
    wedge(fx.alpha, ext_d(fx.alpha)).coefficient, p), "(rho =", ex.evaluate(fx.rho, p), ")")

###############################################################################
# Integrating factor and holonomy
# -------------------------------
# ``d gamma = 2 alpha ^ gamma`` gives ``xi = 2 alpha`` in the gauge ``i_w xi = 0``.
# Loop integrals of ``alpha`` around shrinking squares approach the flux of
# ``d alpha``, which is nonzero: ``alpha`` is not closed.

cf = H.closed_scaled_forms_check(pts[:20])
print(f"\nxi - 2 alpha: {cf.xi_minus_2alpha:.1e}, xi closed: {cf.xi_closed}")
hol = H.holonomy_demo()
for r, loop, err in zip(hol.sides, hol.loops, hol.scaled_errors):
    print(f"  side {r:<6} loop {loop: .3e}  |loop/r^2 - flux| = {err:.2e}")

###############################################################################
# Halphen transformations
# -----------------------
# Solutions of the summed system map to solutions under
# ``t -> (at+b)/(ct+d)`` with the matching affine change of ``x``.

traj = integrate_ode(H.halp_field(), (0.1, 0.2, 0.35), (0.1, 1.0), h=1e-3)
for T in (H.HalphenTransform(1, 1, 0, 1), H.HalphenTransform(2, 0, 0, 1), H.HalphenTransform(0, 1, -1, 0)):
    print(f"\n{T}: residual {H.halphen_transform_check(traj, T).max:.1e}", end="")
crossing = integrate_ode(H.halp_field(), (0.1, 0.2, 0.35), (-0.5, 0.5), h=1e-2)
try:
    H.halphen_transform_check(crossing, H.HalphenTransform(0, 1, -1, 0))
except DenominatorZero as err:
    print(f"\ncrossing t = 0: {err}")
