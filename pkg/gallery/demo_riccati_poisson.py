"""
Poisson vectors from the projective Riccati equation
====================================================

Along a streamline, ``J = n + mu b`` satisfies the Jacobi condition
``J . curl J = 0`` when ``mu`` solves a Riccati equation whose coefficients
are the helicities. Writing ``mu = p/q`` turns it into a linear system that
passes through poles of ``mu`` without trouble.

Run with ``python3 gallery/demo_riccati_poisson.py``.
"""

import math

import numpy as np

from hamflow.exterior import VectorField3
from hamflow.poisson import (ExplicitCoefficients, pointwise_angles, poisson_from_riccati,
                             riccati_consistency, riccati_integrate)

###############################################################################
# Through a pole
# --------------
# With ``H_n = H_b = 1, H_nb = 0`` the equation is ``mu' = 1 + mu^2`` and
# ``mu = tan(s)``. The projective pair ``(p, q)`` stays on the unit circle.

path = riccati_integrate(ExplicitCoefficients.constant(1, 0, 1), mu0=0.0, s_max=4.0, h=1e-3)
for s in (0.5, 1.0, 2.0, 3.0, 4.0):
    print(f"s = {s:.1f}: mu = {path.mu_at(s): .10f}, tan(s) = {math.tan(s): .10f}")
k = int(np.argmin(np.abs(path.q)))
print(f"closest to the pole: s = {path.s[k]:.4f}, q = {path.q[k]:.2e}")

###############################################################################
# A field-driven path
# -------------------
# For the Darboux-Halphen field the coefficients come from the symbolic
# frame at each point of the streamline. The consistency residual compares a
# finite difference of ``mu`` with the right-hand side.

hal = VectorField3.parse(["y*z - x*y - x*z", "x*z - x*y - y*z", "x*y - x*z - y*z"])
hpath = riccati_integrate(hal, (0.4, 1.1, 1.9), mu0=0.3, s_max=0.3, h=1e-3)
cons = riccati_consistency(hpath)
print(f"\nHalphen path: {len(hpath.s)} samples, consistency residual {np.nanmax(np.abs(cons)):.2e}")
rep = poisson_from_riccati(hal, riccati_integrate(hal, (0.4, 1.1, 1.9), mu0=0.3, s_max=0.2, h=1e-2))
print(f"Jacobi residual along the path {rep.jacobi_stats.max:.2e}, routes agree: {rep.routes_agree()}")

###############################################################################
# Two seeds, two structures
# -------------------------
# The rotation field has vanishing helicities, so any constant ``mu`` works.
# Different seeds give pointwise independent Poisson vectors.

rot = VectorField3.parse(["-y", "x", "0"])
reps = [poisson_from_riccati(rot, riccati_integrate(rot, (1, 0, 0.2), mu0=m, s_max=5.0, h=1e-2))
        for m in (0.0, 1.0)]
print(f"\nrotation: Jacobi residuals {[f'{r.jacobi_stats.max:.1e}' for r in reps]}")
print(f"smallest angle between the two J's: {np.min(pointwise_angles(reps[0].J, reps[1].J)):.4f} rad")
