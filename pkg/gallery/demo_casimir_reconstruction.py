"""
Reconstructing a Casimir
========================

Given a Poisson vector ``J`` with ``J . curl J = 0``, the 1-form
``eta = flat(J)`` satisfies ``d eta = xi ^ eta``. If ``xi`` is closed,
``xi = d phi`` and ``e^{-phi} eta = dC``: the Casimir ``C`` comes from two
homotopy integrals. When ``xi`` is not closed the construction stops.

Run with ``python3 gallery/demo_casimir_reconstruction.py``.
"""

import numpy as np

from hamflow import expr as ex
from hamflow.dynamics import integrate_ode, observe_drift
from hamflow.errors import ObstructionGodbillonVey
from hamflow.exterior import DifferentialForm, VectorField3, grad, sharp
from hamflow.halphen import admissible_points, fixtures
from hamflow.poisson import homotopy_potential, reconstruct_casimir
from hamflow.sampling import sample_box

rng = np.random.default_rng(1)

###############################################################################
# A potential by the homotopy formula
# -----------------------------------

pot = homotopy_potential(DifferentialForm.one_form("y", "x", 0))
print(f"potential of y dx + x dy at (2,3,0): {pot((2, 3, 0)):.12f}")

###############################################################################
# The rotation field
# ------------------
# ``J = (-x, -y, 0)`` is a gradient, so ``xi = 0`` and ``C = -(x^2+y^2)/2``.

rot = VectorField3.parse(["-y", "x", "0"])
pts = sample_box(rng, 20, ((-2, 2), (-2, 2), (-1, 1)), ["x^2 + y^2"], 1e-2)
rep = reconstruct_casimir(rot, VectorField3.parse(["-x", "-y", "0"]), pts)
for p in pts[:3]:
    print(f"C{tuple(np.round(p, 3).tolist())} = {rep.casimir(p): .8f}, -(x^2+y^2)/2 = {-(p[0]**2 + p[1]**2) / 2: .8f}")
print(f"grad C . v over the samples: {rep.conserved.max:.1e}")

###############################################################################
# The Euler top
# -------------
# With ``J = grad(x^2 - y^2)/4`` the reconstructed Casimir is conserved along
# trajectories, until the orbit from ``(1, 0.8, 0.6)`` escapes to infinity
# near ``t = 1.2553``.

euler = VectorField3.parse(["y*z", "z*x", "x*y"])
rep = reconstruct_casimir(euler, grad(ex.parse("x^2 - y^2")).scale(0.25), rng.uniform(-1, 1, (10, 3)))
traj = integrate_ode(euler, (1.0, 0.8, 0.6), (0.0, 1.0), h=1e-3)
vals = rep.casimir(traj.x[::100])
print(f"\nEuler top Casimir along t in [0,1]: {np.round(vals, 10)}")
for f in ("x^2 - y^2", "y^2 - z^2"):
    print(f"relative drift of {f}: {observe_drift(traj, f).relative:.1e}")

###############################################################################
# Darboux-Halphen: the obstruction
# --------------------------------
# For ``J = sharp(gamma)`` the factor ``xi`` has ``d xi != 0``, so no Casimir
# exists on any neighbourhood covered by the samples.

fx = fixtures()
try:
    reconstruct_casimir(fx.v, sharp(fx.gamma), admissible_points(rng, 10), base=(1, 2, 4))
except ObstructionGodbillonVey as err:
    print(f"\nDarboux-Halphen: {type(err).__name__}")
    print(f"  |xi ^ d xi| ranges over [{np.min(np.abs(err.xi_wedge_dxi)):.3g}, "
          f"{np.max(np.abs(err.xi_wedge_dxi)):.3g}]")
