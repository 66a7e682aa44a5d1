"""
Frenet frames and helicity densities
====================================

A nonvanishing field ``v`` carries an orthonormal frame ``(t, n, b)`` built
from its unit tangent and the curvature of its streamlines. The three
helicities ``H_n = n . curl n``, ``H_nb`` and ``H_b = b . curl b`` decide
whether ``n + mu b`` can be a global Poisson vector with constant ``mu``.

Run with ``python3 gallery/demo_frenet_helicities.py``.
"""

import numpy as np

from hamflow.exterior import VectorField3
from hamflow.frenet import FrenetFrame, classify_structure
from hamflow.halphen import admissible_points
from hamflow.sampling import sample_box

###############################################################################
# The rotation field
# ------------------
# Streamlines are horizontal circles, so ``n`` points to the axis and
# ``b = e_z``. All three helicities vanish identically.

rot = VectorField3.parse(["-y", "x", "0"])
frame = FrenetFrame(rot)
s = frame.frame_at((1.0, 0.0, 0.0))
print("rotation frame at (1,0,0):")
print("  t =", s.t, " n =", s.n, " b =", s.b)
print("  helicities:", frame.helicities_at((0.3, -1.2, 0.7)).values)

rng = np.random.default_rng(0)
pts = sample_box(rng, 50, ((-2, 2), (-2, 2), (-1, 1)), ["x^2 + y^2"], 1e-2)
print("  verdict:", classify_structure(frame, pts).verdict.value)

###############################################################################
# The Darboux-Halphen field
# -------------------------
# Here the helicities do not vanish, so constant ``mu`` is not enough and the
# Riccati equation along streamlines is needed.

hal = VectorField3.parse(["y*z - x*y - x*z", "x*z - x*y - y*z", "x*y - x*z - y*z"])
hframe = FrenetFrame(hal)
print("\nDarboux-Halphen at (1,2,4):")
print("  v =", hal.evaluate((1, 2, 4)))
print("  helicities (H_n, H_nb, H_b):", hframe.helicities_at((1, 2, 4)).values)
cls = classify_structure(hframe, admissible_points(rng, 50))
print(f"  verdict: {cls.verdict.value} (max |H| = {cls.max_helicity:.3g})")

###############################################################################
# The three-forms agree with the helicities
# -----------------------------------------
# ``Omega_n = eta ^ d eta`` and its companions are computed through the
# exterior algebra; their coefficients reproduce the vector-calculus values.

p = np.array([0.4, 1.1, 1.9])
print("\nhelicities   :", hframe.helicities_at(p).values)
print("three-forms  :", hframe.three_form_coefficients_at(p))
