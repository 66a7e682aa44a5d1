"""
hamflow
=======

Hamiltonian structure of three-dimensional autonomous flows: symbolic
expressions and exterior calculus on R^3, Frenet-Serret frames and helicity
densities, Poisson vectors from Riccati integration along streamlines,
integrating factors and Casimir reconstruction, and an executable
verification of the Darboux-Halphen system.
"""

__version__ = "0.1.0"

from .errors import (CurlEigenvectorError, DegenerateIntegrand, DegreeError, DenominatorZero,
                     EquilibriumError, EvalDomainError, ExprSyntaxError, FrameError, FrameLost,
                     HamflowError, NotClosed, NotIntegrable, ObstructionGodbillonVey,
                     PencilSingular, SingularityHit, SingularityOnPath, SpecError, StepFailure)
from .expr import Expr, differentiate, evaluate, lambdify, parse, to_string
from .exterior import (Bivector3, DifferentialForm, ExtendedField, VectorField3, bivec_to_vec,
                       bracket, bracket_extended, curl, div, ext_d, flat, grad, interior,
                       lie_derivative, sharp, vec_to_bivec, volume_form, wedge)
from .frenet import (FrameSample, FrenetFrame, HelicitySample, StructureClass, Verdict,
                     classify_structure, directional_derivatives_at, frame_at, helicities_at)
from .dynamics import (Drift, ParametricLoop, Polyline, Trajectory, integrate_ode, line_integral,
                       observe_drift, regular_polygon, square_loop)
from .poisson import (CasimirReport, ExplicitCoefficients, HomotopyPotential, IntegratingFactor,
                      PoissonVectorReport, ResidualStats, RiccatiPath, hamiltonian_residual,
                      homotopy_potential, integrating_factor, jacobi_residual, jacobi_stats,
                      pencil_compatibility, poisson_from_riccati, reconstruct_casimir,
                      riccati_consistency, riccati_integrate)
from .sampling import make_rng, sample_box

__all__ = [name for name in dir() if not name.startswith("_")]
