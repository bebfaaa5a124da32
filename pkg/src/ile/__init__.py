"""Engineering superpositions of coherent states on a phase-space line
for the centre-of-mass vibrational mode of a string of trapped ions.

Subpackages
-----------
fock        truncated number-basis numerics (the oracle layer)
chain       ion-crystal equilibrium, normal modes, sideband couplings
protocol    the conditional-measurement protocol on the COM mode alone
inverse     planner: target coefficients -> internal-state weights
multimode   all longitudinal modes at once: leakage and integrator referee
cli         command-line front end
"""

__version__ = "0.1.0"

from . import fock, chain, protocol, inverse, multimode  # noqa: F401
from .errors import SolverError, IntegratorError  # noqa: F401
