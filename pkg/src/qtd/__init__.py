"""Semi-classical quantum thermodynamics of closed, undecomposed systems.

The state is a weight vector over a moving orthonormal basis.  The basis
follows the Schrodinger equation; the weights follow constitutive rate laws
that split into an isolated (entropy producing) and an exchange part.
"""

from .config import TOL, PhysicalConstants, Tolerances
from .contact import (ContactTemperature, contact_inequality_check, contact_temperature,
                      theta_from_exchange)
from .dynamics import (Constitutive, EnvironmentModel, Integration, Trajectory, WorkProtocol,
                       heat_flux, integrate, run, step)
from .equilibrium import (EquilibriumReport, canonical, classify_process, detect_equilibrium,
                          microcanonical)
from .errors import *  # noqa: F401,F403
from .io import emit, read_json
from .operators import (HermitianOperator, OrthonormalBasis, eigendecompose, evolve_basis,
                        expectation)
from .propagators import (ExchangeConstruction, IrreversibilityMap, PropagatorSplit,
                          build_irreversibility_map, exchange_rate, iso_rate, isolate)
from .report import invariant_report
from .scenario import Scenario, parse_scenario, preset, preset_names
from .state import (DensityState, assemble_density, assemble_propagator, log_weights,
                    shannon_entropy)
from .thermo import (ThermoRecord, energy, entropy_exchange, entropy_production, entropy_rate,
                     first_law_residual, force_I, force_II, heat_exchange, power_exchange)

__version__ = "0.1.0"
