"""Equilibrium Casimir interactions of non-reciprocal point particles.

Matsubara-summed coupled-dipole free energies, reciprocity
decompositions, forces, Laplacian stability maps and leading-order
three-body potentials, with closed-form asymptotic oracles for
validation and a reproducible CLI.
"""

__version__ = "0.1.0"

from .asymptotics import CrossoverScan, ToyGeometry, crossover_scan, f_long, f_short
from .errors import (ConfigError, ConsistencyError, ConvergenceError,
                     EngineError, GeometryError, NoisyLaplacianWarning,
                     ResonanceError, StrongCouplingError)
from .fieldmap import (AngleScan, GridSpec, MapResult, StationaryPoint,
                       classify_hessian, evaluate_map, scan_angle)
from .greens import (green_dyadic, green_gradient, green_scaled,
                     green_scaled_gradient, green_static_scaled)
from .interaction import (DIPOLE_COUPLING, MIN_SEPARATION_LAMBDA, PairResult,
                          ParticleSpec, RoundTrip, force,
                          free_energy_exact_dipole,
                          free_energy_one_reflection, hessian, laplacian,
                          pair_free_energy_batch, round_trip)
from .manybody import (Scene, axis_rotation_torque_3, forces_3,
                       net_force_and_torque, three_body_correction,
                       total_free_energy_3)
from .materials import (MagnetoOpticalModel, PolarizabilityTensor,
                        ToyPolarizability, cm_polarizability, cross_generator,
                        mo_permittivity, split_reciprocal, toy_alpha)
from .thermal import (DEFAULT_POLICY, KAPPA_D_CUTOFF, MatsubaraPolicy,
                      ThermalContext, matsubara_kappa)
