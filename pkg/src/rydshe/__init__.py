"""rydshe: spin-resolved beam shifts off a glass-Rydberg-glass stack.

Computes the nonlocal nonlinear susceptibility of an interacting
Rydberg gas under ladder EIT, dresses the middle layer of a planar
glass-atoms-glass stack with it, and propagates a Gaussian probe
through the angular-spectrum reflection operator to obtain the
spin-resolved transverse centroid shifts of the reflected beam.
"""

__version__ = "0.1.0"

from .errors import (RydsheError, DomainError, SingularityError,
                     ConvergenceError, PropagationError, SearchError,
                     WindowError, ConfigError)
from .quantum import (AtomParams, DriveParams, ComplexDenominators,
                      CorrelatorSet, SusceptibilityBreakdown,
                      derive_dipole_moment, blockade_radius,
                      first_order_coherences, second_order_onebody,
                      second_order_twobody, third_order_twobody,
                      nonlocal_integral, third_order_coherence,
                      susceptibility)
from .multilayer import (Layer, LayerStack, FresnelPair, refraction_cosine,
                         layer_matrix, stack_matrix, stack_fresnel,
                         stack_fresnel_pair, brewster_angle)
from .beam_shift import (BeamSpec, SpinFields, ShiftResult,
                         incident_spectrum, reflected_spin_spectra,
                         reflected_field, centroid, analytic_gaussian_shift,
                         shifts_from_coefficients, pshe_shifts, medium_index,
                         intensity_profiles, intensity_maps_2d)
from .oracle import (DensityMatrix3, full_local_bloch_steady_state,
                     quadrature_refine, verify_suite, canonical_atom,
                     canonical_drive, canonical_stack)
from .config import RunConfig, parse_config, serialize_config
from .sweeps import SweepResult, run_sweep, emit

__all__ = [name for name in dir() if not name.startswith("_")]
