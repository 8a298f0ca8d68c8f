"""Breather and rogue-wave fields of curl-curl wave equations via phase-plane period maps."""
from __future__ import annotations

__version__ = "0.1.0"

from .errors import (CurlWaveError, DomainError, ExpressionError, GrowthError, IoError, MissingLimit,
                     NonConvergence, ParseError, QuadratureFailure, SingularPoint, ValidationError)
from .phase_plane import (OdeCase, Orbit, PhasePoint, Variant, a_inverse, amplitude_bounds, first_integral,
                          homoclinic, integrate_orbit, normalized_small_orbit)
from .period_maps import (PeriodMap, c_range, invert_period, period, period_derivative_limit,
                          period_derivative_rogue, period_limit, phi_function)
from .geometry import (CoefficientProfiles, Family, GeometryProfile, accumulation_set_probe,
                       check_compatibility, eval_direction)
from .synthesis import (FieldKind, WaveField, apply_phase_shift, synth_breather, synth_dark_breather,
                        synth_dark_constant, synth_explicit_rogue, synth_monochromatic, synth_rogue,
                        synth_rogue_approximant)
from .grids import GridSpec
from .verification import (Diagnostics, convergence_check, decay_fit, holder_check, ode_residual,
                           parallelism, periodicity_defect, run_suite)
from .config import RunConfig, parse_config
from .export import export_diagnostics, export_field, read_field_csv
