"""Gauge-P phase-space simulations of bosonic master equations.

Weighted stochastic trajectories with drift and diffusion gauges, exact
truncated number-state references, and figure-reproduction recipes.
"""

__version__ = "0.1.0"

from . import backend
from .errors import (GaugePError, ConfigurationError, UnsupportedInputError, DivergenceAbort,
                     TruncationError)
from .ensemble import (TrajectoryState, NoiseStream, Ensemble, init_coherent, init_gaussian,
                       to_number_representation, gaussian_block)
from .models import (ModelSpec, AbsorberParams, LaserParams, KerrParams, absorber_model,
                     laser_model, laser_number_model, kerr_model, weight_toy_model,
                     laser_stationary, MODELS)
from .gauges import (DriftGauge, GaugedSystem, DiffusionGauge, apply_drift_gauge,
                     apply_diffusion_gauge, circular_gauge, constant_gauge, laser_gauge,
                     laser_number_gauge, laser_safe_lambda, norm_preserving_gauge, zero_gauge,
                     classify_gauge, canonical_factor, diffusion_transform)
from .integrator import (StepConfig, DivergenceReport, TrajectoryRecordSet, step_ito,
                         step_strat, run_ensemble, run_schedule, ramp_schedule)
from .estimator import (MomentEstimate, MomentSeries, WeightDiagnostics, ComparisonReport,
                        moment, weight_diagnostics, compare_series)
from .fock import (FockDensityMatrix, coherent_rho, fock_rho, evolve_absorber, evolve_kerr,
                   absorber_steady_coherent, absorber_steady_parity)
