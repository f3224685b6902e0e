"""Two-mode squeezing and photon statistics of a coherently pumped correlated emission laser."""
from .closed_form import (MomentCurve, MomentState, SpectralDecomposition, is_squeezed,
                          mean_photon_pairs, moment_curve, propagators, quadrature_variances,
                          second_moments, spectral)
from .errors import (CelsimError, CutoffExceeded, DegenerateSpectrum, NumericalError,
                     NumericalInstability, ParameterError, SingularDrift, StepTooLarge)
from .fock_oracle import TruncatedState, evolve, liouvillian_apply
from .moment_ode import integrate_moments, steady_state
from .params import (DriftDiffusion, ReducedParams, SystemParams, derive, drift_diffusion,
                     gamma_ratio_params)
from .sweep_io import CurveRecord, SweepSpec, preset, read_records, run_sweep, write_records

__version__ = "0.1.0"

__all__ = [
    "SystemParams", "ReducedParams", "DriftDiffusion", "derive", "drift_diffusion",
    "gamma_ratio_params",
    "SpectralDecomposition", "MomentState", "MomentCurve", "spectral", "propagators",
    "moment_curve", "second_moments", "quadrature_variances", "mean_photon_pairs",
    "is_squeezed",
    "integrate_moments", "steady_state",
    "TruncatedState", "liouvillian_apply", "evolve",
    "SweepSpec", "CurveRecord", "preset", "run_sweep", "read_records", "write_records",
    "CelsimError", "ParameterError", "NumericalError", "DegenerateSpectrum",
    "NumericalInstability", "StepTooLarge", "SingularDrift", "CutoffExceeded",
]
