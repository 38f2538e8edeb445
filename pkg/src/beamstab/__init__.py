"""Numerical stability laboratory for thermoelastic beam systems.

Curved (Bresse) and straight (Timoshenko) beams coupled to heat conduction
through a memory convolution, a relaxed flux law, or the classical law;
exact modal decomposition, stability-number classification, resolvent and
decay measurements, and the explicit lower-bound resonance sequences.
"""

from .errors import (AdmissibilityError, BeamstabError, DomainError, FitError,
                     InfeasibleError, NumericError, SingularWeightError,
                     SpecError, SpectralPointError, UnsupportedMapError)
from .kernels import (AdmissibilityReport, Masses, MemoryKernel, cg_mix,
                      check_admissibility, exponential_kernel, fourier_mu,
                      kernel_from_config, masses, mu_at, normalized, prony_kernel,
                      rescaled, rl_defect, tabulated_kernel)
from .model import (EXPONENTIAL, MODELS, POLY_SQRT, BeamCoefficients,
                    StabilityReport, SystemSpec, check_physical, classify,
                    mode_condition, stability_numbers, tune_chi_zero)
from .modal import (DissipationInfo, MemoryGrid, ModeSystem, assemble,
                    dissipation_rate, make_grid, omega, weight_matrix)
from .resolvent import (DetCheck, GrowthFit, LowerBoundSequence,
                        ResolventSample, SpectralAbscissa, det_check,
                        fit_growth, lower_bound, mn_matrix,
                        mode_resolvent_norm, spectral_abscissa, sweep)
from .dynamics import (DecayFit, ModalState, Trajectory, decay_fit,
                       lambda_lift, lambda_map, mc_twin, propagate,
                       semiuniform_norm, semiuniform_series, singular_limit)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
