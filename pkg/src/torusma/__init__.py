"""torusma: invariant almost-Kahler frame data on T^2-bundles over the
2-torus, reduction to a generalized Monge-Ampere equation, a Newton /
continuation solver for it, and round-trip verification of the original
PDE systems."""

__version__ = "0.1.0"

from .errors import (DegenerateE2, ExhaustedRetries, ExplicitCaseG33Zero,
                     GridMismatch, HomotopyFailed, InvalidFrame,
                     LinearSolveFailed, LineSearchFailed, NonzeroMeanU,
                     NotExplicitCase, PeriodicityCheckFailed, SingularMatrix,
                     TorusMAError, UnnormalizedF)
from .frames import (FrameSpec, GroupCase, ValidationReport, frame_from_dict,
                     frame_to_dict, invert_frame, sample_admissible, validate)
from .grid import (BACKENDS, FD2, SPECTRAL, NormReport, TorusField, TorusGrid,
                   cumulative_integral, derivative, field_from_modes,
                   integral_mean, mixed_second, normalize_F,
                   project_zero_mean, sup_norms, zeros)
from .macoeffs import (MACoefficients, check_hypotheses, coefficients,
                       coefficients_from_dict, coefficients_to_dict,
                       nil_coefficients, sol_coefficients)
from .reconstruct import (ExplicitReport, OneFormField, SystemResidualReport,
                          nil_explicit_g33zero, nil_one_form, one_form,
                          sol_one_form, system_residuals)
from .solver import (JACOBIAN_EXACT, JACOBIAN_SHIFTED, OperatorTriple,
                     SolveReport, SolverConfig, StageRecord, apply_jacobian,
                     apriori_bound, continuity_solve, ellipticity,
                     newton_step, operator_fields, residual)

__all__ = [name for name in dir() if not name.startswith("_")]
