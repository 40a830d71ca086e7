"""Thermodynamic formalism and finite-dimensional large deviations on
subshifts of finite type."""

from .convex import ess_strict_convexity_check, grad_L, kink_scan, legendre, log_mgf, mean_set_gap
from .errors import ConvergenceError, InputError, ResourceLimitError, SftLabError
from .ldp import EmpiricalLaw, PushforwardLaw, ball_log_probability, finite_n_mgf, gartner_audit
from .pressure import (
    PressureReport,
    directional_derivatives,
    gateaux_check,
    pressure_direct,
    pressure_spectral,
)
from .rate import RateFunctionHandle, duality_audit, level2_rate, rate_dual, rate_primal
from .schauder import CylinderBasis, expand, lemma14_span_check, perturbation_condition
from .sft import (
    FailureCertificate,
    MarkovMeasure,
    Potential,
    Sft,
    bernoulli,
    birkhoff_sum,
    entropy,
    enumerate_words,
    ergodic_approximation,
    expectation,
)

__version__ = "0.1.0"
