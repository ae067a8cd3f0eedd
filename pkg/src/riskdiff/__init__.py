"""Exact and asymptotic inference for the difference of two binomial
proportions, built for noninferiority trials.

The library covers the score statistics (Mee, Miettinen-Nurminen,
Wald), the exact unconditional test, the exact-corrected (EC)
statistic, confidence sets by test inversion (including the gap-filled
exact interval), scanners that certify the known pathologies of these
constructions, and enumeration-based coverage evaluation.

Differences are handled internally on the cap scale d = p_T - p_C; the
noninferiority boundary for a margin m > 0 sits at d = -m.  The CLI
also speaks the literature's delta = p_C - p_T convention.
"""

from .ci import (ConfidenceSet, invert_asymptotic, invert_cz_exact,
                 invert_ec, noninferiority_decision)
from .coverage import (CoverageCell, CoverageSurface, coverage_surface,
                       exact_coverage)
from .diagnostics import (LiberalConservativeMap, MapRow,
                          ViolationCertificate, liberal_conservative_map,
                          scan_ci_nesting, scan_margin_coherence,
                          scan_pexact_monotonicity, scan_zec_monotonicity)
from .ec import (EcCalibration, ZecExtremum, calibrate_ec,
                 find_zec_extremum, z_ec)
from .errors import DegenerateCalibrationError, DomainError, UsageError
from .exact import (ExactPValue, TailSet, exact_pvalue,
                    feasible_nuisance_interval, tail_prob, tail_set)
from .kernel import (JointModel, Outcome, TrialDesign, enumerate_outcomes,
                     inverse_normal_cdf, joint_outcome_prob, log_binom_pmf,
                     log_choose, normal_cdf, normal_sf)
from .score import (RestrictedMle, StatValue, p_asy, restricted_mle,
                    unrestricted_estimate, z_mee, z_mn, z_wald)

__version__ = "0.1.0"

__all__ = [
    "ConfidenceSet",
    "CoverageCell",
    "CoverageSurface",
    "DegenerateCalibrationError",
    "DomainError",
    "EcCalibration",
    "ExactPValue",
    "JointModel",
    "LiberalConservativeMap",
    "MapRow",
    "Outcome",
    "RestrictedMle",
    "StatValue",
    "TailSet",
    "TrialDesign",
    "UsageError",
    "ViolationCertificate",
    "ZecExtremum",
    "calibrate_ec",
    "coverage_surface",
    "enumerate_outcomes",
    "exact_coverage",
    "exact_pvalue",
    "feasible_nuisance_interval",
    "find_zec_extremum",
    "invert_asymptotic",
    "invert_cz_exact",
    "invert_ec",
    "inverse_normal_cdf",
    "joint_outcome_prob",
    "liberal_conservative_map",
    "log_binom_pmf",
    "log_choose",
    "noninferiority_decision",
    "normal_cdf",
    "normal_sf",
    "p_asy",
    "restricted_mle",
    "scan_ci_nesting",
    "scan_margin_coherence",
    "scan_pexact_monotonicity",
    "scan_zec_monotonicity",
    "tail_prob",
    "tail_set",
    "unrestricted_estimate",
    "z_ec",
    "z_mee",
    "z_mn",
    "z_wald",
]
