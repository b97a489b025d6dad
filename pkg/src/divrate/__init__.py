"""Diversity index and entropy estimation with Berry-Esseen rate verification.

Modules
-------
distributions
    Countable-alphabet laws with exact tail functionals and inverse-CDF sampling.
indices
    Power-family indices and Shannon entropy: population values, sigma^2, beta, gamma.
estimators
    Plug-in, Miller-Madow and jackknife estimators, plus scikit-learn style wrappers.
oracle
    Exact sampling laws on small alphabets by multinomial enumeration.
montecarlo
    Seeded, parallel-invariant rate experiments.
"""

__version__ = "0.1.0"

from .distributions import (
    ConditionReport, Distribution, Finite, Geometric, LogQuartic, PerturbedUniform, Zipf,
    check_conditions, from_config,
)
from .estimators import (
    DiversityEstimator, DiversityTransformer, Estimate, confidence_interval, estimate,
    jackknife, miller_madow, plugin_index, shannon_plugin,
)
from .indices import (
    SHANNON, SIMPSON, IndexSpec, gamma_of, holder_beta, parse_index, population_summary,
    shannon_entropy, shannon_sigma_sq, sigma_sq, theta,
)
from .montecarlo import (
    DegenerateConfigError, ExperimentConfig, RateReport, kolmogorov_distance, rate_fit,
    run_experiment,
)
from .oracle import (
    AtomicLaw, OracleGuardError, exact_bias, exact_estimator_law, exact_kolmogorov,
    jackknife_bias_identity, verify_moment_bound,
)
from .validation import SampleCounts

__all__ = [
    "__version__",
    "Distribution", "Finite", "PerturbedUniform", "Zipf", "Geometric", "LogQuartic",
    "from_config", "check_conditions", "ConditionReport",
    "IndexSpec", "SIMPSON", "SHANNON", "parse_index", "holder_beta", "gamma_of", "theta",
    "sigma_sq", "shannon_entropy", "shannon_sigma_sq", "population_summary",
    "SampleCounts", "Estimate", "plugin_index", "shannon_plugin", "miller_madow",
    "jackknife", "estimate", "confidence_interval", "DiversityEstimator",
    "DiversityTransformer",
    "AtomicLaw", "OracleGuardError", "exact_estimator_law", "exact_kolmogorov",
    "verify_moment_bound", "exact_bias", "jackknife_bias_identity",
    "ExperimentConfig", "RateReport", "DegenerateConfigError", "kolmogorov_distance",
    "rate_fit", "run_experiment",
]
