"""Classical simulation and error-bound toolkit for noisy boson sampling."""

__version__ = "0.1.0"

from .bounds import (
    asymptotic_k,
    expected_distance_bound,
    k_of_failure_budget,
    markov_failure_probability,
    min_transmission_for_size,
    minimal_k,
    postselection_margin,
    variable_m_distance_bound,
)
from .ensembles import RngSeed, sample_gaussian_matrix, sample_haar_unitary
from .exact import (
    NoiseModel,
    full_distribution_exact,
    ideal_distribution_with_collisions,
    photon_number_weight,
    prob_given_input,
    prob_postselected,
)
from .matrices import hadamard_conj_rowperm, permanent, permanent_batch, submatrix
from .sampler import SamplerConfig, m_window, sample_fixed_m, sample_full, sample_joint
from .truncation import (
    ExpansionCoefficients,
    TruncationSpec,
    expansion_coefficient,
    expansion_coefficients,
    monte_carlo_cj_variance,
    truncated_probability,
    truncation_variance_bound,
    variance_bound_cj,
)

__all__ = [
    "NoiseModel",
    "RngSeed",
    "SamplerConfig",
    "TruncationSpec",
    "ExpansionCoefficients",
    "asymptotic_k",
    "expansion_coefficient",
    "expansion_coefficients",
    "expected_distance_bound",
    "full_distribution_exact",
    "hadamard_conj_rowperm",
    "ideal_distribution_with_collisions",
    "k_of_failure_budget",
    "m_window",
    "markov_failure_probability",
    "min_transmission_for_size",
    "minimal_k",
    "monte_carlo_cj_variance",
    "permanent",
    "permanent_batch",
    "photon_number_weight",
    "postselection_margin",
    "prob_given_input",
    "prob_postselected",
    "sample_fixed_m",
    "sample_full",
    "sample_gaussian_matrix",
    "sample_haar_unitary",
    "sample_joint",
    "submatrix",
    "variable_m_distance_bound",
    "truncated_probability",
    "truncation_variance_bound",
    "variance_bound_cj",
]
