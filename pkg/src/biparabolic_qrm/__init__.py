"""Source identification for the bi-parabolic heat equation by quasi-reversibility.

The unknown spatial source ``f`` is recovered from the final-time state
``h = T f`` on a box with Dirichlet walls.  Everything is diagonal in the
Laplacian eigenbasis, so the library works with coefficient vectors.
"""

from .errors import (
    CertificateError,
    ExperimentError,
    IllConditionedError,
    NoSolutionError,
    QuadratureError,
)
from .harness import (
    ExperimentSpec,
    RateReport,
    add_noise,
    conditional_stability_check,
    decay_source,
    random_source,
    run_rate_experiment,
    weyl_ratio_check,
)
from .modulus import (
    ModulusQuery,
    modulus_bounds,
    modulus_closed_form,
    modulus_oracle,
    optimality_check,
)
from .operators import ForwardOperator, illposedness_demo
from .profile import (
    AdmissibilityReport,
    ConstantProfile,
    PiecewiseTrigProfile,
    PolynomialProfile,
    TabulatedProfile,
    TemporalProfile,
    TrigPiece,
    check_assumption,
    lower_bound_constant,
    mu_coefficient,
    mu_sequence,
    sign_changing_profile,
)
from .qrm import (
    Aposteriori,
    Apriori,
    Manual,
    Reconstruction,
    RegularizerConfig,
    apriori_alpha,
    bias_bound,
    discrepancy,
    morozov_select,
    noise_bound,
    qrm_invert,
)
from .spectral import (
    SmoothnessClass,
    SpectralCoefficients,
    SpectralDomain,
    eigenvalue,
    evaluate_pointwise,
    hp_norm,
    in_source_set,
)

__version__ = "0.1.0"
