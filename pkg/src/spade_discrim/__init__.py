"""Source discrimination with crosstalk-affected spatial-mode demultiplexing."""
from .chernoff import (
    ChernoffResult,
    chernoff_exponent,
    direct_imaging_chernoff,
    direct_imaging_chernoff_asymptotic,
    q_s,
    quantum_bound,
    spade_chernoff_asymptotic,
)
from .decision_rules import (
    BinaryLRT,
    CountsRecord,
    ErrorReport,
    FullLRT,
    NaiveMean,
    Original,
    SemiSeparation,
    ZetaFamily,
    asymptotic_classification,
    binomial_cdf,
    crosstalk_p0,
    decide,
    error_probs_exact,
    error_probs_gaussian,
    full_lrt_decide,
    gamma_coefficient,
    parse_rule,
    plan_experiment,
    small_sep_prob,
    threshold,
)
from .montecarlo import (
    empirical_error_rates,
    gell_mann_basis,
    random_crosstalk,
    sample_counts,
    summarize,
)
from .optics import (
    CrosstalkMatrix,
    ImagingConfig,
    ModeDistribution,
    crosstalk_overlaps,
    crosstalk_strength,
    direct_imaging_intensity,
    hg_overlap_ideal,
    identity_crosstalk,
    mode_probabilities,
    uniform_crosstalk,
)

__version__ = "0.1.0"
