"""Effective fading-gain statistics under strongest-BS cell selection in
K-tier Poisson heterogeneous networks: closed forms, quadrature and Monte
Carlo."""

__version__ = "0.1.0"

from .association import (
    AssociationTable,
    GPair,
    NetworkConfig,
    TierConfig,
    assoc_prob_table,
    conditional_assoc_prob,
    conditional_assoc_total,
    g_pair_general,
    g_pair_nakagami,
    tier_assoc_prob,
    tier_bias,
)
from .fading import (
    EffectiveFadingDistribution,
    FadingModel,
    NakagamiFading,
    effective_cdf,
    effective_cdf_nakagami,
    effective_distribution,
    effective_nakagami_model,
    effective_pdf_general,
    effective_pdf_nakagami,
    nakagami_cdf,
    nakagami_pdf,
    sample_fading,
)
from .simulator import (
    EffectiveFadingSample,
    SimulationResult,
    run_campaign,
    run_trial,
    sample_ordered_distances,
    trial_stream,
)
from .specfun import QuadratureSettings, integrate, lower_incomplete_gamma, upper_incomplete_gamma
from .stats import EmpiricalDistribution, KsReport, empirical_cdf, histogram_density, ks_one_sample, ks_two_sample
