"""Non-local-means denoising of Rician-corrupted magnitude images.

A numpy/scipy library implementing statistically correct NLM filtering for
magnitude data: the Rician / non-central chi-square noise model, four
closed-form patch similarity measures with their correlation-normalized
variants, the filter engine with two bias-removal estimators (pipelines
GNLM / NLMS / NLMR), quantitative metrics (RMSE, centred RMSE, SSIM),
synthetic phantoms, and quadrature/Monte-Carlo oracles that verify the
closed forms numerically.
"""

__version__ = "0.1.0"

from .image import Domain, Image
from .noise import (
    GENERATOR_ID,
    NoiseDecomposition,
    NoiseParams,
    g_to_a,
    g_to_m,
    m_to_g,
    nccs_pdf,
    normal_pairs,
    rician_mean,
    rician_pdf,
    sample_decomposition,
    sample_rician,
    substream,
)
from .similarity import (
    MeasureKind,
    SimilarityMeasure,
    log_bessel_i0,
    log_bessel_i0e,
    log_bessel_i1,
    log_bessel_i1e,
    log_sm_gauss,
    log_snl1,
    log_snl2,
    log_snl3,
    log_snl4,
    log_snl4_gauss_approx,
    sm_gauss,
    snl1,
    snl2,
    snl3,
    snl4,
    snl4_gauss_approx,
)
from .nlm import (
    PIPELINES,
    DegenerateWeightsError,
    Estimator,
    NlmParams,
    Pipeline,
    PipelineName,
    WeightField,
    binomial_kernel,
    denoise,
    estimate_a1,
    estimate_a2,
    get_pipeline,
    nlm_filter,
    nlm_weights,
    patch_log_similarity,
)
from .metrics import (
    DB_FLOOR,
    MetricsReport,
    SsimParams,
    crmse_db,
    evaluate,
    metrics_json,
    rmse_db,
    ssim,
)
from .phantom import PhantomKind, PhantomSpec, add_rician_noise, generate_phantom
from .oracle import (
    HistExperimentResult,
    QuadratureConfig,
    QuadratureError,
    analytic_p1,
    analytic_p2,
    bessel_reference,
    hist_csv,
    hist_experiment,
    lawrence_identity_check,
    quad_csm,
    quad_rsm_rice,
    quad_ssm_nccs,
)
from .io import FormatError, read_image, write_image

__all__ = [
    "__version__",
    "Domain",
    "Image",
    "GENERATOR_ID",
    "NoiseParams",
    "NoiseDecomposition",
    "substream",
    "normal_pairs",
    "rician_pdf",
    "nccs_pdf",
    "rician_mean",
    "sample_rician",
    "sample_decomposition",
    "m_to_g",
    "g_to_m",
    "g_to_a",
    "MeasureKind",
    "SimilarityMeasure",
    "log_bessel_i0",
    "log_bessel_i0e",
    "log_bessel_i1",
    "log_bessel_i1e",
    "sm_gauss",
    "log_sm_gauss",
    "snl1",
    "log_snl1",
    "snl2",
    "log_snl2",
    "snl3",
    "log_snl3",
    "snl4",
    "log_snl4",
    "snl4_gauss_approx",
    "log_snl4_gauss_approx",
    "DegenerateWeightsError",
    "Estimator",
    "NlmParams",
    "WeightField",
    "PipelineName",
    "Pipeline",
    "PIPELINES",
    "get_pipeline",
    "binomial_kernel",
    "patch_log_similarity",
    "nlm_weights",
    "nlm_filter",
    "estimate_a1",
    "estimate_a2",
    "denoise",
    "DB_FLOOR",
    "SsimParams",
    "MetricsReport",
    "rmse_db",
    "crmse_db",
    "ssim",
    "evaluate",
    "metrics_json",
    "PhantomKind",
    "PhantomSpec",
    "generate_phantom",
    "add_rician_noise",
    "QuadratureConfig",
    "QuadratureError",
    "quad_ssm_nccs",
    "quad_rsm_rice",
    "quad_csm",
    "lawrence_identity_check",
    "bessel_reference",
    "HistExperimentResult",
    "hist_experiment",
    "analytic_p1",
    "analytic_p2",
    "hist_csv",
    "FormatError",
    "read_image",
    "write_image",
]
