"""Simulation-based calibration for Bayesian posterior samplers."""

from .errors import (
    AllConstant,
    ChecksumMismatch,
    ConfigError,
    Diverged,
    FailureRateExceeded,
    FormatVersionMismatch,
    IndivisibleBinning,
    InvalidSpec,
    NonFiniteDensity,
    NonFiniteInput,
    NonFiniteParameter,
    NotConjugate,
    SbcError,
    TooShort,
    UnknownParameter,
    UnknownQuantity,
    ZeroVariance,
)
from .ess import (
    ChainPlan,
    EssEstimate,
    autocorrelation,
    effective_sample_size,
    min_ess_across_quantities,
    required_chain_length,
    thin_to,
)
from .model import (
    Dataset,
    GenerativeModel,
    ParamVector,
    PosteriorDraws,
    PosteriorTarget,
    Quantity,
    UnconstrainingMap,
    coordinate,
    draw_data,
    draw_prior,
    eval_quantity,
    evaluate_series,
    posterior_target,
)
from .models import (
    EightSchoolsSpec,
    LinRegSpec,
    NormalNormalSpec,
    make_eight_schools,
    make_lin_reg,
    make_normal_normal,
    model_from_dict,
)
from .rankstats import (
    EcdfSummary,
    RankRecord,
    SbcHistogram,
    build_histogram,
    chi_square_uniformity,
    classify_shape,
    default_bins,
    ecdf_diff,
    ecdf_summary,
    empirical_quantile,
    quantile_bin_counts,
    rank_statistic,
    rebin,
    uniform_band,
)
from .report import (
    ReportRequest,
    render_ecdf_svg,
    render_histogram_svg,
    summarize,
    write_report,
)
from .runner import (
    RunArtifact,
    RunConfig,
    config_from_dict,
    config_to_dict,
    load_artifact,
    run,
    run_sbc,
    run_sbc_mcmc,
    save_artifact,
)
from .samplers import (
    Corruption,
    GaussianApprox,
    SamplerConfig,
    corrupt,
    fit_meanfield_vi,
    sample_exact_conjugate,
    sample_hmc,
    sample_rw_metropolis,
)
from .streams import RandomStream

__version__ = "0.1.0"
