"""Continuous-spin Ising and annealed Langevin simulation of territorial
outcomes, with a PCA-derived external field and conformal uncertainty."""

from .data import (
    DEFAULT_INDICATORS,
    Dataset,
    Domain,
    IndicatorSpec,
    LoadResult,
    SynthParams,
    UnitRecord,
    load_dataset,
    save_dataset,
    scale_target,
    scale_values,
    synth_dataset,
    unscale_values,
)
from .indices import (
    CompositeMatrix,
    Direction,
    ExternalField,
    PCASummary,
    build_composites,
    correlation_matrix,
    external_field,
    jacobi_eigh,
    mpi,
    pca,
    standardize,
)
from .graph import GroupSums, InteractionGraph, build_graph, neighbor_sum, spectrum_extremes
from .energy import (
    EnergyModel,
    SpinConfiguration,
    delta_h,
    energy_ratio,
    grad,
    hamiltonian,
    log_likelihood_ratio,
)
from .sampler import (
    AnnealingSchedule,
    ChainConfig,
    ChainTrace,
    CoolingMode,
    Engine,
    langevin_step,
    make_rng,
    metropolis_step,
    pooled_retained,
    posterior_mean,
    run_chain,
    run_parallel,
)
from .conformal import (
    BatchSpec,
    ConformalResult,
    CoverageAdaptivity,
    batch_means,
    calibrate,
    conformal_intervals,
    coverage_adaptivity,
    empirical_quantiles,
    nonconformity,
    repeat_splits,
    six_number,
)
from .analysis import (
    AssociationTable,
    BaselineFit,
    ComparisonReport,
    GroupSummary,
    OLSResult,
    UnitResults,
    baseline_lm,
    compare,
    group_summaries,
    ols_standardized,
    residual_associations,
)

__version__ = "0.1.0"
