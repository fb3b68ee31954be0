use serde::{Deserialize, Serialize};

use super::{compare_approaches, fit_direct, fit_summed, split_holdout, ComparisonReport, DirectRdsm, FitSettings, SummedFit};
use crate::damage_model::{simulate_design, BendSpecimen};
use crate::error::Result;
use crate::param_space::{Dataset, SamplingDistribution, N_PARAMS};
use crate::sampling::{sample_mc, sub_seed};

/// Sizes and seed of a full source-model-to-comparison run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Rows drawn from the source model for fitting.
    pub n_rows: usize,
    /// Rows of the base set kept back for validation.
    pub n_holdout: usize,
    /// Additional validation rows drawn separately.
    pub n_fresh: usize,
    pub distribution: SamplingDistribution,
    pub fit: FitSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            n_rows: 1555,
            n_holdout: 25,
            n_fresh: 200,
            distribution: SamplingDistribution::UniformPm20,
            fit: FitSettings::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub base: Dataset,
    pub train: Dataset,
    pub validation: Dataset,
    pub direct: DirectRdsm,
    pub summed: SummedFit,
    pub comparison: ComparisonReport,
}

/// Monte Carlo base rows, a held-out split plus fresh validation rows, the
/// direct and summed fits, and their comparison.
pub fn run_pipeline(specimen: &BendSpecimen, config: &PipelineConfig) -> Result<PipelineOutcome> {
    config.fit.validate()?;
    let design = sample_mc(config.n_rows, N_PARAMS, sub_seed(config.seed, 1))?;
    let base = simulate_design(&design, &config.distribution, specimen, "base")?;
    let (train, mut validation) = split_holdout(&base, config.n_holdout, sub_seed(config.seed, 2))?;
    if config.n_fresh > 0 {
        let fresh = sample_mc(config.n_fresh, N_PARAMS, sub_seed(config.seed, 3))?;
        validation.extend(&simulate_design(&fresh, &config.distribution, specimen, "fresh")?);
    }
    let direct = fit_direct(&train, &config.fit)?;
    let summed = fit_summed(&train, specimen, &config.fit, sub_seed(config.seed, 4))?;
    let comparison = compare_approaches(&direct, &summed.summed, &validation)?;
    Ok(PipelineOutcome {
        base,
        train,
        validation,
        direct,
        summed,
        comparison,
    })
}
