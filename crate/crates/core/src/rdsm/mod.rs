//! Reduced-dimension surrogates of the source model: a direct surrogate of
//! the total energy on its screened parameters, and the summed surrogate
//! built from one reduced surrogate per damage mechanism with a gated
//! interface disbond term.

mod gate;
mod pipeline;
mod report;

pub use gate::EngagementGate;
pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutcome};
pub use report::*;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::damage_model::{simulate_points, BendSpecimen};
use crate::error::{Error, Result};
use crate::param_space::{
    Dataset, Mechanism, Output, ParamVector, ParameterCatalog, RowId, SamplingDistribution, N_PARAMS,
};
use crate::sampling::{sample_lhs, sub_seed};
use crate::sensitivity::{screen_dataset, screen_fdr_logworth, RetentionRule, ScreeningResult};
use crate::surrogate::{self, EarlyStopping, Init, NetworkSpec, ScalingKind, SurrogateModel};

const SUMMED_FORMAT: &str = "rdsm-summed";
const DIRECT_FORMAT: &str = "rdsm-direct";
const MANIFEST_VERSION: u32 = 1;

/// Training settings shared by every network; widths are chosen per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Training {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub test_fraction: f64,
    pub init: Init,
    pub input_scaling: ScalingKind,
    pub output_scaling: ScalingKind,
    pub early_stopping: Option<EarlyStopping>,
}

impl Default for Training {
    fn default() -> Self {
        let s = NetworkSpec::new(1, vec![]);
        Training {
            learning_rate: s.learning_rate,
            epochs: s.epochs,
            batch_size: s.batch_size,
            seed: s.seed,
            test_fraction: s.test_fraction,
            init: s.init,
            input_scaling: s.input_scaling,
            output_scaling: s.output_scaling,
            early_stopping: s.early_stopping,
        }
    }
}

impl Training {
    pub fn spec(&self, input_dim: usize, hidden_layers: &[usize]) -> NetworkSpec {
        NetworkSpec {
            input_dim,
            hidden_layers: hidden_layers.to_vec(),
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            train_fraction: 1.0 - self.test_fraction,
            test_fraction: self.test_fraction,
            loss: Default::default(),
            init: self.init,
            input_scaling: self.input_scaling,
            output_scaling: self.output_scaling,
            early_stopping: self.early_stopping,
        }
    }
}

/// Whether a mechanism counts as engaged in a row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngagementThreshold {
    /// Minimum share of the row's total energy.
    pub fraction_of_total: f64,
    /// Absolute minimum in lbf-in; replaces the share when set.
    #[serde(default)]
    pub absolute: Option<f64>,
}

impl Default for EngagementThreshold {
    fn default() -> Self {
        EngagementThreshold {
            fraction_of_total: 0.03,
            absolute: None,
        }
    }
}

impl EngagementThreshold {
    pub fn is_engaged(&self, energy: f64, total: f64) -> bool {
        match self.absolute {
            Some(a) => energy >= a,
            None => energy > 0.0 && energy >= self.fraction_of_total * total,
        }
    }

    /// Engagement flag of every row for one mechanism.
    pub fn flags(&self, dataset: &Dataset, mechanism: Mechanism) -> Vec<bool> {
        dataset
            .rows
            .iter()
            .map(|r| self.is_engaged(r.energy.get(Output::Mechanism(mechanism)), r.energy.ts))
            .collect()
    }
}

/// How the direct surrogate answers queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DirectQuery {
    /// The network retrained on the retained parameters only.
    #[default]
    Reduced,
    /// The 41-input network with non-retained parameters set to their means.
    FullFrozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSettings {
    pub training: Training,
    /// Hidden widths of the 41-input total-energy network.
    pub full_hidden_layers: Vec<usize>,
    /// Hidden widths of the reduced total-energy network.
    pub reduced_hidden_layers: Vec<usize>,
    pub mechanism_hidden_layers: Vec<usize>,
    pub di_hidden_layers: Vec<usize>,
    pub di_learning_rate: f64,
    pub di_test_fraction: f64,
    pub total_rule: RetentionRule,
    pub mechanism_rule: RetentionRule,
    pub engagement: EngagementThreshold,
    /// Parameters varied when resampling the disbond subspace.
    pub di_subspace_params: usize,
    pub di_subspace_samples: usize,
    /// Distribution of the resampled subspace design.
    pub distribution: SamplingDistribution,
    pub query: DirectQuery,
    pub gate: EngagementGate,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            training: Training::default(),
            full_hidden_layers: vec![60, 80],
            reduced_hidden_layers: vec![60, 80],
            mechanism_hidden_layers: vec![60, 80],
            di_hidden_layers: vec![16, 16],
            di_learning_rate: 0.0015,
            di_test_fraction: 0.2,
            total_rule: RetentionRule::for_total(),
            mechanism_rule: RetentionRule::for_mechanism(),
            engagement: EngagementThreshold::default(),
            di_subspace_params: 12,
            di_subspace_samples: 3277,
            distribution: SamplingDistribution::UniformPm20,
            query: DirectQuery::Reduced,
            gate: EngagementGate::default(),
        }
    }
}

impl FitSettings {
    pub fn validate(&self) -> Result<()> {
        self.training.spec(1, &self.full_hidden_layers).validate()?;
        for w in [&self.reduced_hidden_layers, &self.mechanism_hidden_layers, &self.di_hidden_layers] {
            self.training.spec(1, w).validate()?;
        }
        self.mechanism_spec(Mechanism::Di, 1).validate()?;
        self.distribution.validate()?;
        self.gate.validate()?;
        if self.di_subspace_params == 0 || self.di_subspace_samples == 0 {
            return Err(Error::InvalidArgument("disbond subspace size and sample count must be positive".into()));
        }
        Ok(())
    }

    fn mechanism_spec(&self, mechanism: Mechanism, input_dim: usize) -> NetworkSpec {
        if mechanism == Mechanism::Di {
            let mut t = self.training.clone();
            t.learning_rate = self.di_learning_rate;
            t.test_fraction = self.di_test_fraction;
            t.spec(input_dim, &self.di_hidden_layers)
        } else {
            self.training.spec(input_dim, &self.mechanism_hidden_layers)
        }
    }
}

fn gather(x: &ParamVector, indices: &[usize]) -> Vec<f64> {
    indices.iter().map(|i| x[*i]).collect()
}

fn reduced_inputs(dataset: &Dataset, indices: &[usize]) -> Vec<Vec<f64>> {
    dataset.rows.iter().map(|r| gather(&r.inputs, indices)).collect()
}

/// Reduced surrogate of one mechanism energy.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismRdsm {
    pub mechanism: Mechanism,
    retained_params: Vec<String>,
    retained_indices: Vec<usize>,
    surrogate: SurrogateModel,
    baseline: ParamVector,
}

impl MechanismRdsm {
    pub fn new(mechanism: Mechanism, retained_params: Vec<String>, surrogate: SurrogateModel) -> Result<Self> {
        let catalog = ParameterCatalog::canonical();
        let retained_indices = catalog.indices_of(&retained_params)?;
        if surrogate.input_dim() != retained_indices.len() {
            return Err(Error::DimensionMismatch {
                expected: retained_indices.len(),
                got: surrogate.input_dim(),
            });
        }
        Ok(MechanismRdsm {
            mechanism,
            retained_params,
            retained_indices,
            surrogate,
            baseline: catalog.means(),
        })
    }

    pub fn retained_params(&self) -> &[String] {
        &self.retained_params
    }

    pub fn surrogate(&self) -> &SurrogateModel {
        &self.surrogate
    }

    /// Catalog means; the values assumed for every non-retained parameter.
    pub fn baseline(&self) -> &ParamVector {
        &self.baseline
    }

    /// Prediction from the retained coordinates of `x`; the other
    /// coordinates are ignored.
    pub fn predict(&self, x: &ParamVector) -> Result<f64> {
        self.surrogate.predict(&gather(x, &self.retained_indices))
    }
}

/// Result of fitting one mechanism.
#[derive(Debug, Clone, PartialEq)]
pub enum MechanismFit {
    Fitted {
        model: MechanismRdsm,
        screening: ScreeningResult,
    },
    /// The data cannot support a model; more samples in the mechanism's
    /// subspace are needed.
    NeedsResampling { mechanism: Mechanism, reason: String },
}

impl MechanismFit {
    pub fn into_model(self) -> Result<(MechanismRdsm, ScreeningResult)> {
        match self {
            MechanismFit::Fitted { model, screening } => Ok((model, screening)),
            MechanismFit::NeedsResampling { mechanism, reason } => Err(Error::InvalidArgument(format!(
                "mechanism {mechanism} needs resampling: {reason}"
            ))),
        }
    }
}

/// Screens one mechanism energy, keeps its leading parameters and trains a
/// surrogate on them.
pub fn fit_mechanism(dataset: &Dataset, mechanism: Mechanism, settings: &FitSettings) -> Result<MechanismFit> {
    let output = Output::Mechanism(mechanism);
    let y = dataset.column(output);
    if y.iter().all(|v| *v == y[0]) {
        return Ok(MechanismFit::NeedsResampling {
            mechanism,
            reason: format!("{mechanism} energy is constant over {} rows", y.len()),
        });
    }
    let screening = screen_dataset(dataset, output, settings.mechanism_rule)?;
    if screening.none_significant() {
        return Ok(MechanismFit::NeedsResampling {
            mechanism,
            reason: format!("no parameter reaches logworth {}", settings.mechanism_rule.logworth_floor),
        });
    }
    let idx = screening.retained_indices();
    let spec = settings.mechanism_spec(mechanism, idx.len());
    let model = surrogate::train(&spec, &reduced_inputs(dataset, &idx), &y)?;
    Ok(MechanismFit::Fitted {
        model: MechanismRdsm::new(mechanism, screening.retained.clone(), model)?,
        screening,
    })
}

/// Direct surrogate of the total energy.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectRdsm {
    pub full: SurrogateModel,
    pub reduced: SurrogateModel,
    pub screening: ScreeningResult,
    pub query: DirectQuery,
    retained_indices: Vec<usize>,
    baseline: ParamVector,
    training_ids: BTreeSet<RowId>,
}

#[derive(Serialize, Deserialize)]
struct DirectManifest {
    format: String,
    version: u32,
    query: DirectQuery,
    retained_params: Vec<String>,
    baseline: Vec<f64>,
    screening: ScreeningResult,
    training_ids: Vec<RowId>,
}

impl DirectRdsm {
    pub fn retained_params(&self) -> &[String] {
        &self.screening.retained
    }

    pub fn training_ids(&self) -> &BTreeSet<RowId> {
        &self.training_ids
    }

    pub fn predict(&self, x: &ParamVector) -> Result<f64> {
        self.predict_with(x, self.query)
    }

    pub fn predict_with(&self, x: &ParamVector, query: DirectQuery) -> Result<f64> {
        match query {
            DirectQuery::Reduced => self.reduced.predict(&gather(x, &self.retained_indices)),
            DirectQuery::FullFrozen => {
                let mut q = self.baseline;
                for i in &self.retained_indices {
                    q[*i] = x[*i];
                }
                self.full.predict(&q)
            }
        }
    }

    /// Writes `manifest.json`, `full.json` and `reduced.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let manifest = DirectManifest {
            format: DIRECT_FORMAT.into(),
            version: MANIFEST_VERSION,
            query: self.query,
            retained_params: self.screening.retained.clone(),
            baseline: self.baseline.to_vec(),
            screening: self.screening.clone(),
            training_ids: self.training_ids.iter().cloned().collect(),
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        self.full.save(&dir.join("full.json"))?;
        self.reduced.save(&dir.join("reduced.json"))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let m: DirectManifest = read_manifest(dir, DIRECT_FORMAT)?;
        let full = SurrogateModel::load(&dir.join("full.json"))?;
        let reduced = SurrogateModel::load(&dir.join("reduced.json"))?;
        let retained_indices = ParameterCatalog::canonical().indices_of(&m.retained_params)?;
        if reduced.input_dim() != retained_indices.len() || full.input_dim() != N_PARAMS {
            return Err(Error::ModelFormat("direct model dimensions do not match its manifest".into()));
        }
        Ok(DirectRdsm {
            full,
            reduced,
            screening: m.screening,
            query: m.query,
            retained_indices,
            baseline: baseline_from(&m.baseline)?,
            training_ids: m.training_ids.into_iter().collect(),
        })
    }
}

fn baseline_from(v: &[f64]) -> Result<ParamVector> {
    v.try_into().map_err(|_| Error::ModelFormat(format!("baseline has {} values, expected {N_PARAMS}", v.len())))
}

fn read_manifest<T: serde::de::DeserializeOwned>(dir: &Path, format: &str) -> Result<T> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    let header: serde_json::Value = serde_json::from_str(&text)?;
    if header.get("format").and_then(|v| v.as_str()) != Some(format) {
        return Err(Error::ModelFormat(format!("{} is not a `{format}` manifest", dir.display())));
    }
    let version = header.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != MANIFEST_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            expected: MANIFEST_VERSION,
        });
    }
    Ok(serde_json::from_str(&text)?)
}

/// Trains the 41-input total-energy surrogate, screens the total energy,
/// and retrains on the retained parameters.
pub fn fit_direct(dataset: &Dataset, settings: &FitSettings) -> Result<DirectRdsm> {
    if dataset.len() < 100 {
        return Err(Error::InvalidArgument(format!("direct fit needs at least 100 rows, got {}", dataset.len())));
    }
    settings.validate()?;
    let y = dataset.column(Output::Total);
    let full_spec = settings.training.spec(N_PARAMS, &settings.full_hidden_layers);
    let full = surrogate::train(&full_spec, &dataset.inputs(), &y)?;
    let screening = screen_dataset(dataset, Output::Total, settings.total_rule)?;
    if screening.none_significant() {
        return Err(Error::InvalidArgument("no parameter is significant for the total energy".into()));
    }
    let idx = screening.retained_indices();
    let reduced_spec = settings.training.spec(idx.len(), &settings.reduced_hidden_layers);
    let reduced = surrogate::train(&reduced_spec, &reduced_inputs(dataset, &idx), &y)?;
    Ok(DirectRdsm {
        full,
        reduced,
        screening,
        query: settings.query,
        retained_indices: idx,
        baseline: ParameterCatalog::canonical().means(),
        training_ids: dataset.ids().into_iter().collect(),
    })
}

/// Rows drawn by varying only some parameters, with engagement flags.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSample {
    pub varied: Vec<String>,
    pub dataset: Dataset,
    pub engaged: Vec<bool>,
}

impl SubspaceSample {
    /// Engaged rows, which are the only ones used for fitting.
    pub fn fitting_rows(&self) -> Dataset {
        self.dataset.filter_indexed(|i, _| self.engaged[i])
    }

    pub fn n_engaged(&self) -> usize {
        self.engaged.iter().filter(|e| **e).count()
    }
}

/// Resamples the source model varying only `params` (LHS over their
/// distribution); every other parameter stays at its catalog mean.
pub fn resample_subspace(
    specimen: &BendSpecimen,
    params: &[String],
    n: usize,
    seed: u64,
    distribution: &SamplingDistribution,
    mechanism: Mechanism,
    threshold: &EngagementThreshold,
) -> Result<SubspaceSample> {
    let catalog = ParameterCatalog::canonical();
    let idx = catalog.indices_of(params)?;
    let unique: BTreeSet<usize> = idx.iter().copied().collect();
    if idx.is_empty() || unique.len() != idx.len() {
        return Err(Error::InvalidArgument("subspace parameters must be distinct and non-empty".into()));
    }
    distribution.validate()?;
    let design = sample_lhs(n, idx.len(), seed)?;
    let means = catalog.means();
    let points: Vec<ParamVector> = design
        .rows()
        .map(|u| {
            let mut x = means;
            for (k, &j) in idx.iter().enumerate() {
                x[j] = distribution.quantile(means[j], u[k]);
            }
            x
        })
        .collect();
    let dataset = simulate_points(&points, specimen, &format!("subspace-{mechanism}"))?;
    let engaged = threshold.flags(&dataset, mechanism);
    Ok(SubspaceSample {
        varied: params.to_vec(),
        dataset,
        engaged,
    })
}

/// Sum of the five mechanism surrogates, with the disbond term switched by
/// the gate.
#[derive(Debug, Clone, PartialEq)]
pub struct SummedRdsm {
    members: Vec<MechanismRdsm>,
    pub gate: EngagementGate,
    training_ids: BTreeSet<RowId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummedPrediction {
    pub total: f64,
    /// Per-mechanism terms in PL, DL, DC, DI, PM order; DI is already gated.
    pub breakdown: [f64; 5],
    pub di_engaged: bool,
}

#[derive(Serialize, Deserialize)]
struct SummedManifest {
    format: String,
    version: u32,
    gate: EngagementGate,
    catalog: Vec<String>,
    members: Vec<MemberEntry>,
    training_ids: Vec<RowId>,
}

#[derive(Serialize, Deserialize)]
struct MemberEntry {
    mechanism: Mechanism,
    retained_params: Vec<String>,
    baseline: Vec<f64>,
    model_file: String,
}

impl SummedRdsm {
    /// `members` must hold each mechanism exactly once.
    pub fn new(members: Vec<MechanismRdsm>, gate: EngagementGate, training_ids: BTreeSet<RowId>) -> Result<Self> {
        gate.validate()?;
        let mut ordered = Vec::with_capacity(5);
        for m in Mechanism::ALL {
            let mut found = members.iter().filter(|r| r.mechanism == m);
            match (found.next(), found.next()) {
                (Some(r), None) => ordered.push(r.clone()),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "summed model needs exactly one {m} member"
                    )))
                }
            }
        }
        if members.len() != 5 {
            return Err(Error::InvalidArgument(format!("expected 5 members, got {}", members.len())));
        }
        Ok(SummedRdsm {
            members: ordered,
            gate,
            training_ids,
        })
    }

    pub fn members(&self) -> &[MechanismRdsm] {
        &self.members
    }

    pub fn member(&self, mechanism: Mechanism) -> &MechanismRdsm {
        &self.members[Mechanism::ALL.iter().position(|m| *m == mechanism).expect("all mechanisms present")]
    }

    pub fn training_ids(&self) -> &BTreeSet<RowId> {
        &self.training_ids
    }

    /// Union of the retained parameters, in mechanism order.
    pub fn parameters(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for m in &self.members {
            for p in &m.retained_params {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
        }
        out
    }

    pub fn predict(&self, x: &ParamVector) -> Result<SummedPrediction> {
        summed_predict(self, x)
    }

    /// Writes `manifest.json` and one model file per mechanism into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut members = Vec::new();
        for m in &self.members {
            let file = format!("{}.json", m.mechanism);
            m.surrogate.save(&dir.join(&file))?;
            members.push(MemberEntry {
                mechanism: m.mechanism,
                retained_params: m.retained_params.clone(),
                baseline: m.baseline.to_vec(),
                model_file: file,
            });
        }
        let manifest = SummedManifest {
            format: SUMMED_FORMAT.into(),
            version: MANIFEST_VERSION,
            gate: self.gate.clone(),
            catalog: ParameterCatalog::canonical().names().map(String::from).collect(),
            members,
            training_ids: self.training_ids.iter().cloned().collect(),
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let m: SummedManifest = read_manifest(dir, SUMMED_FORMAT)?;
        let names: Vec<&str> = ParameterCatalog::canonical().names().collect();
        if m.catalog != names {
            return Err(Error::ModelFormat("manifest catalog differs from the parameter catalog".into()));
        }
        let mut members = Vec::new();
        for e in m.members {
            let surrogate = SurrogateModel::load(&dir.join(&e.model_file))?;
            let mut r = MechanismRdsm::new(e.mechanism, e.retained_params, surrogate)?;
            r.baseline = baseline_from(&e.baseline)?;
            members.push(r);
        }
        SummedRdsm::new(members, m.gate, m.training_ids.into_iter().collect())
    }
}

/// Evaluates every mechanism surrogate on its retained coordinates, zeroes
/// the disbond term outside the gate, and sums in mechanism order.
pub fn summed_predict(summed: &SummedRdsm, x: &ParamVector) -> Result<SummedPrediction> {
    let di_engaged = summed.gate.engaged_at(x)?;
    let mut breakdown = [0.0; 5];
    for (b, m) in breakdown.iter_mut().zip(&summed.members) {
        *b = if m.mechanism == Mechanism::Di && !di_engaged {
            0.0
        } else {
            m.predict(x)?
        };
    }
    Ok(SummedPrediction {
        total: breakdown.iter().sum(),
        breakdown,
        di_engaged,
    })
}

/// Diagnostics of the summed fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SummedFit {
    pub summed: SummedRdsm,
    /// Screening per mechanism on the base rows (DI on its engaged rows).
    pub screenings: Vec<ScreeningResult>,
    /// Screening of DI on the engaged resampled rows.
    pub di_focused: ScreeningResult,
    pub subspace: SubspaceSample,
}

/// Fits the four mechanism surrogates on `dataset`, then resamples the
/// disbond subspace with the source model and fits the disbond surrogate
/// on its engaged rows.
pub fn fit_summed(dataset: &Dataset, specimen: &BendSpecimen, settings: &FitSettings, seed: u64) -> Result<SummedFit> {
    settings.validate()?;
    let mut members = Vec::new();
    let mut screenings = Vec::new();
    for m in [Mechanism::Pl, Mechanism::Dl, Mechanism::Dc, Mechanism::Pm] {
        let (model, screening) = fit_mechanism(dataset, m, settings)?.into_model()?;
        members.push(model);
        screenings.push(screening);
    }

    // parameters that matter where disbond is engaged
    let flags = settings.engagement.flags(dataset, Mechanism::Di);
    let engaged = dataset.filter_indexed(|i, _| flags[i]);
    let base = if engaged.len() >= 30 { &engaged } else { dataset };
    let di_output = Output::Mechanism(Mechanism::Di);
    let names: Vec<&str> = ParameterCatalog::canonical().names().collect();
    let di_base = screen_fdr_logworth(&base.inputs(), &base.column(di_output), &names, "DI", settings.mechanism_rule)?;
    let varied: Vec<String> = di_base
        .scores
        .iter()
        .take(settings.di_subspace_params)
        .map(|s| s.name.clone())
        .collect();
    screenings.insert(3, di_base);

    let subspace = resample_subspace(
        specimen,
        &varied,
        settings.di_subspace_samples,
        sub_seed(seed, 0xD1),
        &settings.distribution,
        Mechanism::Di,
        &settings.engagement,
    )?;
    let fitting = subspace.fitting_rows();
    if fitting.len() < 30 {
        return Err(Error::InvalidArgument(format!(
            "mechanism DI needs resampling: only {} of {} subspace rows are engaged",
            fitting.len(),
            subspace.dataset.len()
        )));
    }
    let (di, di_focused) = fit_mechanism(&fitting, Mechanism::Di, settings)?.into_model()?;
    members.push(di);

    let mut ids: BTreeSet<RowId> = dataset.ids().into_iter().collect();
    ids.extend(fitting.ids());
    Ok(SummedFit {
        summed: SummedRdsm::new(members, settings.gate.clone(), ids)?,
        screenings,
        di_focused,
        subspace,
    })
}

/// Splits off `n_holdout` seeded random rows as validation rows.
pub fn split_holdout(dataset: &Dataset, n_holdout: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    if n_holdout >= dataset.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot hold out {n_holdout} of {} rows",
            dataset.len()
        )));
    }
    let (train, test) = surrogate::split_indices(dataset.len(), n_holdout as f64 / dataset.len() as f64, seed);
    Ok((dataset.select(&train), dataset.select(&test)))
}
