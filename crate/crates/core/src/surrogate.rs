//! Feedforward network surrogates: dense ReLU layers, Adam on mean squared
//! error, min–max scaling, and a versioned JSON model format.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{rng_from_seed, sub_seed};

pub const MODEL_FORMAT: &str = "rdsm-surrogate";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    #[default]
    Mse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Init {
    Normal { std: f64 },
}

impl Default for Init {
    fn default() -> Self {
        Init::Normal { std: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScalingKind {
    #[default]
    MinMax,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStopping {
    /// Epochs without sufficient improvement before stopping.
    pub patience: usize,
    /// Required improvement of the held-out MAE, in percentage points.
    pub min_delta: f64,
}

impl Default for EarlyStopping {
    fn default() -> Self {
        EarlyStopping {
            patience: 200,
            min_delta: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden_layers: Vec<usize>,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub loss: Loss,
    #[serde(default)]
    pub init: Init,
    #[serde(default)]
    pub input_scaling: ScalingKind,
    #[serde(default)]
    pub output_scaling: ScalingKind,
    #[serde(default = "default_early_stopping")]
    pub early_stopping: Option<EarlyStopping>,
}

fn default_lr() -> f64 {
    0.001
}
fn default_epochs() -> usize {
    2000
}
fn default_batch() -> usize {
    32
}
fn default_train_fraction() -> f64 {
    0.9
}
fn default_test_fraction() -> f64 {
    0.1
}
fn default_early_stopping() -> Option<EarlyStopping> {
    Some(EarlyStopping::default())
}

impl NetworkSpec {
    pub fn new(input_dim: usize, hidden_layers: Vec<usize>) -> Self {
        NetworkSpec {
            input_dim,
            hidden_layers,
            learning_rate: default_lr(),
            epochs: default_epochs(),
            batch_size: default_batch(),
            seed: 0,
            train_fraction: default_train_fraction(),
            test_fraction: default_test_fraction(),
            loss: Loss::Mse,
            init: Init::default(),
            input_scaling: ScalingKind::MinMax,
            output_scaling: ScalingKind::MinMax,
            early_stopping: default_early_stopping(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.input_dim == 0 {
            return bad("input_dim must be at least 1".into());
        }
        if self.hidden_layers.contains(&0) {
            return bad(format!("hidden layer widths must be >= 1, got {:?}", self.hidden_layers));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive".into());
        }
        let sum = self.train_fraction + self.test_fraction;
        if !(self.train_fraction > 0.0 && self.test_fraction >= 0.0 && (sum - 1.0).abs() < 1e-9) {
            return bad(format!(
                "split fractions must be non-negative and sum to 1, got {}/{}",
                self.train_fraction, self.test_fraction
            ));
        }
        let Init::Normal { std } = self.init;
        if !(std > 0.0 && std.is_finite()) {
            return bad(format!("init std must be positive, got {std}"));
        }
        if let Some(es) = self.early_stopping {
            if es.patience == 0 || !(es.min_delta >= 0.0) {
                return bad("early stopping needs patience >= 1 and min_delta >= 0".into());
            }
        }
        Ok(())
    }

    /// Layer widths including input and the scalar output.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim];
        d.extend(&self.hidden_layers);
        d.push(1);
        d
    }
}

/// Per-dimension affine map `u = (x − offset) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Affine {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Affine {
    pub fn identity(dim: usize) -> Self {
        Affine {
            offset: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Min–max map onto [0, 1]; constant columns get scale 1.
    pub fn fit_min_max<R: AsRef<[f64]>>(rows: &[R], dim: usize) -> Self {
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for r in rows {
            for (j, v) in r.as_ref().iter().enumerate() {
                lo[j] = lo[j].min(*v);
                hi[j] = hi[j].max(*v);
            }
        }
        let scale = lo.iter().zip(&hi).map(|(l, h)| if h > l { h - l } else { 1.0 }).collect();
        Affine { offset: lo, scale }
    }

    fn fit(kind: ScalingKind, rows: &[Vec<f64>], dim: usize) -> Self {
        match kind {
            ScalingKind::MinMax => Self::fit_min_max(rows, dim),
            ScalingKind::Identity => Self::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.offset.iter().zip(&self.scale)).map(|(v, (o, s))| (v - o) / s).collect()
    }

    pub fn invert(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(self.offset.iter().zip(&self.scale)).map(|(v, (o, s))| v * s + o).collect()
    }
}

/// Percentage error summary; rows whose target is negligible against the
/// target range are excluded and counted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaeSummary {
    pub mae_pct: f64,
    pub n_used: usize,
    pub n_excluded: usize,
}

/// `mean(|ŷ − y| / |y|)·100` over rows with `|y| ≥ 1e-9·range(y)`.
/// With no usable row the percentage is 0.
pub fn mae_pct(predicted: &[f64], actual: &[f64]) -> MaeSummary {
    let (lo, hi) = actual
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let floor = if hi > lo { 1e-9 * (hi - lo) } else { 0.0 };
    let mut sum = 0.0;
    let mut used = 0;
    for (p, y) in predicted.iter().zip(actual) {
        if y.abs() > floor || (floor == 0.0 && *y != 0.0) {
            sum += (p - y).abs() / y.abs();
            used += 1;
        }
    }
    MaeSummary {
        mae_pct: if used > 0 { 100.0 * sum / used as f64 } else { 0.0 },
        n_used: used,
        n_excluded: actual.len() - used,
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainReport {
    pub train_mae_pct: f64,
    pub test_mae_pct: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_excluded_train: usize,
    pub n_excluded_test: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub zero_variance_target: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_mae_pct: f64,
}

/// Dense network with parameters stored flat: per layer the row-major
/// `[out][in]` weights followed by the biases.
#[derive(Debug, Clone, PartialEq)]
struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
}

struct Workspace {
    /// pre-activations per layer
    z: Vec<Vec<f64>>,
    /// activations; `a[0]` is the input
    a: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Mlp {
    fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Mlp { dims, params: vec![0.0; n] }
    }

    fn n_layers(&self) -> usize {
        self.dims.len() - 1
    }

    fn offsets(&self) -> Vec<(usize, usize)> {
        let mut off = 0;
        self.dims
            .windows(2)
            .map(|w| {
                let wo = off;
                let bo = off + w[0] * w[1];
                off = bo + w[1];
                (wo, bo)
            })
            .collect()
    }

    fn workspace(&self) -> Workspace {
        Workspace {
            z: self.dims[1..].iter().map(|d| vec![0.0; *d]).collect(),
            a: self.dims.iter().map(|d| vec![0.0; *d]).collect(),
            delta: self.dims[1..].iter().map(|d| vec![0.0; *d]).collect(),
        }
    }

    fn forward(&self, x: &[f64], ws: &mut Workspace) -> f64 {
        ws.a[0].copy_from_slice(x);
        let last = self.n_layers() - 1;
        for (l, (wo, bo)) in self.offsets().into_iter().enumerate() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let (before, after) = ws.a.split_at_mut(l + 1);
            let input = &before[l];
            for j in 0..n_out {
                let row = &self.params[wo + j * n_in..wo + (j + 1) * n_in];
                let z = self.params[bo + j] + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
                ws.z[l][j] = z;
                after[0][j] = if l == last { z } else { z.max(0.0) };
            }
        }
        ws.a[last + 1][0]
    }

    /// Adds `dL/dθ` to `grad` given `dL/dŷ` after a forward pass.
    fn backward(&self, ws: &mut Workspace, d_out: f64, grad: &mut [f64]) {
        let offsets = self.offsets();
        let last = self.n_layers() - 1;
        ws.delta[last][0] = d_out;
        for l in (0..=last).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let (wo, bo) = offsets[l];
            for j in 0..n_out {
                let d = ws.delta[l][j];
                if d == 0.0 {
                    continue;
                }
                grad[bo + j] += d;
                let g = &mut grad[wo + j * n_in..wo + (j + 1) * n_in];
                for (gi, a) in g.iter_mut().zip(&ws.a[l]) {
                    *gi += d * a;
                }
            }
            if l > 0 {
                let (prev, cur) = ws.delta.split_at_mut(l);
                let prev = &mut prev[l - 1];
                prev.iter_mut().for_each(|p| *p = 0.0);
                for j in 0..n_out {
                    let d = cur[0][j];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &self.params[wo + j * n_in..wo + (j + 1) * n_in];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += w * d;
                    }
                }
                for (p, z) in prev.iter_mut().zip(&ws.z[l - 1]) {
                    if *z <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
        }
    }

    /// ReLU on/off pattern of the hidden units for one input.
    fn pattern(&self, x: &[f64]) -> Vec<bool> {
        let mut ws = self.workspace();
        self.forward(x, &mut ws);
        ws.z[..self.n_layers() - 1].iter().flatten().map(|z| *z > 0.0).collect()
    }
}

/// Trained scalar surrogate. Immutable after training.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateModel {
    spec: NetworkSpec,
    net: Mlp,
    input_scaling: Affine,
    output_scaling: Affine,
    report: TrainReport,
}

impl SurrogateModel {
    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn report(&self) -> &TrainReport {
        &self.report
    }

    pub fn input_dim(&self) -> usize {
        self.net.dims[0]
    }

    pub fn input_scaling(&self) -> &Affine {
        &self.input_scaling
    }

    pub fn output_scaling(&self) -> &Affine {
        &self.output_scaling
    }

    /// Builds a model from explicit layers (`[out][in]` row-major weights).
    pub fn from_layers(
        spec: NetworkSpec,
        layers: Vec<Layer>,
        input_scaling: Affine,
        output_scaling: Affine,
        report: TrainReport,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ModelFormat("model has no layers".into()));
        }
        let mut dims = vec![layers[0].inputs];
        let mut params = Vec::new();
        for (i, layer) in layers.iter().enumerate() {
            if layer.inputs != *dims.last().unwrap() {
                return Err(Error::ModelFormat(format!(
                    "layer {i} takes {} inputs but the previous layer has {} outputs",
                    layer.inputs,
                    dims.last().unwrap()
                )));
            }
            if layer.weights.len() != layer.inputs * layer.outputs || layer.biases.len() != layer.outputs {
                return Err(Error::ModelFormat(format!("layer {i} has inconsistent weight or bias counts")));
            }
            if layer.weights.iter().chain(&layer.biases).any(|v| !v.is_finite()) {
                return Err(Error::ModelFormat(format!("layer {i} has non-finite parameters")));
            }
            dims.push(layer.outputs);
            params.extend(&layer.weights);
            params.extend(&layer.biases);
        }
        if *dims.last().unwrap() != 1 {
            return Err(Error::ModelFormat("the output layer must have one unit".into()));
        }
        if input_scaling.dim() != dims[0] || output_scaling.dim() != 1 {
            return Err(Error::ModelFormat("scaling dimensions do not match the network".into()));
        }
        if input_scaling.scale.iter().chain(&output_scaling.scale).any(|s| !(s.is_finite() && *s != 0.0))
            || input_scaling.offset.iter().chain(&output_scaling.offset).any(|o| !o.is_finite())
        {
            return Err(Error::ModelFormat("scaling parameters must be finite with non-zero scale".into()));
        }
        Ok(SurrogateModel {
            spec,
            net: Mlp { dims, params },
            input_scaling,
            output_scaling,
            report,
        })
    }

    pub fn layers(&self) -> Vec<Layer> {
        self.net
            .offsets()
            .into_iter()
            .enumerate()
            .map(|(l, (wo, bo))| {
                let (n_in, n_out) = (self.net.dims[l], self.net.dims[l + 1]);
                Layer {
                    inputs: n_in,
                    outputs: n_out,
                    weights: self.net.params[wo..bo].to_vec(),
                    biases: self.net.params[bo..bo + n_out].to_vec(),
                }
            })
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut ws = self.net.workspace();
        Ok(self.predict_with(x, &mut ws))
    }

    fn predict_with(&self, x: &[f64], ws: &mut Workspace) -> f64 {
        let u = self.input_scaling.apply(x);
        let y = self.net.forward(&u, ws);
        y * self.output_scaling.scale[0] + self.output_scaling.offset[0]
    }

    /// Predictions for many rows, parallel over rows.
    pub fn predict_batch<R: AsRef<[f64]> + Sync>(&self, xs: &[R]) -> Result<Vec<f64>> {
        if let Some(bad) = xs.iter().find(|x| x.as_ref().len() != self.input_dim()) {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: bad.as_ref().len(),
            });
        }
        Ok(xs
            .par_iter()
            .map_init(|| self.net.workspace(), |ws, x| self.predict_with(x.as_ref(), ws))
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            spec: self.spec.clone(),
            layers: self.layers(),
            input_scaling: self.input_scaling.clone(),
            output_scaling: self.output_scaling.clone(),
            report: self.report.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        // read the header first so a newer document reports its version
        // rather than whichever field it added
        #[derive(Deserialize)]
        struct Header {
            format: Option<String>,
            version: Option<u32>,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.format.as_deref() != Some(MODEL_FORMAT) {
            return Err(Error::ModelFormat(format!(
                "expected format `{MODEL_FORMAT}`, found {:?}",
                header.format
            )));
        }
        match header.version {
            Some(MODEL_VERSION) => {}
            Some(found) => {
                return Err(Error::UnsupportedVersion {
                    found,
                    expected: MODEL_VERSION,
                })
            }
            None => return Err(Error::ModelFormat("missing field `version`".into())),
        }
        let doc: ModelDocument = serde_json::from_str(text)?;
        doc.spec.validate()?;
        if doc.spec.dims() != doc.layers.iter().map(|l| l.inputs).chain([1]).collect::<Vec<_>>() {
            return Err(Error::ModelFormat("layer sizes disagree with the network spec".into()));
        }
        Self::from_layers(doc.spec, doc.layers, doc.input_scaling, doc.output_scaling, doc.report)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    format: String,
    version: u32,
    spec: NetworkSpec,
    layers: Vec<Layer>,
    input_scaling: Affine,
    output_scaling: Affine,
    report: TrainReport,
}

/// Model plus per-epoch telemetry.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SurrogateModel,
    pub telemetry: Vec<EpochRecord>,
}

/// Seeded shuffle split of `n` rows into (train, test) index sets.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(sub_seed(seed, 1)));
    let n_test = ((n as f64 * test_fraction).round() as usize).min(n.saturating_sub(1));
    let test = idx.split_off(n - n_test);
    (idx, test)
}

/// Trains on a seeded split of the rows given by `spec`.
pub fn train<R: AsRef<[f64]>>(spec: &NetworkSpec, inputs: &[R], outputs: &[f64]) -> Result<SurrogateModel> {
    train_with_telemetry(spec, inputs, outputs).map(|o| o.model)
}

pub fn train_with_telemetry<R: AsRef<[f64]>>(spec: &NetworkSpec, inputs: &[R], outputs: &[f64]) -> Result<TrainOutcome> {
    if inputs.len() != outputs.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            got: outputs.len(),
        });
    }
    let (tr, te) = split_indices(inputs.len(), spec.test_fraction, spec.seed);
    let pick = |ids: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
        (ids.iter().map(|i| inputs[*i].as_ref().to_vec()).collect(), ids.iter().map(|i| outputs[*i]).collect())
    };
    let (xtr, ytr) = pick(&tr);
    let (xte, yte) = pick(&te);
    train_split(spec, &xtr, &ytr, &xte, &yte)
}

/// Trains on an explicit train/test partition.
pub fn train_split(
    spec: &NetworkSpec,
    x_train: &[Vec<f64>],
    y_train: &[f64],
    x_test: &[Vec<f64>],
    y_test: &[f64],
) -> Result<TrainOutcome> {
    spec.validate()?;
    let n = x_train.len() + x_test.len();
    if n < 10 {
        return Err(Error::InvalidArgument(format!("training needs at least 10 rows, got {n}")));
    }
    if x_train.len() != y_train.len() || x_test.len() != y_test.len() {
        return Err(Error::InvalidArgument("inputs and outputs differ in length".into()));
    }
    for x in x_train.iter().chain(x_test) {
        if x.len() != spec.input_dim {
            return Err(Error::DimensionMismatch {
                expected: spec.input_dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("training inputs must be finite".into()));
        }
    }
    if y_train.iter().chain(y_test).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("training outputs must be finite".into()));
    }

    let input_scaling = Affine::fit(spec.input_scaling, x_train, spec.input_dim);
    let y_rows: Vec<Vec<f64>> = y_train.iter().map(|y| vec![*y]).collect();
    let output_scaling = Affine::fit(spec.output_scaling, &y_rows, 1);
    let zero_variance = y_train.iter().all(|y| *y == y_train[0]);

    let u_train: Vec<Vec<f64>> = x_train.iter().map(|x| input_scaling.apply(x)).collect();
    let t_train: Vec<f64> = y_train.iter().map(|y| output_scaling.apply(&[*y])[0]).collect();
    let u_test: Vec<Vec<f64>> = x_test.iter().map(|x| input_scaling.apply(x)).collect();

    let mut net = Mlp::zeros(spec.dims());
    let Init::Normal { std } = spec.init;
    let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut init_rng = rng_from_seed(sub_seed(spec.seed, 0));
    for (wo, bo) in net.offsets() {
        for w in &mut net.params[wo..bo] {
            *w = normal.sample(&mut init_rng);
        }
    }

    let unscale = |v: f64| v * output_scaling.scale[0] + output_scaling.offset[0];
    let mut ws = net.workspace();
    let mut evaluate = |net: &Mlp, us: &[Vec<f64>], ys: &[f64]| -> MaeSummary {
        let pred: Vec<f64> = us.iter().map(|u| unscale(net.forward(u, &mut ws))).collect();
        mae_pct(&pred, ys)
    };

    let np = net.params.len();
    let (mut m, mut v, mut grad) = (vec![0.0; np], vec![0.0; np], vec![0.0; np]);
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..u_train.len()).collect();
    let mut shuffle_rng = rng_from_seed(sub_seed(spec.seed, 2));
    let mut work = net.workspace();

    let monitor_test = !u_test.is_empty();
    let mut best = (f64::INFINITY, 0usize, net.params.clone());
    let mut last_improvement = 0usize;
    let mut telemetry = Vec::with_capacity(spec.epochs);
    let mut epochs_run = 0;

    for epoch in 1..=spec.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(spec.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let r = net.forward(&u_train[i], &mut work) - t_train[i];
                loss_sum += r * r;
                net.backward(&mut work, 2.0 * r * scale, &mut grad);
            }
            step += 1;
            let c1 = 1.0 - b1.powi(step);
            let c2 = 1.0 - b2.powi(step);
            for k in 0..np {
                m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
                v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
                net.params[k] -= spec.learning_rate * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
        }
        let train_loss = loss_sum / u_train.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::NumericalFailure {
                point: format!("epoch {epoch}"),
                message: "training loss diverged".into(),
            });
        }
        epochs_run = epoch;
        let test_mae = if monitor_test {
            evaluate(&net, &u_test, y_test).mae_pct
        } else {
            f64::NAN
        };
        telemetry.push(EpochRecord {
            epoch,
            train_loss,
            test_mae_pct: test_mae,
        });

        if let (Some(es), true) = (spec.early_stopping, monitor_test) {
            if test_mae < best.0 {
                if test_mae <= best.0 - es.min_delta {
                    last_improvement = epoch;
                }
                best = (test_mae, epoch, net.params.clone());
            }
            if epoch - last_improvement >= es.patience {
                break;
            }
        }
    }

    let best_epoch = if spec.early_stopping.is_some() && monitor_test {
        net.params = best.2;
        best.1
    } else {
        epochs_run
    };

    let train_summary = evaluate(&net, &u_train, y_train);
    let test_summary = if monitor_test {
        evaluate(&net, &u_test, y_test)
    } else {
        MaeSummary {
            mae_pct: 0.0,
            n_used: 0,
            n_excluded: 0,
        }
    };
    let report = TrainReport {
        train_mae_pct: train_summary.mae_pct,
        test_mae_pct: test_summary.mae_pct,
        n_train: u_train.len(),
        n_test: u_test.len(),
        n_excluded_train: train_summary.n_excluded,
        n_excluded_test: test_summary.n_excluded,
        epochs_run,
        best_epoch,
        zero_variance_target: zero_variance,
    };
    Ok(TrainOutcome {
        model: SurrogateModel {
            spec: spec.clone(),
            net,
            input_scaling,
            output_scaling,
            report,
        },
        telemetry,
    })
}

pub fn save_telemetry_csv(telemetry: &[EpochRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["epoch", "train_loss", "test_mae_pct"])?;
    for r in telemetry {
        w.write_record([
            r.epoch.to_string(),
            crate::param_space::format_float(r.train_loss),
            crate::param_space::format_float(r.test_mae_pct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    /// Hidden layers and report of every candidate, in the given order.
    pub candidates: Vec<(Vec<usize>, TrainReport)>,
    pub best_index: usize,
    pub best: SurrogateModel,
}

/// Trains one network per architecture and keeps the lowest held-out MAE;
/// ties go to the earlier architecture.
pub fn grid_search<R: AsRef<[f64]>>(
    base: &NetworkSpec,
    architectures: &[Vec<usize>],
    inputs: &[R],
    outputs: &[f64],
) -> Result<GridSearchResult> {
    if architectures.is_empty() {
        return Err(Error::InvalidArgument("grid search needs at least one architecture".into()));
    }
    let mut candidates = Vec::with_capacity(architectures.len());
    let mut best: Option<(usize, SurrogateModel)> = None;
    for (i, hidden) in architectures.iter().enumerate() {
        let spec = NetworkSpec {
            hidden_layers: hidden.clone(),
            ..base.clone()
        };
        let model = train(&spec, inputs, outputs)?;
        candidates.push((hidden.clone(), model.report.clone()));
        if best.as_ref().is_none_or(|(_, b)| model.report.test_mae_pct < b.report.test_mae_pct) {
            best = Some((i, model));
        }
    }
    let (best_index, best) = best.expect("non-empty");
    Ok(GridSearchResult {
        candidates,
        best_index,
        best,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheckReport {
    pub max_relative_deviation: f64,
    pub checked: usize,
    pub skipped_at_kinks: usize,
    pub passed: bool,
}

/// Compares backpropagated gradients of the squared error at one
/// (scaled) sample against central differences with step `1e-5`, on up to
/// `samples` randomly chosen parameters. Parameters whose perturbation
/// flips a ReLU unit are skipped.
pub fn gradient_check(model: &SurrogateModel, x: &[f64], target: f64, samples: usize, seed: u64, tolerance: f64) -> Result<GradientCheckReport> {
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            got: x.len(),
        });
    }
    let u = model.input_scaling.apply(x);
    let t = model.output_scaling.apply(&[target])[0];
    let net = &model.net;
    let mut ws = net.workspace();
    let r = net.forward(&u, &mut ws) - t;
    let mut grad = vec![0.0; net.params.len()];
    net.backward(&mut ws, 2.0 * r, &mut grad);

    let base_pattern = net.pattern(&u);
    let loss = |p: &Mlp| {
        let mut ws = p.workspace();
        let r = p.forward(&u, &mut ws) - t;
        r * r
    };
    let h = 1e-5;
    let mut rng = rng_from_seed(seed);
    let n = net.params.len();
    let chosen: Vec<usize> = if samples >= n {
        (0..n).collect()
    } else {
        (0..samples).map(|_| rng.random_range(0..n)).collect()
    };

    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    let (mut checked, mut skipped) = (0, 0);
    for k in chosen {
        let orig = probe.params[k];
        probe.params[k] = orig + h;
        let (lp, pp) = (loss(&probe), probe.pattern(&u));
        probe.params[k] = orig - h;
        let (lm, pm) = (loss(&probe), probe.pattern(&u));
        probe.params[k] = orig;
        if pp != base_pattern || pm != base_pattern {
            skipped += 1;
            continue;
        }
        let fd = (lp - lm) / (2.0 * h);
        let bp = grad[k];
        let denom = fd.abs().max(bp.abs());
        let dev = if denom < 1e-10 { 0.0 } else { (fd - bp).abs() / denom };
        if !dev.is_finite() {
            return Err(Error::NumericalFailure {
                point: format!("parameter {k}"),
                message: "non-finite gradient".into(),
            });
        }
        worst = worst.max(dev);
        checked += 1;
    }
    Ok(GradientCheckReport {
        max_relative_deviation: worst,
        checked,
        skipped_at_kinks: skipped,
        passed: worst <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn blank_report() -> TrainReport {
        TrainReport {
            train_mae_pct: 0.0,
            test_mae_pct: 0.0,
            n_train: 0,
            n_test: 0,
            n_excluded_train: 0,
            n_excluded_test: 0,
            epochs_run: 0,
            best_epoch: 0,
            zero_variance_target: false,
        }
    }

    fn random_model(dims: &[usize], seed: u64) -> SurrogateModel {
        let mut rng = rng_from_seed(seed);
        let layers = dims
            .windows(2)
            .map(|w| Layer {
                inputs: w[0],
                outputs: w[1],
                weights: (0..w[0] * w[1]).map(|_| rng.random_range(-1.0..1.0)).collect(),
                biases: (0..w[1]).map(|_| rng.random_range(-0.5..0.5)).collect(),
            })
            .collect();
        let spec = NetworkSpec::new(dims[0], dims[1..dims.len() - 1].to_vec());
        SurrogateModel::from_layers(spec, layers, Affine::identity(dims[0]), Affine::identity(1), blank_report()).unwrap()
    }

    #[test]
    fn identity_and_constant_networks() {
        let spec = NetworkSpec::new(1, vec![]);
        let m = SurrogateModel::from_layers(
            spec.clone(),
            vec![Layer {
                inputs: 1,
                outputs: 1,
                weights: vec![1.0],
                biases: vec![0.0],
            }],
            Affine {
                offset: vec![2.0],
                scale: vec![4.0],
            },
            Affine::identity(1),
            blank_report(),
        )
        .unwrap();
        assert_eq!(m.predict(&[10.0]).unwrap(), 2.0);

        let m = SurrogateModel::from_layers(
            NetworkSpec::new(3, vec![4]),
            vec![
                Layer {
                    inputs: 3,
                    outputs: 4,
                    weights: vec![0.0; 12],
                    biases: vec![0.0; 4],
                },
                Layer {
                    inputs: 4,
                    outputs: 1,
                    weights: vec![0.0; 4],
                    biases: vec![0.25],
                },
            ],
            Affine::identity(3),
            Affine {
                offset: vec![1.0],
                scale: vec![8.0],
            },
            blank_report(),
        )
        .unwrap();
        assert_eq!(m.predict(&[5.0, -3.0, 1e6]).unwrap(), 3.0);
        assert!(matches!(m.predict(&[1.0]), Err(Error::DimensionMismatch { expected: 3, got: 1 })));
    }

    #[test]
    fn forward_matches_matrix_oracle() {
        let dims = [5, 7, 6, 1];
        let m = random_model(&dims, 11);
        let layers = m.layers();
        let mut rng = rng_from_seed(3);
        for _ in 0..20 {
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut a = x.clone();
            for (l, layer) in layers.iter().enumerate() {
                let mut next = vec![0.0; layer.outputs];
                for (j, out) in next.iter_mut().enumerate() {
                    let mut s = layer.biases[j];
                    for i in 0..layer.inputs {
                        s += layer.weights[j * layer.inputs + i] * a[i];
                    }
                    *out = if l + 1 < layers.len() { s.max(0.0) } else { s };
                }
                a = next;
            }
            assert_relative_eq!(m.predict(&x).unwrap(), a[0], max_relative = 1e-10);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        // linear network: the loss is quadratic in every weight
        let lin = random_model(&[4, 1], 5);
        let r = gradient_check(&lin, &[0.3, -0.2, 0.9, 0.1], 0.7, 100, 1, 1e-8).unwrap();
        assert!(r.passed && r.checked == 5, "{r:?}");

        let net = random_model(&[6, 12, 9, 1], 7);
        let mut rng = rng_from_seed(9);
        for _ in 0..20 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
            let r = gradient_check(&net, &x, 0.5, 60, rng.random(), 1e-4).unwrap();
            assert!(r.passed && r.checked > 0, "{r:?}");
        }
        let r = gradient_check(&net, &[0.0; 6], 0.5, 200, 1, 1e-4).unwrap();
        assert!(r.max_relative_deviation.is_finite());
    }

    fn linear_data(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![0.1 + 2.0 * i as f64 / n as f64]).collect();
        let y = x.iter().map(|x| 3.0 * x[0] + 1.0).collect();
        (x, y)
    }

    #[test]
    fn learns_a_linear_target() {
        let (x, y) = linear_data(200);
        let spec = NetworkSpec {
            epochs: 500,
            learning_rate: 0.01,
            early_stopping: None,
            ..NetworkSpec::new(1, vec![8])
        };
        let m = train(&spec, &x, &y).unwrap();
        assert!(m.report().test_mae_pct < 1.0, "{:?}", m.report());
        assert_eq!(m.report().n_test, 20);
        assert!(!m.report().zero_variance_target);
    }

    #[test]
    fn constant_target_is_flagged_and_fitted() {
        let x: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y = vec![4.2; 50];
        let spec = NetworkSpec {
            epochs: 300,
            ..NetworkSpec::new(2, vec![5])
        };
        let m = train(&spec, &x, &y).unwrap();
        assert!(m.report().zero_variance_target);
        assert!(m.report().test_mae_pct < 0.1, "{:?}", m.report());
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = linear_data(120);
        let spec = NetworkSpec {
            epochs: 50,
            seed: 42,
            ..NetworkSpec::new(1, vec![6, 4])
        };
        let a = train(&spec, &x, &y).unwrap();
        let b = train(&spec, &x, &y).unwrap();
        assert_eq!(a, b);
        let c = train(&NetworkSpec { seed: 43, ..spec }, &x, &y).unwrap();
        assert_ne!(a.layers(), c.layers());
    }

    #[test]
    fn prescaled_inputs_with_identity_scaling_match() {
        let mut rng = rng_from_seed(1);
        let x: Vec<Vec<f64>> = (0..80).map(|_| vec![rng.random_range(10.0..30.0), rng.random_range(-5.0..0.0)]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[0] - 3.0 * r[1]).collect();
        let spec = NetworkSpec {
            epochs: 40,
            ..NetworkSpec::new(2, vec![7])
        };
        let raw = train(&spec, &x, &y).unwrap();
        // the scaling is fitted on training rows only; reuse it
        let pre: Vec<Vec<f64>> = x.iter().map(|r| raw.input_scaling().apply(r)).collect();
        let ident = train(
            &NetworkSpec {
                input_scaling: ScalingKind::Identity,
                ..spec
            },
            &pre,
            &y,
        )
        .unwrap();
        for (r, p) in x.iter().zip(&pre) {
            assert!((raw.predict(r).unwrap() - ident.predict(p).unwrap()).abs() <= 1e-10);
        }
    }

    #[test]
    fn smoothed_loss_does_not_increase() {
        let mut rng = rng_from_seed(2);
        let x: Vec<Vec<f64>> = (0..300).map(|_| (0..4).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let y: Vec<f64> = x.iter().map(|r| 10.0 + r[0] * r[1] + (3.0 * r[2]).sin() + r[3]).collect();
        let spec = NetworkSpec {
            epochs: 400,
            early_stopping: None,
            ..NetworkSpec::new(4, vec![16, 16])
        };
        let out = train_with_telemetry(&spec, &x, &y).unwrap();
        let block: Vec<f64> = out
            .telemetry
            .chunks(10)
            .map(|c| c.iter().map(|r| r.train_loss).sum::<f64>() / c.len() as f64)
            .collect();
        // minibatch noise leaves sub-percent bumps; divergence would not
        for w in block.windows(2) {
            assert!(w[1] <= 1.02 * w[0], "{block:?}");
        }
        assert!(block.last().unwrap() < &(0.05 * block[0]));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let (x, y) = linear_data(60);
        let spec = NetworkSpec {
            epochs: 30,
            ..NetworkSpec::new(1, vec![5, 3])
        };
        let m = train(&spec, &x, &y).unwrap();
        let text = m.to_json().unwrap();
        let back = SurrogateModel::from_json(&text).unwrap();
        assert_eq!(back, m);
        let mut rng = rng_from_seed(4);
        for _ in 0..100 {
            let v = [rng.random_range(-1.0..3.0)];
            assert_eq!(back.predict(&v).unwrap().to_bits(), m.predict(&v).unwrap().to_bits());
        }

        assert!(SurrogateModel::from_json(&text[..text.len() / 2]).is_err());
        let extra = text.replacen("\"version\"", "\"colour\": 1,\n  \"version\"", 1);
        match SurrogateModel::from_json(&extra) {
            Err(Error::ModelFormat(msg)) => assert!(msg.contains("colour"), "{msg}"),
            other => panic!("expected a named-field error, got {other:?}"),
        }
        let newer = text.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(
            SurrogateModel::from_json(&newer),
            Err(Error::UnsupportedVersion { found: 2, expected: 1 })
        ));
    }

    #[test]
    fn mae_excludes_negligible_targets() {
        let s = mae_pct(&[1.1, 0.5, 2.0], &[1.0, 0.0, 2.0]);
        assert_eq!(s.n_excluded, 1);
        assert_relative_eq!(s.mae_pct, 5.0, max_relative = 1e-12);
        let s = mae_pct(&[1.0], &[0.0]);
        assert_eq!((s.n_used, s.mae_pct), (0, 0.0));
    }

    #[test]
    fn grid_search_keeps_the_best() {
        let (x, y) = linear_data(100);
        let base = NetworkSpec {
            epochs: 100,
            learning_rate: 0.01,
            ..NetworkSpec::new(1, vec![])
        };
        let r = grid_search(&base, &[vec![1], vec![8], vec![4, 4]], &x, &y).unwrap();
        assert_eq!(r.candidates.len(), 3);
        let best = r.candidates.iter().map(|c| c.1.test_mae_pct).fold(f64::INFINITY, f64::min);
        assert_eq!(r.candidates[r.best_index].1.test_mae_pct, best);
        assert_eq!(r.best.report().test_mae_pct, best);
    }

    #[test]
    fn spec_validation() {
        assert!(NetworkSpec::new(0, vec![]).validate().is_err());
        assert!(NetworkSpec::new(2, vec![3, 0]).validate().is_err());
        let bad = NetworkSpec {
            train_fraction: 0.8,
            test_fraction: 0.1,
            ..NetworkSpec::new(2, vec![3])
        };
        assert!(bad.validate().is_err());
        let (x, y) = linear_data(5);
        assert!(train(&NetworkSpec::new(1, vec![2]), &x, &y).is_err());
    }
}
