//! Screening by Benjamini–Hochberg FDR logworth and variance-based global
//! sensitivity (first- and total-order Sobol' indices).

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::param_space::{format_float, Dataset, Output, ParameterCatalog, SamplingDistribution, N_PARAMS};
use crate::sampling::{rng_from_seed, saltelli_bases, sub_seed};

/// Smallest p-value passed to the logarithm.
pub const P_FLOOR: f64 = 1e-300;

/// `−log10(p)` with `p` floored at [`P_FLOOR`].
pub fn logworth(p: f64) -> f64 {
    -p.max(P_FLOOR).log10()
}

/// Neumaier-compensated sum in iteration order.
fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Two-sided p-value of the slope in the simple regression of `y` on `x`,
/// or `None` when `x` is constant. A constant `y` gives 1.
pub fn slope_p_value(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let mx = compensated_sum(x.iter().copied()) / n as f64;
    let my = compensated_sum(y.iter().copied()) / n as f64;
    let sxx = compensated_sum(x.iter().map(|v| (v - mx) * (v - mx)));
    let syy = compensated_sum(y.iter().map(|v| (v - my) * (v - my)));
    let sxy = compensated_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    if !(sxx > 0.0) {
        return None;
    }
    if !(syy > 0.0) {
        return Some(1.0);
    }
    let r2 = (sxy * sxy / (sxx * syy)).min(1.0);
    let df = (n - 2) as f64;
    if r2 >= 1.0 {
        return Some(0.0);
    }
    let t2 = df * r2 / (1.0 - r2);
    // P(|T| > t) for Student t with df degrees of freedom
    Some(beta_reg(df / 2.0, 0.5, df / (df + t2)))
}

/// Benjamini–Hochberg adjusted p-values in input order (step-up with
/// enforced monotonicity, capped at 1).
pub fn benjamini_hochberg(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|a, b| p[*a].total_cmp(&p[*b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank0, &i) in order.iter().enumerate().rev() {
        // the ratio is exactly 1 at the top rank, so adjusted >= raw survives rounding
        running = running.min(p[i] * (m as f64 / (rank0 + 1) as f64));
        adjusted[i] = running;
    }
    adjusted
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterScore {
    pub name: String,
    /// Position in the input columns.
    pub index: usize,
    pub raw_p: f64,
    pub fdr_p: f64,
    pub logworth: f64,
    /// Input column was constant; reported with p = 1.
    pub zero_variance: bool,
}

/// Limits for turning a logworth ranking into a retained set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetentionRule {
    pub max_k: usize,
    pub logworth_floor: f64,
    /// A consecutive ratio `next/current` below this marks a large drop.
    pub drop_ratio: f64,
}

impl RetentionRule {
    pub fn for_mechanism() -> Self {
        RetentionRule {
            max_k: 3,
            logworth_floor: 1.3,
            drop_ratio: 0.5,
        }
    }

    pub fn for_total() -> Self {
        RetentionRule {
            max_k: 4,
            ..Self::for_mechanism()
        }
    }

    pub fn for_output(output: Output) -> Self {
        match output {
            Output::Total => Self::for_total(),
            Output::Mechanism(_) => Self::for_mechanism(),
        }
    }
}

/// How many leading entries of a descending logworth list to keep.
///
/// Entries below the floor are dropped and at most `max_k` are kept. If a
/// large drop occurs at a cut point within the first `max_k`, the list is
/// cut at the last such drop, so a dominant leader does not hide the
/// parameters that follow it.
pub fn retained_count(logworths: &[f64], rule: &RetentionRule) -> usize {
    let significant = logworths.iter().take_while(|v| **v >= rule.logworth_floor).count();
    let k = rule.max_k.min(significant);
    let mut cut = None;
    for i in 1..=k.min(significant.saturating_sub(1)) {
        if logworths[i] / logworths[i - 1] < rule.drop_ratio {
            cut = Some(i);
        }
    }
    cut.unwrap_or(k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningResult {
    pub output_name: String,
    /// Descending logworth; ties keep column order.
    pub scores: Vec<ParameterScore>,
    pub rule: RetentionRule,
    pub retained: Vec<String>,
}

impl ScreeningResult {
    /// Column indices of the retained parameters, in rank order.
    pub fn retained_indices(&self) -> Vec<usize> {
        self.scores[..self.retained.len()].iter().map(|s| s.index).collect()
    }

    /// Re-applies another retention rule to the same ranking.
    pub fn with_rule(&self, rule: RetentionRule) -> Self {
        let mut out = self.clone();
        out.rule = rule;
        out.retained = retain_parameters(&self.scores, &rule);
        out
    }

    pub fn none_significant(&self) -> bool {
        self.retained.is_empty()
    }

    pub fn score(&self, name: &str) -> Option<&ParameterScore> {
        self.scores.iter().find(|s| s.name == name)
    }
}

pub fn retain_parameters(scores: &[ParameterScore], rule: &RetentionRule) -> Vec<String> {
    let lw: Vec<f64> = scores.iter().map(|s| s.logworth).collect();
    scores[..retained_count(&lw, rule)].iter().map(|s| s.name.clone()).collect()
}

/// Ranks input columns by FDR logworth of their simple-regression slope
/// against `output`.
pub fn screen_fdr_logworth<R: AsRef<[f64]>, S: AsRef<str>>(
    inputs: &[R],
    output: &[f64],
    names: &[S],
    output_name: &str,
    rule: RetentionRule,
) -> Result<ScreeningResult> {
    let n = inputs.len();
    if n < 30 {
        return Err(Error::InvalidArgument(format!("screening needs at least 30 rows, got {n}")));
    }
    if output.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: output.len(),
        });
    }
    let dim = names.len();
    if let Some(bad) = inputs.iter().find(|r| r.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.as_ref().len(),
        });
    }
    if inputs.iter().flat_map(|r| r.as_ref()).chain(output).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("screening data must be finite".into()));
    }

    let raw: Vec<(f64, bool)> = (0..dim)
        .map(|j| {
            let col: Vec<f64> = inputs.iter().map(|r| r.as_ref()[j]).collect();
            match slope_p_value(&col, output) {
                Some(p) => (p, false),
                None => (1.0, true),
            }
        })
        .collect();
    let p: Vec<f64> = raw.iter().map(|r| r.0).collect();
    let fdr = benjamini_hochberg(&p);
    let mut scores: Vec<ParameterScore> = (0..dim)
        .map(|j| ParameterScore {
            name: names[j].as_ref().to_string(),
            index: j,
            raw_p: p[j],
            fdr_p: fdr[j],
            logworth: logworth(fdr[j]),
            zero_variance: raw[j].1,
        })
        .collect();
    // stable sort keeps column order for ties
    scores.sort_by(|a, b| b.logworth.total_cmp(&a.logworth));
    let retained = retain_parameters(&scores, &rule);
    Ok(ScreeningResult {
        output_name: output_name.to_string(),
        scores,
        rule,
        retained,
    })
}

/// Screens one energy column of a dataset against all catalog parameters.
pub fn screen_dataset(dataset: &Dataset, output: Output, rule: RetentionRule) -> Result<ScreeningResult> {
    let names: Vec<&str> = ParameterCatalog::canonical().names().collect();
    screen_fdr_logworth(&dataset.inputs(), &dataset.column(output), &names, output.as_str(), rule)
}

pub fn save_screening_csv(result: &ScreeningResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["parameter", "raw_p", "fdr_p", "logworth", "retained"])?;
    for (rank, s) in result.scores.iter().enumerate() {
        w.write_record([
            s.name.clone(),
            format_float(s.raw_p),
            format_float(s.fdr_p),
            format_float(s.logworth),
            (rank < result.retained.len()).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolIndex {
    pub name: String,
    pub s1: f64,
    pub st: f64,
    pub s1_stderr: f64,
    pub st_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolResult {
    pub indices: Vec<SobolIndex>,
    pub n_base_samples: usize,
    pub evaluations_used: usize,
    pub variance: f64,
    /// Output variance is zero; every index is undefined (NaN).
    pub degenerate: bool,
}

impl SobolResult {
    pub fn get(&self, name: &str) -> Option<&SobolIndex> {
        self.indices.iter().find(|s| s.name == name)
    }

    /// Names ordered by descending first-order index; ties keep input order.
    pub fn ranking_by_s1(&self) -> Vec<String> {
        let mut idx: Vec<&SobolIndex> = self.indices.iter().collect();
        idx.sort_by(|a, b| b.s1.total_cmp(&a.s1));
        idx.into_iter().map(|s| s.name.clone()).collect()
    }
}

pub const BOOTSTRAP_RESAMPLES: usize = 100;

/// Sobol' indices of `f` on the unit cube `[0,1]^dim` with a Saltelli
/// pick-freeze design on LHS bases and Jansen estimators.
pub fn sobol_indices_unit<F, S>(f: F, names: &[S], n_base: usize, seed: u64) -> Result<SobolResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
    S: AsRef<str>,
{
    let dim = names.len();
    if n_base < 128 {
        return Err(Error::InvalidArgument(format!("n_base must be >= 128, got {n_base}")));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("at least one input is required".into()));
    }
    let (a, b) = saltelli_bases(n_base, dim, seed)?;
    let fa: Vec<f64> = (0..n_base).into_par_iter().map(|r| f(a.row(r))).collect();
    let fb: Vec<f64> = (0..n_base).into_par_iter().map(|r| f(b.row(r))).collect();
    let fab: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            (0..n_base)
                .into_par_iter()
                .map_init(
                    || vec![0.0; dim],
                    |row, r| {
                        row.copy_from_slice(a.row(r));
                        row[i] = b.get(r, i);
                        f(row)
                    },
                )
                .collect()
        })
        .collect();
    if fa.iter().chain(&fb).chain(fab.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            point: "sobol design".into(),
            message: "model returned a non-finite value".into(),
        });
    }

    let all: Vec<usize> = (0..n_base).collect();
    let point = jansen(&fa, &fb, &fab, &all);
    let evaluations_used = n_base * (dim + 2);
    let Some((variance, s1, st)) = point else {
        return Ok(SobolResult {
            indices: names
                .iter()
                .map(|n| SobolIndex {
                    name: n.as_ref().to_string(),
                    s1: f64::NAN,
                    st: f64::NAN,
                    s1_stderr: f64::NAN,
                    st_stderr: f64::NAN,
                })
                .collect(),
            n_base_samples: n_base,
            evaluations_used,
            variance: 0.0,
            degenerate: true,
        });
    };

    let mut rng = rng_from_seed(sub_seed(seed, 0xB007));
    let resamples: Vec<Vec<usize>> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n_base).map(|_| rng.random_range(0..n_base)).collect())
        .collect();
    let boot: Vec<(Vec<f64>, Vec<f64>)> = resamples
        .par_iter()
        .filter_map(|rows| jansen(&fa, &fb, &fab, rows).map(|(_, s1, st)| (s1, st)))
        .collect();
    let stderr = |pick: &dyn Fn(&(Vec<f64>, Vec<f64>)) -> f64| -> f64 {
        let k = boot.len() as f64;
        if boot.len() < 2 {
            return f64::NAN;
        }
        let mean = compensated_sum(boot.iter().map(pick)) / k;
        (compensated_sum(boot.iter().map(|b| (pick(b) - mean).powi(2))) / (k - 1.0)).sqrt()
    };
    let indices = (0..dim)
        .map(|i| SobolIndex {
            name: names[i].as_ref().to_string(),
            s1: s1[i],
            st: st[i],
            s1_stderr: stderr(&|b| b.0[i]),
            st_stderr: stderr(&|b| b.1[i]),
        })
        .collect();
    Ok(SobolResult {
        indices,
        n_base_samples: n_base,
        evaluations_used,
        variance,
        degenerate: false,
    })
}

/// Pooled variance and Jansen S1/ST over the given base rows, or `None`
/// when the variance vanishes.
fn jansen(fa: &[f64], fb: &[f64], fab: &[Vec<f64>], rows: &[usize]) -> Option<(f64, Vec<f64>, Vec<f64>)> {
    let n = rows.len() as f64;
    let mean = compensated_sum(rows.iter().flat_map(|r| [fa[*r], fb[*r]])) / (2.0 * n);
    let variance = compensated_sum(rows.iter().flat_map(|r| [(fa[*r] - mean).powi(2), (fb[*r] - mean).powi(2)])) / (2.0 * n);
    let scale = mean.abs().max(1.0);
    if !(variance > 1e-24 * scale * scale) {
        return None;
    }
    let mut s1 = Vec::with_capacity(fab.len());
    let mut st = Vec::with_capacity(fab.len());
    for col in fab {
        let d_b = compensated_sum(rows.iter().map(|r| (fb[*r] - col[*r]).powi(2))) / (2.0 * n);
        let d_a = compensated_sum(rows.iter().map(|r| (fa[*r] - col[*r]).powi(2))) / (2.0 * n);
        s1.push((variance - d_b) / variance);
        st.push(d_a / variance);
    }
    Some((variance, s1, st))
}

/// Sobol' indices of a model over the 41 catalog parameters, sampled from
/// `dist` through its quantile function.
pub fn sobol_indices<F>(f: F, dist: &SamplingDistribution, n_base: usize, seed: u64) -> Result<SobolResult>
where
    F: Fn(&[f64; N_PARAMS]) -> f64 + Sync,
{
    dist.validate()?;
    let catalog = ParameterCatalog::canonical();
    let means = catalog.means();
    let names: Vec<&str> = catalog.names().collect();
    sobol_indices_unit(
        |u| {
            let mut x = [0.0; N_PARAMS];
            for (j, v) in x.iter_mut().enumerate() {
                *v = dist.quantile(means[j], u[j]);
            }
            f(&x)
        },
        &names,
        n_base,
        seed,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub small: SobolResult,
    pub large: SobolResult,
    pub top_k: usize,
    pub ranking_small: Vec<String>,
    pub ranking_large: Vec<String>,
    /// Top-k first-order rankings are identical, in order.
    pub agrees: bool,
    pub max_abs_delta_s1: f64,
}

/// Runs the estimator at two base sizes and compares the top-`k` rankings.
pub fn sobol_convergence<F>(
    f: F,
    dist: &SamplingDistribution,
    n_small: usize,
    n_large: usize,
    seed: u64,
    top_k: usize,
) -> Result<ConvergenceReport>
where
    F: Fn(&[f64; N_PARAMS]) -> f64 + Sync,
{
    if n_small >= n_large {
        return Err(Error::InvalidArgument(format!("n_small ({n_small}) must be below n_large ({n_large})")));
    }
    let small = sobol_indices(&f, dist, n_small, seed)?;
    let large = sobol_indices(&f, dist, n_large, sub_seed(seed, 1))?;
    Ok(compare_runs(small, large, top_k))
}

pub fn compare_runs(small: SobolResult, large: SobolResult, top_k: usize) -> ConvergenceReport {
    let (ranking_small, ranking_large, agrees, max_abs_delta_s1) = if small.degenerate || large.degenerate {
        (vec![], vec![], small.degenerate == large.degenerate, 0.0)
    } else {
        let rs: Vec<String> = small.ranking_by_s1().into_iter().take(top_k).collect();
        let rl: Vec<String> = large.ranking_by_s1().into_iter().take(top_k).collect();
        let delta = small
            .indices
            .iter()
            .zip(&large.indices)
            .map(|(a, b)| (a.s1 - b.s1).abs())
            .fold(0.0, f64::max);
        let agrees = rs == rl;
        (rs, rl, agrees, delta)
    };
    ConvergenceReport {
        small,
        large,
        top_k,
        ranking_small,
        ranking_large,
        agrees,
        max_abs_delta_s1,
    }
}

pub fn save_sobol_csv(result: &SobolResult, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["parameter", "S1", "ST", "S1_stderr", "ST_stderr"])?;
    for s in &result.indices {
        w.write_record([
            s.name.clone(),
            format_float(s.s1),
            format_float(s.st),
            format_float(s.s1_stderr),
            format_float(s.st_stderr),
        ])?;
    }
    w.flush()?;
    Ok(())
}
