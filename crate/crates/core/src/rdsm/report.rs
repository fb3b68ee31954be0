use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DirectRdsm, SummedRdsm};
use crate::error::{Error, Result};
use crate::param_space::{format_float, Dataset, Output, ParamVector, ParameterCatalog, SamplingDistribution};
use crate::sampling::{default_strata, sample_lss, sub_seed};

/// `|a − b|` relative to the mean of `|a|` and `|b|`, in percent.
pub fn percent_difference(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    100.0 * (a - b).abs() / (0.5 * (a.abs() + b.abs()))
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UqRow {
    pub params: Vec<String>,
    pub mean: f64,
    pub std: f64,
    /// Large-sample standard error of `std`.
    pub std_stderr: f64,
    /// Percent differences to the next row; `None` on the last row.
    pub pct_diff_mean: Option<f64>,
    pub pct_diff_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UqReport {
    pub distribution: String,
    pub n_samples: usize,
    pub rows: Vec<UqRow>,
}

/// Propagates input uncertainty through `predict` for nested parameter
/// subsets. For each subset an LSS design of `n` points varies only that
/// subset under `dist`, the rest staying at catalog means.
pub fn uq_sweep<F>(
    predict: F,
    subsets: &[Vec<String>],
    n: usize,
    seed: u64,
    dist: &SamplingDistribution,
) -> Result<UqReport>
where
    F: Fn(&ParamVector) -> Result<f64> + Sync,
{
    dist.validate()?;
    let catalog = ParameterCatalog::canonical();
    let means = catalog.means();
    let mut previous: BTreeSet<usize> = BTreeSet::new();
    let mut rows = Vec::with_capacity(subsets.len());
    for (k, subset) in subsets.iter().enumerate() {
        let idx = catalog.indices_of(subset)?;
        let set: BTreeSet<usize> = idx.iter().copied().collect();
        if set.len() != idx.len() {
            return Err(Error::InvalidArgument(format!("subset {k} repeats a parameter")));
        }
        if !previous.is_subset(&set) {
            return Err(Error::InvalidArgument(format!("subset {k} does not extend the previous one")));
        }
        previous = set;

        let values: Vec<f64> = if idx.is_empty() {
            vec![predict(&means)?]
        } else {
            let design = sample_lss(n, idx.len(), sub_seed(seed, k as u64), default_strata(n))?;
            (0..n)
                .into_par_iter()
                .map(|r| {
                    let u = design.row(r);
                    let mut x = means;
                    for (c, &j) in idx.iter().enumerate() {
                        x[j] = dist.quantile(means[j], u[c]);
                    }
                    predict(&x)
                })
                .collect::<Result<_>>()?
        };
        let (mean, std) = mean_std(&values);
        rows.push(UqRow {
            params: subset.clone(),
            mean,
            std,
            std_stderr: std / (2.0 * (values.len().max(2) - 1) as f64).sqrt(),
            pct_diff_mean: None,
            pct_diff_std: None,
        });
    }
    for k in 1..rows.len() {
        let (m, s) = (rows[k].mean, rows[k].std);
        rows[k - 1].pct_diff_mean = Some(percent_difference(rows[k - 1].mean, m));
        rows[k - 1].pct_diff_std = Some(percent_difference(rows[k - 1].std, s));
    }
    Ok(UqReport {
        distribution: dist.tag(),
        n_samples: n,
        rows,
    })
}

/// Prefixes of a ranking: `[a]`, `[a, b]`, ...
pub fn nested_prefixes<S: AsRef<str>>(ranking: &[S]) -> Vec<Vec<String>> {
    (1..=ranking.len())
        .map(|k| ranking[..k].iter().map(|s| s.as_ref().to_string()).collect())
        .collect()
}

pub fn save_uq_csv(report: &UqReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["parameters", "mean", "std", "pct_diff_mean", "pct_diff_std"])?;
    let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    for r in &report.rows {
        w.write_record([
            r.params.join(" "),
            format_float(r.mean),
            format_float(r.std),
            opt(r.pct_diff_mean),
            opt(r.pct_diff_std),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproachStats {
    pub mean: f64,
    pub std: f64,
    /// Mean of the per-row absolute percentage errors.
    pub mae_pct: f64,
    /// Standard deviation of the per-row absolute percentage errors.
    pub mae_std_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSection {
    pub n_rows: usize,
    pub truth_mean: f64,
    pub truth_std: f64,
    pub direct: ApproachStats,
    pub summed: ApproachStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub all: ComparisonSection,
    /// Rows inside the disbond gate; `None` when there are none.
    pub engaged: Option<ComparisonSection>,
}

fn approach(pred: &[f64], truth: &[f64]) -> Result<ApproachStats> {
    let errs: Vec<f64> = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| {
            if *t == 0.0 {
                Err(Error::InvalidArgument("validation total energy is zero".into()))
            } else {
                Ok(100.0 * (p - t).abs() / t.abs())
            }
        })
        .collect::<Result<_>>()?;
    let (mean, std) = mean_std(pred);
    let (mae_pct, mae_std_pct) = mean_std(&errs);
    Ok(ApproachStats {
        mean,
        std,
        mae_pct,
        mae_std_pct,
    })
}

fn section(truth: &[f64], direct: &[f64], summed: &[f64]) -> Result<ComparisonSection> {
    let (truth_mean, truth_std) = mean_std(truth);
    Ok(ComparisonSection {
        n_rows: truth.len(),
        truth_mean,
        truth_std,
        direct: approach(direct, truth)?,
        summed: approach(summed, truth)?,
    })
}

/// Builds the comparison from precomputed predictions and gate flags.
pub fn compare_predictions(truth: &[f64], direct: &[f64], summed: &[f64], engaged: &[bool]) -> Result<ComparisonReport> {
    if truth.is_empty() {
        return Err(Error::EmptyValidation);
    }
    if direct.len() != truth.len() || summed.len() != truth.len() || engaged.len() != truth.len() {
        return Err(Error::InvalidArgument("prediction and validation lengths differ".into()));
    }
    let pick = |v: &[f64]| -> Vec<f64> { v.iter().zip(engaged).filter(|(_, e)| **e).map(|(x, _)| *x).collect() };
    let all = section(truth, direct, summed)?;
    let engaged = if engaged.iter().any(|e| *e) {
        Some(section(&pick(truth), &pick(direct), &pick(summed))?)
    } else {
        None
    };
    Ok(ComparisonReport { all, engaged })
}

/// Compares both approaches on validation rows that neither was trained on.
pub fn compare_approaches(direct: &DirectRdsm, summed: &SummedRdsm, validation: &Dataset) -> Result<ComparisonReport> {
    if validation.is_empty() {
        return Err(Error::EmptyValidation);
    }
    for row in &validation.rows {
        if direct.training_ids().contains(&row.id) || summed.training_ids().contains(&row.id) {
            return Err(Error::InvalidArgument(format!(
                "validation row {}:{} was used for training",
                row.id.origin, row.id.index
            )));
        }
    }
    let truth = validation.column(Output::Total);
    let inputs = validation.inputs();
    let d: Vec<f64> = inputs.par_iter().map(|x| direct.predict(x)).collect::<Result<_>>()?;
    let s: Vec<(f64, bool)> = inputs
        .par_iter()
        .map(|x| summed.predict(x).map(|p| (p.total, p.di_engaged)))
        .collect::<Result<_>>()?;
    let (s, engaged): (Vec<f64>, Vec<bool>) = s.into_iter().unzip();
    compare_predictions(&truth, &d, &s, &engaged)
}

/// Writes the comparison with one row per statistic and truth / direct /
/// summed columns for both sections; an absent section is written as `NA`.
pub fn save_comparison_csv(report: &ComparisonReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "statistic",
        "all_truth",
        "all_direct",
        "all_summed",
        "engaged_truth",
        "engaged_direct",
        "engaged_summed",
    ])?;
    let cells = |s: Option<&ComparisonSection>, f: &dyn Fn(&ComparisonSection) -> [Option<f64>; 3]| -> Vec<String> {
        match s {
            Some(s) => f(s).iter().map(|v| v.map(format_float).unwrap_or_default()).collect(),
            None => vec!["NA".into(); 3],
        }
    };
    let stats: [(&str, &dyn Fn(&ComparisonSection) -> [Option<f64>; 3]); 5] = [
        ("n_rows", &|s| [Some(s.n_rows as f64), None, None]),
        ("mean", &|s| [Some(s.truth_mean), Some(s.direct.mean), Some(s.summed.mean)]),
        ("std", &|s| [Some(s.truth_std), Some(s.direct.std), Some(s.summed.std)]),
        ("mae_pct", &|s| [None, Some(s.direct.mae_pct), Some(s.summed.mae_pct)]),
        ("mae_std_pct", &|s| [None, Some(s.direct.mae_std_pct), Some(s.summed.mae_std_pct)]),
    ];
    for (name, f) in stats {
        let mut rec = vec![name.to_string()];
        rec.extend(cells(Some(&report.all), f));
        rec.extend(cells(report.engaged.as_ref(), f));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
