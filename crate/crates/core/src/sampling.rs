//! Input designs on the unit hypercube: Monte Carlo, Latin hypercube,
//! Latin stratified, and the pick-freeze matrices used for Sobol' indices.
//!
//! Every sampler is a pure function of its arguments and seed. The RNG is
//! ChaCha8, which produces the same stream on every platform.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param_space::{format_float, ParameterCatalog, SamplingDistribution, N_PARAMS};

pub type SeedRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeedRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent seed for a named sub-stream (splitmix64 finalizer).
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Mc,
    Lhs,
    Lss { strata_per_dim: usize },
    SaltelliA,
    SaltelliB,
    SaltelliAbi(usize),
}

/// `n_samples × dim` points in [0, 1], stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n_samples: usize,
    dim: usize,
    values: Vec<f64>,
    scheme: Scheme,
}

impl DesignMatrix {
    pub fn from_values(n_samples: usize, dim: usize, values: Vec<f64>, scheme: Scheme) -> Result<Self> {
        if values.len() != n_samples * dim {
            return Err(Error::DimensionMismatch {
                expected: n_samples * dim,
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("design entry {v} outside [0, 1]")));
        }
        Ok(DesignMatrix {
            n_samples,
            dim,
            values,
            scheme,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }
}

fn check_n(n: usize, dim: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("number of samples must be at least 1".into()));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    Ok(())
}

/// Lower and upper edge of stratum `k` out of `n`.
pub fn stratum_bounds(k: usize, n: usize) -> (f64, f64) {
    (k as f64 / n as f64, (k + 1) as f64 / n as f64)
}

/// Uniform point inside stratum `k` of `n`, strictly below the upper edge.
fn point_in_stratum(k: usize, n: usize, r: f64) -> f64 {
    let (lo, hi) = stratum_bounds(k, n);
    let u = lo + r * (hi - lo);
    if u >= hi {
        lo
    } else {
        u
    }
}

pub fn sample_mc(n: usize, dim: usize, seed: u64) -> Result<DesignMatrix> {
    check_n(n, dim)?;
    let mut rng = rng_from_seed(seed);
    let values = (0..n * dim).map(|_| rng.random::<f64>()).collect();
    Ok(DesignMatrix {
        n_samples: n,
        dim,
        values,
        scheme: Scheme::Mc,
    })
}

pub fn sample_lhs(n: usize, dim: usize, seed: u64) -> Result<DesignMatrix> {
    check_n(n, dim)?;
    let mut rng = rng_from_seed(seed);
    let mut values = vec![0.0; n * dim];
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..dim {
        perm.shuffle(&mut rng);
        for (i, &k) in perm.iter().enumerate() {
            values[i * dim + j] = point_in_stratum(k, n, rng.random::<f64>());
        }
    }
    Ok(DesignMatrix {
        n_samples: n,
        dim,
        values,
        scheme: Scheme::Lhs,
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Largest divisor of `n` not exceeding `⌊√n⌋`.
pub fn default_strata(n: usize) -> usize {
    let mut s = (n as f64).sqrt().floor() as usize;
    while s > 1 && !n.is_multiple_of(s) {
        s -= 1;
    }
    s.max(1)
}

/// Latin stratified sampling.
///
/// Each dimension is cut into `strata_per_dim` coarse strata holding
/// `m = n / strata_per_dim` points each. Coarse labels follow a cyclic
/// array (`v`, `v + u·g_j mod s`) with `g_j` coprime to `s`, so the first
/// column is pairwise balanced against every other one whenever `m` is a
/// multiple of `s`. Labels are then randomly relabeled per column and each
/// coarse stratum is filled Latin-style on the fine grid of `n` strata.
/// With `strata_per_dim = n` this is exactly Latin hypercube sampling.
pub fn sample_lss(n: usize, dim: usize, seed: u64, strata_per_dim: usize) -> Result<DesignMatrix> {
    check_n(n, dim)?;
    if strata_per_dim == 0 || !n.is_multiple_of(strata_per_dim) {
        return Err(Error::InvalidArgument(format!(
            "sample count {n} is not divisible by strata_per_dim {strata_per_dim}"
        )));
    }
    let s = strata_per_dim;
    let m = n / s;
    let mut rng = rng_from_seed(seed);

    let mut multipliers = Vec::with_capacity(dim);
    let mut g = 0usize;
    while multipliers.len() < dim {
        if g == 0 || gcd(g, s) == 1 {
            multipliers.push(g);
        }
        g += 1;
    }

    let mut values = vec![0.0; n * dim];
    let mut relabel: Vec<usize> = (0..s).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::with_capacity(m); s];
    let mut fine: Vec<usize> = (0..m).collect();
    for (j, &gj) in multipliers.iter().enumerate() {
        relabel.shuffle(&mut rng);
        members.iter_mut().for_each(Vec::clear);
        for i in 0..n {
            let (u, v) = (i / s, i % s);
            let label = (v + u * gj) % s;
            members[relabel[label]].push(i);
        }
        for (c, pts) in members.iter().enumerate() {
            fine.shuffle(&mut rng);
            for (&i, &f) in pts.iter().zip(&fine) {
                values[i * dim + j] = point_in_stratum(c * m + f, n, rng.random::<f64>());
            }
        }
    }
    Ok(DesignMatrix {
        n_samples: n,
        dim,
        values,
        scheme: Scheme::Lss { strata_per_dim: s },
    })
}

/// Pick-freeze design: two independent base designs and `dim` splices.
#[derive(Debug, Clone)]
pub struct SaltelliDesign {
    pub a: DesignMatrix,
    pub b: DesignMatrix,
    pub ab: Vec<DesignMatrix>,
}

impl SaltelliDesign {
    /// Model evaluations needed for first- and total-order indices.
    pub fn evaluation_count(&self) -> usize {
        self.a.n_samples * (self.a.dim + 2)
    }
}

/// The independent LHS bases `A` and `B` of [`saltelli_matrices`], for
/// callers that splice `AB_i` rows on the fly.
pub fn saltelli_bases(n: usize, dim: usize, seed: u64) -> Result<(DesignMatrix, DesignMatrix)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("pick-freeze needs n >= 2, got {n}")));
    }
    let mut a = sample_lhs(n, dim, sub_seed(seed, 0xA))?;
    a.scheme = Scheme::SaltelliA;
    let mut b = sample_lhs(n, dim, sub_seed(seed, 0xB))?;
    b.scheme = Scheme::SaltelliB;
    Ok((a, b))
}

/// `AB_i` is `A` with column `i` taken from `B`. Base designs are LHS.
pub fn saltelli_matrices(n: usize, dim: usize, seed: u64) -> Result<SaltelliDesign> {
    let (a, b) = saltelli_bases(n, dim, seed)?;
    let ab = (0..dim)
        .map(|i| {
            let mut values = a.values.clone();
            for r in 0..n {
                values[r * dim + i] = b.values[r * dim + i];
            }
            DesignMatrix {
                n_samples: n,
                dim,
                values,
                scheme: Scheme::SaltelliAbi(i),
            }
        })
        .collect();
    Ok(SaltelliDesign { a, b, ab })
}

/// Writes a design as CSV. For 41-column designs the header uses catalog
/// names and, when `dist` is given, values are mapped to catalog units.
pub fn save_design_csv(design: &DesignMatrix, path: &Path, dist: Option<&SamplingDistribution>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    write_design(design, &mut w, dist)?;
    w.flush()?;
    Ok(())
}

pub fn write_design<W: std::io::Write>(
    design: &DesignMatrix,
    w: &mut csv::Writer<W>,
    dist: Option<&SamplingDistribution>,
) -> Result<()> {
    let catalog = ParameterCatalog::canonical();
    let named = design.dim == N_PARAMS;
    if dist.is_some() && !named {
        return Err(Error::InvalidArgument(
            "denormalized output needs a 41-column design".into(),
        ));
    }
    let header: Vec<String> = if named {
        catalog.names().map(String::from).collect()
    } else {
        (1..=design.dim).map(|j| format!("x{j}")).collect()
    };
    w.write_record(&header)?;
    for row in design.rows() {
        let record: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, &u)| match dist {
                Some(d) => format_float(d.quantile(catalog.specs()[j].mean, u)),
                None => format_float(u),
            })
            .collect();
        w.write_record(&record)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stratum_of(u: f64, n: usize) -> usize {
        let mut k = ((u * n as f64).floor() as usize).min(n - 1);
        // settle round-off against the same edges the sampler uses
        while stratum_bounds(k, n).0 > u {
            k -= 1;
        }
        while stratum_bounds(k, n).1 <= u {
            k += 1;
        }
        k
    }

    #[test]
    fn mc_is_deterministic_and_bounded() {
        let a = sample_mc(1555, 41, 7).unwrap();
        let b = sample_mc(1555, 41, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_samples(), 1555);
        assert!(a.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_ne!(a, sample_mc(1555, 41, 8).unwrap());
    }

    #[test]
    fn mc_mean_converges() {
        let d = sample_mc(100_000, 1, 3).unwrap();
        let mean = d.values().iter().sum::<f64>() / 1e5;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(sample_mc(0, 3, 1).is_err());
        assert!(sample_lhs(0, 3, 1).is_err());
        assert!(sample_lss(0, 3, 1, 1).is_err());
    }

    #[test]
    fn lhs_small_cases() {
        let d = sample_lhs(4, 2, 11).unwrap();
        for j in 0..2 {
            let mut ks: Vec<_> = d.column(j).iter().map(|&u| stratum_of(u, 4)).collect();
            ks.sort();
            assert_eq!(ks, vec![0, 1, 2, 3]);
        }
        let d = sample_lhs(1, 3, 5).unwrap();
        assert!(d.values().iter().all(|&u| (0.0..1.0).contains(&u)));
    }

    #[test]
    fn lhs_empirical_cdf_at_edges() {
        let n = 1000;
        let d = sample_lhs(n, 5, 2).unwrap();
        for j in 0..5 {
            let col = d.column(j);
            for k in 0..=n {
                let edge = k as f64 / n as f64;
                let below = col.iter().filter(|&&u| u < edge).count();
                let dev = (below as f64 / n as f64 - edge).abs();
                assert!(dev < 1.0 / n as f64, "dim {j} edge {k}: {dev}");
            }
        }
    }

    #[test]
    fn lss_reduces_to_lhs_invariant() {
        let d = sample_lss(4, 2, 9, 4).unwrap();
        for j in 0..2 {
            let mut ks: Vec<_> = d.column(j).iter().map(|&u| stratum_of(u, 4)).collect();
            ks.sort();
            assert_eq!(ks, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn lss_one_point_per_coarse_cell() {
        for seed in 0..50 {
            let d = sample_lss(4, 2, seed, 2).unwrap();
            let mut counts = [[0; 2]; 2];
            for r in d.rows() {
                counts[(r[0] * 2.0) as usize][(r[1] * 2.0) as usize] += 1;
            }
            assert_eq!(counts, [[1, 1], [1, 1]], "seed {seed}");
        }
    }

    #[test]
    fn lss_pairwise_balance_with_first_column() {
        // m = 100 is a multiple of s = 50: every (col 0, col j) coarse pair holds 2 points
        let (n, s) = (5000, 50);
        let d = sample_lss(n, 4, 1, s).unwrap();
        for j in 1..4 {
            let mut counts = vec![0usize; s * s];
            for r in d.rows() {
                let a = stratum_of(r[0], n) / (n / s);
                let b = stratum_of(r[j], n) / (n / s);
                counts[a * s + b] += 1;
            }
            assert!(counts.iter().all(|&c| c == 2), "column {j}");
        }
    }

    #[test]
    fn lss_divisibility() {
        assert!(sample_lss(10, 2, 0, 3).is_err());
        assert_eq!(default_strata(5000), 50);
        assert_eq!(default_strata(4), 2);
        assert_eq!(default_strata(7), 1);
    }

    #[test]
    fn saltelli_splices_are_exact() {
        let s = saltelli_matrices(64, 5, 3).unwrap();
        for (i, ab) in s.ab.iter().enumerate() {
            for j in 0..5 {
                let want = if j == i { s.b.column(j) } else { s.a.column(j) };
                let got = ab.column(j);
                assert!(want.iter().zip(&got).all(|(a, b)| a.to_bits() == b.to_bits()));
            }
        }
        assert_eq!(s.evaluation_count(), 64 * 7);
        assert!(saltelli_matrices(1, 5, 3).is_err());
    }

    #[test]
    fn saltelli_evaluation_count_full_space() {
        // 10 000 · (41 + 2)
        let s = saltelli_matrices(10_000, 41, 1).unwrap();
        assert_eq!(s.evaluation_count(), 430_000);
    }
}
