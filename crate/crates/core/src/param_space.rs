//! The 41-parameter material space, its sampling distributions, the six
//! energy outputs, and CSV persistence of datasets.
//!
//! Means and units are stored exactly as tabulated (msi, ksi, lbf-in/in²,
//! lbs/in, dimensionless). Every index into an input vector refers to the
//! fixed ordering of [`ParameterCatalog::canonical`].

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Number of material parameters in the space.
pub const N_PARAMS: usize = 41;

/// A 41-vector of material parameters in catalog order and catalog units.
pub type ParamVector = [f64; N_PARAMS];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterGroup {
    Metal,
    ResinCohesive,
    ResinInterface,
    #[serde(rename = "lamina_EBX1200")]
    LaminaEbx1200,
    #[serde(rename = "lamina_ELT1800")]
    LaminaElt1800,
    #[serde(rename = "lamina_H7500")]
    LaminaH7500,
    #[serde(rename = "lamina_H7781")]
    LaminaH7781,
    LaminaShearShared,
}

impl ParameterGroup {
    pub fn as_str(&self) -> &'static str {
        match self {
            ParameterGroup::Metal => "metal",
            ParameterGroup::ResinCohesive => "resin_cohesive",
            ParameterGroup::ResinInterface => "resin_interface",
            ParameterGroup::LaminaEbx1200 => "lamina_EBX1200",
            ParameterGroup::LaminaElt1800 => "lamina_ELT1800",
            ParameterGroup::LaminaH7500 => "lamina_H7500",
            ParameterGroup::LaminaH7781 => "lamina_H7781",
            ParameterGroup::LaminaShearShared => "lamina_shear_shared",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSpec {
    pub name: &'static str,
    pub mean: f64,
    pub units: &'static str,
    pub group: ParameterGroup,
    pub description: &'static str,
}

/// The immutable, ordered set of 41 material parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterCatalog {
    specs: Vec<ParameterSpec>,
    index: HashMap<&'static str, usize>,
}

const fn spec(
    name: &'static str,
    mean: f64,
    units: &'static str,
    group: ParameterGroup,
    description: &'static str,
) -> ParameterSpec {
    ParameterSpec {
        name,
        mean,
        units,
        group,
        description,
    }
}

fn canonical_specs() -> Vec<ParameterSpec> {
    use ParameterGroup::*;
    vec![
        // aluminum 5456-H116
        spec("E", 10.1, "msi", Metal, "Young's modulus"),
        spec("nu", 0.29, "-", Metal, "Poisson's ratio"),
        spec("A", 29.8, "ksi", Metal, "yield stress"),
        spec("B", 103.6, "ksi", Metal, "strength coefficient"),
        spec("Aln", 0.607, "-", Metal, "strain hardening exponent"),
        // resin between the plies
        spec("EC", 10.0, "msi", ResinCohesive, "elastic modulus"),
        spec("XT", 7.6, "ksi", ResinCohesive, "nominal stress, normal-only mode"),
        spec("XS", 4.9, "ksi", ResinCohesive, "nominal stress, first/second shear direction"),
        spec("GI", 7.6, "lbf-in/in^2", ResinCohesive, "normal mode fracture energy"),
        spec("GII", 16.6, "lbf-in/in^2", ResinCohesive, "shear mode fracture energy"),
        spec("BK", 2.6, "-", ResinCohesive, "Benzeggagh-Kenane exponent"),
        // resin at the composite/metal interface
        spec("EiC", 10.0, "msi", ResinInterface, "elastic modulus"),
        spec("XiT", 7.6, "ksi", ResinInterface, "nominal stress, normal-only mode"),
        spec("XiS", 4.9, "ksi", ResinInterface, "nominal stress, first/second shear direction"),
        spec("GiI", 7.6, "lbf-in/in^2", ResinInterface, "normal mode fracture energy"),
        spec("GiII", 16.6, "lbf-in/in^2", ResinInterface, "shear mode fracture energy"),
        spec("BKi", 2.6, "-", ResinInterface, "Benzeggagh-Kenane exponent"),
        // lamina plies
        spec("E1200", 2.8, "msi", LaminaEbx1200, "Young's modulus"),
        spec("X1200", 53.0, "ksi", LaminaEbx1200, "tensile strength"),
        spec("V1200", 0.15, "-", LaminaEbx1200, "Poisson's ratio"),
        spec("G1200", 150.0, "lbs/in", LaminaEbx1200, "intralaminar fracture toughness"),
        spec("E1800", 2.8, "msi", LaminaElt1800, "Young's modulus"),
        spec("X1800", 53.0, "ksi", LaminaElt1800, "tensile strength"),
        spec("V1800", 0.15, "-", LaminaElt1800, "Poisson's ratio"),
        spec("G1800", 150.0, "lbs/in", LaminaElt1800, "intralaminar fracture toughness"),
        spec("E7500", 2.83, "msi", LaminaH7500, "Young's modulus"),
        spec("X7500", 46.7, "ksi", LaminaH7500, "tensile strength"),
        spec("V7500", 0.15, "-", LaminaH7500, "Poisson's ratio"),
        spec("G7500", 100.0, "lbs/in", LaminaH7500, "intralaminar fracture toughness"),
        spec("E7781", 4.4, "msi", LaminaH7781, "Young's modulus"),
        spec("X7781", 70.0, "ksi", LaminaH7781, "tensile strength"),
        spec("V7781", 0.15, "-", LaminaH7781, "Poisson's ratio"),
        spec("G7781", 100.0, "lbs/in", LaminaH7781, "intralaminar fracture toughness"),
        // shear behavior shared by every ply
        spec("GS", 0.8, "msi", LaminaShearShared, "shear modulus of lamina"),
        spec("SS", 5.16, "ksi", LaminaShearShared, "shear strength of lamina"),
        spec("alpha12", 0.2767, "-", LaminaShearShared, "shear damage parameter"),
        spec("d12", 0.714, "-", LaminaShearShared, "maximum shear damage"),
        spec("epsilon", 0.02, "-", LaminaShearShared, "maximum shear plastic strain"),
        spec("sigmaY", 5.16, "ksi", LaminaShearShared, "effective shear yield stress"),
        spec("C", 0.65, "msi", LaminaShearShared, "coefficient in shear hardening equation"),
        spec("P", 0.729, "-", LaminaShearShared, "power term in shear hardening equation"),
    ]
}

static CANONICAL: LazyLock<ParameterCatalog> = LazyLock::new(build_catalog);

/// Builds the canonical 41-entry catalog.
pub fn build_catalog() -> ParameterCatalog {
    let specs = canonical_specs();
    let index = specs.iter().enumerate().map(|(i, s)| (s.name, i)).collect();
    ParameterCatalog { specs, index }
}

impl ParameterCatalog {
    /// Shared instance of the canonical catalog.
    pub fn canonical() -> &'static ParameterCatalog {
        &CANONICAL
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn specs(&self) -> &[ParameterSpec] {
        &self.specs
    }

    pub fn get(&self, name: &str) -> Option<&ParameterSpec> {
        self.index.get(name).map(|&i| &self.specs[i])
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn indices_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.index_of(n.as_ref())).collect()
    }

    pub fn name(&self, index: usize) -> &'static str {
        self.specs[index].name
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.specs.iter().map(|s| s.name)
    }

    pub fn means(&self) -> ParamVector {
        let mut out = [0.0; N_PARAMS];
        for (o, s) in out.iter_mut().zip(&self.specs) {
            *o = s.mean;
        }
        out
    }

    pub fn group_count(&self, group: ParameterGroup) -> usize {
        self.specs.iter().filter(|s| s.group == group).count()
    }
}

/// Per-parameter distribution, applied around each catalog mean.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplingDistribution {
    /// Uniform on [0.8·mean, 1.2·mean].
    #[default]
    UniformPm20,
    /// Normal with mean = catalog mean and std = 0.1·mean.
    #[serde(rename = "normal_10std")]
    Normal10Std,
    /// Uniform on [lo·mean, hi·mean].
    UniformCustom { lo: f64, hi: f64 },
    /// Normal with mean = mean_factor·mean and std = std_fraction·mean.
    NormalCustom { mean_factor: f64, std_fraction: f64 },
}

impl SamplingDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SamplingDistribution::UniformCustom { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
                Err(Error::InvalidArgument(format!("uniform bounds must satisfy lo < hi, got [{lo}, {hi}]")))
            }
            SamplingDistribution::NormalCustom { std_fraction, .. } if !(std_fraction > 0.0) => Err(
                Error::InvalidArgument(format!("normal std fraction must be positive, got {std_fraction}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(
            self,
            SamplingDistribution::UniformPm20 | SamplingDistribution::UniformCustom { .. }
        )
    }

    /// Support `[lo, hi]` for a parameter with the given mean, if bounded.
    pub fn support(&self, mean: f64) -> Option<(f64, f64)> {
        match *self {
            SamplingDistribution::UniformPm20 => Some((0.8 * mean, 1.2 * mean)),
            SamplingDistribution::UniformCustom { lo, hi } => Some((lo * mean, hi * mean)),
            _ => None,
        }
    }

    /// Maps a unit-interval coordinate to a parameter value (inverse CDF).
    pub fn quantile(&self, mean: f64, u: f64) -> f64 {
        match *self {
            SamplingDistribution::UniformPm20 | SamplingDistribution::UniformCustom { .. } => {
                let (lo, hi) = self.support(mean).expect("bounded");
                lo + u * (hi - lo)
            }
            SamplingDistribution::Normal10Std => normal_quantile(mean, 0.1 * mean.abs(), u),
            SamplingDistribution::NormalCustom {
                mean_factor,
                std_fraction,
            } => normal_quantile(mean_factor * mean, std_fraction * mean.abs(), u),
        }
    }

    pub fn tag(&self) -> String {
        match *self {
            SamplingDistribution::UniformPm20 => "uniform_pm20".into(),
            SamplingDistribution::Normal10Std => "normal_10std".into(),
            SamplingDistribution::UniformCustom { lo, hi } => format!("uniform_custom({lo},{hi})"),
            SamplingDistribution::NormalCustom {
                mean_factor,
                std_fraction,
            } => format!("normal_custom({mean_factor},{std_fraction})"),
        }
    }
}

fn normal_quantile(mean: f64, std: f64, u: f64) -> f64 {
    // keep the open interval so the tails stay finite
    let u = u.clamp(1e-12, 1.0 - 1e-12);
    let n = Normal::new(mean, std).expect("positive std");
    n.inverse_cdf(u)
}

fn bounded_support(catalog: &ParameterCatalog, dist: &SamplingDistribution) -> Result<Vec<(f64, f64)>> {
    dist.validate()?;
    if !dist.is_bounded() {
        return Err(Error::InvalidArgument(format!(
            "normalization needs a bounded distribution, got {}",
            dist.tag()
        )));
    }
    Ok(catalog
        .specs()
        .iter()
        .map(|s| dist.support(s.mean).expect("bounded"))
        .collect())
}

/// Affine map of every coordinate from its support onto [0, 1].
pub fn normalize(x: &ParamVector, catalog: &ParameterCatalog, dist: &SamplingDistribution) -> Result<ParamVector> {
    let support = bounded_support(catalog, dist)?;
    let mut out = [0.0; N_PARAMS];
    for (i, (&xi, &(lo, hi))) in x.iter().zip(&support).enumerate() {
        // tolerate round-off at the support edges
        let slack = 1e-12 * (hi - lo);
        if !(xi >= lo - slack && xi <= hi + slack) {
            return Err(Error::OutOfRange {
                name: catalog.name(i).to_string(),
                value: xi,
                lo,
                hi,
            });
        }
        out[i] = ((xi - lo) / (hi - lo)).clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Inverse of [`normalize`].
pub fn denormalize(u: &ParamVector, catalog: &ParameterCatalog, dist: &SamplingDistribution) -> Result<ParamVector> {
    let support = bounded_support(catalog, dist)?;
    let mut out = [0.0; N_PARAMS];
    for (i, (&ui, &(lo, hi))) in u.iter().zip(&support).enumerate() {
        if !(0.0..=1.0).contains(&ui) {
            return Err(Error::OutOfRange {
                name: catalog.name(i).to_string(),
                value: ui,
                lo: 0.0,
                hi: 1.0,
            });
        }
        out[i] = lo + ui * (hi - lo);
    }
    Ok(out)
}

/// Normalized coordinate of a single parameter.
pub fn normalize_one(catalog: &ParameterCatalog, dist: &SamplingDistribution, index: usize, value: f64) -> Result<f64> {
    dist.validate()?;
    let (lo, hi) = dist.support(catalog.specs()[index].mean).ok_or_else(|| {
        Error::InvalidArgument(format!("normalization needs a bounded distribution, got {}", dist.tag()))
    })?;
    Ok((value - lo) / (hi - lo))
}

/// Damage-energy output of a single source-model run, in lbf-in.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyVector {
    pub pl: f64,
    pub dl: f64,
    pub dc: f64,
    pub di: f64,
    pub pm: f64,
    pub ts: f64,
}

impl EnergyVector {
    /// Builds a vector whose total is the sum of the five mechanisms.
    pub fn from_mechanisms(pl: f64, dl: f64, dc: f64, di: f64, pm: f64) -> Self {
        EnergyVector {
            pl,
            dl,
            dc,
            di,
            pm,
            ts: pl + dl + dc + di + pm,
        }
    }

    pub fn get(&self, output: Output) -> f64 {
        match output {
            Output::Mechanism(Mechanism::Pl) => self.pl,
            Output::Mechanism(Mechanism::Dl) => self.dl,
            Output::Mechanism(Mechanism::Dc) => self.dc,
            Output::Mechanism(Mechanism::Di) => self.di,
            Output::Mechanism(Mechanism::Pm) => self.pm,
            Output::Total => self.ts,
        }
    }

    pub fn mechanism_sum(&self) -> f64 {
        self.pl + self.dl + self.dc + self.di + self.pm
    }

    /// `TS` matches the mechanism sum within `rel` relative tolerance.
    pub fn is_consistent(&self, rel: f64) -> bool {
        let sum = self.mechanism_sum();
        (self.ts - sum).abs() <= rel * sum.abs().max(f64::MIN_POSITIVE)
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.pl, self.dl, self.dc, self.di, self.pm, self.ts]
    }
}

/// One damage mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mechanism {
    #[serde(rename = "PL")]
    Pl,
    #[serde(rename = "DL")]
    Dl,
    #[serde(rename = "DC")]
    Dc,
    #[serde(rename = "DI")]
    Di,
    #[serde(rename = "PM")]
    Pm,
}

impl Mechanism {
    pub const ALL: [Mechanism; 5] = [Mechanism::Pl, Mechanism::Dl, Mechanism::Dc, Mechanism::Di, Mechanism::Pm];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mechanism::Pl => "PL",
            Mechanism::Dl => "DL",
            Mechanism::Dc => "DC",
            Mechanism::Di => "DI",
            Mechanism::Pm => "PM",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An energy column: one mechanism or the total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Output {
    Mechanism(Mechanism),
    Total,
}

impl Output {
    pub const ALL: [Output; 6] = [
        Output::Mechanism(Mechanism::Pl),
        Output::Mechanism(Mechanism::Dl),
        Output::Mechanism(Mechanism::Dc),
        Output::Mechanism(Mechanism::Di),
        Output::Mechanism(Mechanism::Pm),
        Output::Total,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Output::Mechanism(m) => m.as_str(),
            Output::Total => "TS",
        }
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Output {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Output::ALL
            .iter()
            .copied()
            .find(|o| o.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown energy output `{s}` (expected PL, DL, DC, DI, PM or TS)")))
    }
}

impl std::str::FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<Output>()? {
            Output::Mechanism(m) => Ok(m),
            Output::Total => Err(Error::InvalidArgument("TS is not a mechanism".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ToyModel,
    ExternalCsv,
}

/// Identifies a row across subsets and merges, so validation rows can be
/// checked against training rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowId {
    pub origin: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub id: RowId,
    pub inputs: ParamVector,
    pub energy: EnergyVector,
}

/// Rows of (41 inputs, six energies) over the canonical catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<Row>,
    pub provenance: Provenance,
}

pub const ENERGY_COLUMNS: [&str; 6] = ["PL", "DL", "DC", "DI", "PM", "TS"];

impl Dataset {
    pub fn new(provenance: Provenance) -> Self {
        Dataset {
            rows: Vec::new(),
            provenance,
        }
    }

    /// Builds a dataset whose row ids are `(origin, 0..n)`.
    pub fn from_rows(origin: &str, provenance: Provenance, rows: Vec<(ParamVector, EnergyVector)>) -> Self {
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(index, (inputs, energy))| Row {
                id: RowId {
                    origin: origin.to_string(),
                    index,
                },
                inputs,
                energy,
            })
            .collect();
        Dataset { rows, provenance }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn inputs(&self) -> Vec<ParamVector> {
        self.rows.iter().map(|r| r.inputs).collect()
    }

    pub fn column(&self, output: Output) -> Vec<f64> {
        self.rows.iter().map(|r| r.energy.get(output)).collect()
    }

    pub fn input_column(&self, index: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.inputs[index]).collect()
    }

    pub fn ids(&self) -> Vec<RowId> {
        self.rows.iter().map(|r| r.id.clone()).collect()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            provenance: self.provenance,
        }
    }

    pub fn filter<F: Fn(&Row) -> bool>(&self, keep: F) -> Dataset {
        Dataset {
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
            provenance: self.provenance,
        }
    }

    /// Like [`Dataset::filter`], with the row position passed along.
    pub fn filter_indexed<F: Fn(usize, &Row) -> bool>(&self, keep: F) -> Dataset {
        Dataset {
            rows: self.rows.iter().enumerate().filter(|(i, r)| keep(*i, r)).map(|(_, r)| r.clone()).collect(),
            provenance: self.provenance,
        }
    }

    /// Appends the rows of `other`; ids are kept.
    pub fn extend(&mut self, other: &Dataset) {
        self.rows.extend(other.rows.iter().cloned());
    }

    /// Mean of one energy column (0 for an empty dataset).
    pub fn mean(&self, output: Output) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.energy.get(output)).sum::<f64>() / self.rows.len() as f64
    }
}

/// Header of the dataset CSV: 41 catalog names then the six energies.
pub fn csv_header() -> Vec<&'static str> {
    ParameterCatalog::canonical()
        .names()
        .chain(ENERGY_COLUMNS.iter().copied())
        .collect()
}

/// Shortest decimal that parses back to the same `f64`.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:?}")
}

pub fn save_dataset_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    write_dataset(dataset, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_dataset<W: std::io::Write>(dataset: &Dataset, w: &mut csv::Writer<W>) -> Result<()> {
    w.write_record(csv_header())?;
    let catalog = ParameterCatalog::canonical();
    for (r, row) in dataset.rows.iter().enumerate() {
        let mut record = Vec::with_capacity(N_PARAMS + 6);
        for (i, v) in row.inputs.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: r + 2,
                    column: catalog.name(i).to_string(),
                    message: format!("non-finite value {v}"),
                });
            }
            record.push(format_float(*v));
        }
        for (name, v) in ENERGY_COLUMNS.iter().zip(row.energy.as_array()) {
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: r + 2,
                    column: name.to_string(),
                    message: format!("non-finite value {v}"),
                });
            }
            record.push(format_float(v));
        }
        w.write_record(&record)?;
    }
    Ok(())
}

pub fn load_dataset_csv(path: &Path) -> Result<Dataset> {
    let origin = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_string());
    let file = std::fs::File::open(path)?;
    read_dataset(file, &origin)
}

/// Reads a dataset from CSV text. Columns are matched by name; any column
/// outside the 47-name schema is rejected.
pub fn read_dataset<R: std::io::Read>(reader: R, origin: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let expected = csv_header();
    let mut slot = vec![usize::MAX; header.len()];
    let mut seen = vec![false; expected.len()];
    for (col, name) in header.iter().enumerate() {
        let pos = expected
            .iter()
            .position(|e| *e == name)
            .ok_or_else(|| Error::Schema(format!("unexpected column `{name}` at position {}", col + 1)))?;
        if seen[pos] {
            return Err(Error::Schema(format!("duplicate column `{name}`")));
        }
        seen[pos] = true;
        slot[col] = pos;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Schema(format!("missing column `{}`", expected[missing])));
    }

    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let line = r + 2;
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse {
                row: line,
                column: "-".into(),
                message: format!("expected {} cells, found {}", header.len(), record.len()),
            });
        }
        let mut values = [0.0f64; N_PARAMS + 6];
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                column: header[col].to_string(),
                message: format!("non-numeric cell `{cell}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: line,
                    column: header[col].to_string(),
                    message: format!("non-finite cell `{cell}`"),
                });
            }
            values[slot[col]] = v;
        }
        let mut inputs = [0.0; N_PARAMS];
        inputs.copy_from_slice(&values[..N_PARAMS]);
        let e = &values[N_PARAMS..];
        let energy = EnergyVector {
            pl: e[0],
            dl: e[1],
            dc: e[2],
            di: e[3],
            pm: e[4],
            ts: e[5],
        };
        rows.push((inputs, energy));
    }
    Ok(Dataset::from_rows(origin, Provenance::ExternalCsv, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_tabulated_means() {
        let c = build_catalog();
        assert_eq!(c.len(), 41);
        assert_eq!(c.get("A").unwrap().mean, 29.8);
        assert_eq!(c.get("A").unwrap().units, "ksi");
        assert_eq!(c.get("BK").unwrap().mean, 2.6);
        assert_eq!(c.get("alpha12").unwrap().mean, 0.2767);
        assert_eq!(c.get("X7781").unwrap().mean, 70.0);
        assert_eq!(c.get("G7500").unwrap().mean, 100.0);
        assert_eq!(c.get("sigmaY").unwrap().mean, 5.16);
    }

    #[test]
    fn group_cardinalities() {
        let c = ParameterCatalog::canonical();
        assert_eq!(c.group_count(ParameterGroup::Metal), 5);
        assert_eq!(c.group_count(ParameterGroup::ResinCohesive), 6);
        assert_eq!(c.group_count(ParameterGroup::ResinInterface), 6);
        for g in [
            ParameterGroup::LaminaEbx1200,
            ParameterGroup::LaminaElt1800,
            ParameterGroup::LaminaH7500,
            ParameterGroup::LaminaH7781,
        ] {
            assert_eq!(c.group_count(g), 4, "{}", g.as_str());
        }
        assert_eq!(c.group_count(ParameterGroup::LaminaShearShared), 8);
    }

    #[test]
    fn names_unique_and_means_admissible() {
        let c = ParameterCatalog::canonical();
        let mut names: Vec<_> = c.names().collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 41);
        for s in c.specs() {
            assert!(s.mean > 0.0, "{}", s.name);
            if s.name == "nu" || s.name.starts_with('V') {
                assert!(s.mean < 0.5, "{}", s.name);
            }
        }
    }

    #[test]
    fn normalize_midpoint_and_edges() {
        let c = ParameterCatalog::canonical();
        let d = SamplingDistribution::UniformPm20;
        let u = normalize(&c.means(), c, &d).unwrap();
        assert!(u.iter().all(|v| (v - 0.5).abs() < 1e-12));
        let lo: ParamVector = c.means().map(|m| 0.8 * m);
        let u = normalize(&lo, c, &d).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalize_rejects_outside_support_by_name() {
        let c = ParameterCatalog::canonical();
        let mut x = c.means();
        x[c.index_of("XS").unwrap()] = 100.0;
        match normalize(&x, c, &SamplingDistribution::UniformPm20) {
            Err(Error::OutOfRange { name, .. }) => assert_eq!(name, "XS"),
            other => panic!("expected out-of-range, got {other:?}"),
        }
    }

    #[test]
    fn distribution_serde_kind_matches_tag() {
        for d in [SamplingDistribution::UniformPm20, SamplingDistribution::Normal10Std] {
            let json = serde_json::to_value(d).unwrap();
            assert_eq!(json["kind"], d.tag());
            assert_eq!(serde_json::from_value::<SamplingDistribution>(json).unwrap(), d);
        }
    }

    #[test]
    fn normalize_requires_bounded_support() {
        let c = ParameterCatalog::canonical();
        assert!(normalize(&c.means(), c, &SamplingDistribution::Normal10Std).is_err());
    }

    #[test]
    fn normal_quantile_has_ten_percent_std() {
        let d = SamplingDistribution::Normal10Std;
        // Φ(1) ≈ 0.841344746
        let v = d.quantile(50.0, 0.841_344_746_068_543);
        assert!((v - 55.0).abs() < 1e-6);
        assert_eq!(d.quantile(50.0, 0.5), 50.0);
    }

    #[test]
    fn header_only_csv_is_empty_dataset() {
        let text = csv_header().join(",") + "\n";
        let d = read_dataset(text.as_bytes(), "t").unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn csv_errors_are_located() {
        let c = ParameterCatalog::canonical();
        let mut cells: Vec<String> = c.means().iter().map(|v| v.to_string()).collect();
        cells.extend(["1", "1", "1", "1", "1", "5"].map(String::from));
        cells[7] = "abc".into();
        let text = format!("{}\n{}\n", csv_header().join(","), cells.join(","));
        match read_dataset(text.as_bytes(), "t") {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "XS");
            }
            other => panic!("{other:?}"),
        }

        let text = format!("{},extra\n", csv_header().join(","));
        assert!(matches!(read_dataset(text.as_bytes(), "t"), Err(Error::Schema(_))));

        let mut h = csv_header();
        h.retain(|n| *n != "DI");
        let text = format!("{}\n", h.join(","));
        assert!(matches!(read_dataset(text.as_bytes(), "t"), Err(Error::Schema(m)) if m.contains("DI")));

        let short = format!("{}\n1,2,3\n", csv_header().join(","));
        assert!(matches!(read_dataset(short.as_bytes(), "t"), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn energy_vector_total_is_sum() {
        let e = EnergyVector::from_mechanisms(1.5, 2.0, 0.25, 0.0, 10.0);
        assert_eq!(e.ts, 13.75);
        assert!(e.is_consistent(1e-9));
        assert_eq!(e.get(Output::Mechanism(Mechanism::Dc)), 0.25);
        assert_eq!("ts".parse::<Output>().unwrap(), Output::Total);
        assert!("TS".parse::<Mechanism>().is_err());
    }
}
