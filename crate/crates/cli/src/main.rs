//! `rdsm` command-line driver.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rdsm::damage_model::{simulate_bend, simulate_design, BendSpecimen, SpecimenConfig};
use rdsm::param_space::{
    load_dataset_csv, save_dataset_csv, Dataset, Mechanism, Output, ParameterCatalog, SamplingDistribution, N_PARAMS,
};
use rdsm::rdsm::{
    compare_approaches, fit_direct, fit_summed, nested_prefixes, save_comparison_csv, save_uq_csv, split_holdout,
    uq_sweep, DirectQuery, DirectRdsm, EngagementGate, FitSettings, SummedRdsm,
};
use rdsm::sampling::{default_strata, sample_lhs, sample_lss, sample_mc, save_design_csv, sub_seed, DesignMatrix};
use rdsm::sensitivity::{save_screening_csv, save_sobol_csv, screen_dataset, sobol_indices, RetentionRule};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  other failure (I/O, numerical)
  2  usage error (unknown flag, bad value)
  3  missing input file or directory
  4  schema mismatch (CSV columns, model or config documents)
  5  invalid argument
  6  empty validation set

Errors are printed as one line: error: kind=<kind> msg=\"<message>\"";

#[derive(Debug, Parser)]
#[command(name = "rdsm", version, about = "Reduced-dimension surrogate modeling pipeline", after_help = EXIT_CODES)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $RDSM_OUT_DIR, the config's `out_dir`, or ./rdsm-out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for simulation and prediction.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Specimen TOML for the source model.
    #[arg(long, global = true)]
    specimen: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the parameter catalog.
    Catalog(OutArg),
    /// Write a sampling design.
    Sample(SampleArgs),
    /// Sample inputs and run the source model on them.
    Simulate(SimulateArgs),
    /// Rank parameters by FDR logworth for one output.
    Screen(ScreenArgs),
    /// Fit the direct or summed reduced-dimension model.
    Fit(FitArgs),
    /// First- and total-order Sobol' indices of a model.
    Sobol(SobolArgs),
    /// Propagate input uncertainty through nested parameter subsets.
    Uq(UqArgs),
    /// Evaluate the disbond engagement gate.
    GateCheck(GateArgs),
    /// Compare direct and summed models on validation rows.
    Compare(CompareArgs),
    /// Emit CSV series for plotting.
    PlotData(PlotArgs),
}

#[derive(Debug, Args)]
struct OutArg {
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
enum Sampler {
    Mc,
    Lhs,
    Lss,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Dist {
    UniformPm20,
    Normal10Std,
}

impl From<Dist> for SamplingDistribution {
    fn from(d: Dist) -> Self {
        match d {
            Dist::UniformPm20 => SamplingDistribution::UniformPm20,
            Dist::Normal10Std => SamplingDistribution::Normal10Std,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Query {
    Full,
    Reduced,
}

impl From<Query> for DirectQuery {
    fn from(q: Query) -> Self {
        match q {
            Query::Full => DirectQuery::FullFrozen,
            Query::Reduced => DirectQuery::Reduced,
        }
    }
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = N_PARAMS)]
    dim: usize,
    #[arg(long, value_enum)]
    scheme: Option<Sampler>,
    /// Coarse strata per dimension for LSS.
    #[arg(long)]
    strata: Option<usize>,
    /// Map the unit design to catalog units (41 columns only).
    #[arg(long)]
    physical: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum)]
    scheme: Option<Sampler>,
    #[arg(long, value_enum)]
    distribution: Option<Dist>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScreenArgs {
    #[arg(long)]
    data: PathBuf,
    /// TS or a mechanism (PL, DL, DC, DI, PM).
    #[arg(long, default_value = "TS")]
    output: String,
    #[arg(long)]
    max_k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Approach {
    Direct,
    Summed,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "direct")]
    approach: Approach,
    /// Rows held back from fitting; written to holdout.csv in the model directory.
    #[arg(long)]
    holdout: Option<usize>,
    /// Model directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SobolArgs {
    /// Direct model directory.
    #[arg(long, conflicts_with = "source")]
    model: Option<PathBuf>,
    /// Use the source model instead of a surrogate.
    #[arg(long)]
    source: bool,
    /// Output of the source model to analyse.
    #[arg(long, default_value = "TS")]
    output: String,
    #[arg(long, value_enum)]
    query: Option<Query>,
    #[arg(long)]
    n_base: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct UqArgs {
    /// Direct model directory.
    #[arg(long)]
    model: PathBuf,
    /// Ranked parameters; subsets are its prefixes. Defaults to the model's retained set.
    #[arg(long, value_delimiter = ',')]
    params: Option<Vec<String>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum)]
    distribution: Option<Dist>,
    #[arg(long, value_enum)]
    query: Option<Query>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GateArgs {
    /// Normalized coordinates `u,v,z` along the gate axes.
    #[arg(long, value_delimiter = ',', conflicts_with = "data")]
    point: Option<Vec<f64>>,
    /// Dataset to classify row by row.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    direct: PathBuf,
    #[arg(long)]
    summed: PathBuf,
    #[arg(long)]
    validation: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PlotKind {
    /// Actual versus predicted total energy.
    Parity,
    /// Per-row mechanism energies ordered by total energy.
    Stack,
    /// Gate boundary segments over the third axis.
    Gate,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long, value_enum)]
    kind: PlotKind,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    direct: Option<PathBuf>,
    #[arg(long)]
    summed: Option<PathBuf>,
    /// Levels along the third gate axis.
    #[arg(long, default_value_t = 11)]
    levels: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SobolConfig {
    n_base: usize,
}

impl Default for SobolConfig {
    fn default() -> Self {
        SobolConfig { n_base: 1024 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct UqConfig {
    n_samples: usize,
    distribution: SamplingDistribution,
    /// Ranked parameters for the nested subsets.
    parameters: Vec<String>,
}

impl Default for UqConfig {
    fn default() -> Self {
        UqConfig {
            n_samples: 5000,
            distribution: SamplingDistribution::Normal10Std,
            parameters: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunConfig {
    seed: u64,
    out_dir: Option<PathBuf>,
    specimen: Option<PathBuf>,
    sampler: Sampler,
    distribution: SamplingDistribution,
    n_rows: usize,
    n_holdout: usize,
    fit: FitSettings,
    sobol: SobolConfig,
    uq: UqConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            out_dir: None,
            specimen: None,
            sampler: Sampler::Mc,
            distribution: SamplingDistribution::UniformPm20,
            n_rows: 1555,
            n_holdout: 25,
            fit: FitSettings::default(),
            sobol: SobolConfig::default(),
            uq: UqConfig::default(),
        }
    }
}

/// Resolved configuration written next to every output.
#[derive(Serialize)]
struct Snapshot<'a> {
    tool: &'static str,
    version: &'static str,
    command: String,
    config: &'a RunConfig,
    specimen: &'a SpecimenConfig,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    MissingFile(PathBuf),
    Core(rdsm::Error),
}

impl From<rdsm::Error> for Failure {
    fn from(e: rdsm::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

impl Failure {
    fn code_and_kind(&self) -> (u8, &'static str) {
        use rdsm::Error as E;
        match self {
            Failure::Usage(_) => (2, "usage"),
            Failure::MissingFile(_) => (3, "missing_file"),
            Failure::Core(e) => match e {
                E::Io(io) if io.kind() == std::io::ErrorKind::NotFound => (3, "missing_file"),
                E::Schema(_) | E::Parse { .. } | E::ModelFormat(_) | E::UnsupportedVersion { .. } | E::Config(_) => {
                    (4, "schema")
                }
                E::InvalidArgument(_)
                | E::OutOfRange { .. }
                | E::UnknownParameter(_)
                | E::DimensionMismatch { .. }
                | E::Admissibility { .. } => (5, "invalid_argument"),
                E::EmptyValidation => (6, "empty_validation"),
                E::Io(_) => (1, "io"),
                _ => (1, "numerical"),
            },
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::MissingFile(p) => write!(f, "no such file or directory: {}", p.display()),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn require(path: &Path) -> CliResult<&Path> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Failure::MissingFile(path.to_path_buf()))
    }
}

fn parse_output(name: &str) -> CliResult<Output> {
    name.parse().map_err(Failure::Core)
}

struct Context {
    config: RunConfig,
    specimen_config: SpecimenConfig,
    out_dir: PathBuf,
    command: String,
}

impl Context {
    fn new(cli: &Cli, command: String) -> CliResult<Self> {
        let mut config = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(require(path)?)?;
                toml::from_str::<RunConfig>(&text).map_err(|e| rdsm::Error::Config(e.message().to_string()))?
            }
            None => RunConfig::default(),
        };
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        if let Some(path) = &cli.specimen {
            config.specimen = Some(path.clone());
        }
        config.fit.validate()?;
        let specimen_config = match &config.specimen {
            Some(path) => SpecimenConfig::load(require(path)?)?,
            None => SpecimenConfig::default(),
        };
        let out_dir = cli
            .out_dir
            .clone()
            .or_else(|| config.out_dir.clone())
            .or_else(|| std::env::var_os("RDSM_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("rdsm-out"));
        Ok(Context {
            config,
            specimen_config,
            out_dir,
            command,
        })
    }

    fn specimen(&self) -> CliResult<BendSpecimen> {
        Ok(BendSpecimen::new(self.specimen_config.clone())?)
    }

    /// `explicit` if given, else `default_name` in the output directory.
    /// The parent directory is created and receives the config snapshot.
    fn output(&self, explicit: &Option<PathBuf>, default_name: &str, stem: &str) -> CliResult<PathBuf> {
        let path = explicit.clone().unwrap_or_else(|| self.out_dir.join(default_name));
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&dir)?;
        self.write_snapshot(&dir, stem)?;
        Ok(path)
    }

    fn write_snapshot(&self, dir: &Path, stem: &str) -> CliResult<()> {
        let snap = Snapshot {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.command.clone(),
            config: &self.config,
            specimen: &self.specimen_config,
        };
        let text = toml::to_string(&snap).map_err(|e| rdsm::Error::Config(e.to_string()))?;
        fs::write(dir.join(format!("{stem}.run.toml")), text)?;
        Ok(())
    }
}

fn design(n: usize, dim: usize, sampler: Sampler, strata: Option<usize>, seed: u64) -> CliResult<DesignMatrix> {
    Ok(match sampler {
        Sampler::Mc => sample_mc(n, dim, seed)?,
        Sampler::Lhs => sample_lhs(n, dim, seed)?,
        Sampler::Lss => sample_lss(n, dim, seed, strata.unwrap_or_else(|| default_strata(n)))?,
    })
}

fn load_validation(path: &Path) -> CliResult<Dataset> {
    let text = fs::read_to_string(require(path)?)?;
    if text.trim().is_empty() {
        return Err(rdsm::Error::EmptyValidation.into());
    }
    Ok(load_dataset_csv(path)?)
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(rdsm::Error::from)?;
    w.write_record(header).map_err(rdsm::Error::from)?;
    for r in rows {
        w.write_record(&r).map_err(rdsm::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn run(cli: Cli, command: String) -> CliResult<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let ctx = Context::new(&cli, command)?;
    let cfg = &ctx.config;
    match &cli.command {
        Command::Catalog(a) => {
            let path = ctx.output(&a.out, "catalog.csv", "catalog")?;
            let rows = ParameterCatalog::canonical().specs().iter().map(|s| {
                vec![
                    s.name.to_string(),
                    s.group.as_str().to_string(),
                    num(s.mean),
                    s.units.to_string(),
                    s.description.to_string(),
                ]
            });
            write_rows(&path, &["name", "group", "mean", "units", "description"], rows)?;
            println!("{}", path.display());
        }
        Command::Sample(a) => {
            let n = a.n.unwrap_or(cfg.n_rows);
            let d = design(n, a.dim, a.scheme.unwrap_or(cfg.sampler), a.strata, sub_seed(cfg.seed, 1))?;
            let path = ctx.output(&a.out, "design.csv", "sample")?;
            save_design_csv(&d, &path, a.physical.then_some(&cfg.distribution))?;
            println!("{}", path.display());
        }
        Command::Simulate(a) => {
            let specimen = ctx.specimen()?;
            let n = a.n.unwrap_or(cfg.n_rows);
            let dist = a.distribution.map(Into::into).unwrap_or(cfg.distribution);
            let d = design(n, N_PARAMS, a.scheme.unwrap_or(cfg.sampler), None, sub_seed(cfg.seed, 1))?;
            let data = simulate_design(&d, &dist, &specimen, "simulate")?;
            let path = ctx.output(&a.out, "data.csv", "simulate")?;
            save_dataset_csv(&data, &path)?;
            println!("{} ({} rows)", path.display(), data.len());
        }
        Command::Screen(a) => {
            let data = load_dataset_csv(require(&a.data)?)?;
            let output = parse_output(&a.output)?;
            let mut rule = match output {
                Output::Total => cfg.fit.total_rule,
                Output::Mechanism(_) => cfg.fit.mechanism_rule,
            };
            if let Some(k) = a.max_k {
                rule = RetentionRule { max_k: k, ..rule };
            }
            let result = screen_dataset(&data, output, rule)?;
            let path = ctx.output(&a.out, &format!("screening_{output}.csv"), "screen")?;
            save_screening_csv(&result, &path)?;
            println!("retained: {}", result.retained.join(" "));
        }
        Command::Fit(a) => {
            let data = load_dataset_csv(require(&a.data)?)?;
            let n_holdout = a.holdout.unwrap_or(cfg.n_holdout);
            let (train, holdout) = if n_holdout > 0 {
                split_holdout(&data, n_holdout, sub_seed(cfg.seed, 2))?
            } else {
                (data.clone(), data.filter(|_| false))
            };
            let default_dir = match a.approach {
                Approach::Direct => "direct",
                Approach::Summed => "summed",
            };
            let dir = a.out.clone().unwrap_or_else(|| ctx.out_dir.join(default_dir));
            fs::create_dir_all(&dir)?;
            ctx.write_snapshot(&dir, "fit")?;
            match a.approach {
                Approach::Direct => {
                    let model = fit_direct(&train, &cfg.fit)?;
                    model.save(&dir)?;
                    save_screening_csv(&model.screening, &dir.join("screening_TS.csv"))?;
                    println!(
                        "retained: {}; test MAE full {:.2}%, reduced {:.2}%",
                        model.retained_params().join(" "),
                        model.full.report().test_mae_pct,
                        model.reduced.report().test_mae_pct
                    );
                }
                Approach::Summed => {
                    let fit = fit_summed(&train, &ctx.specimen()?, &cfg.fit, sub_seed(cfg.seed, 4))?;
                    fit.summed.save(&dir)?;
                    for s in &fit.screenings {
                        save_screening_csv(s, &dir.join(format!("screening_{}.csv", s.output_name)))?;
                    }
                    save_screening_csv(&fit.di_focused, &dir.join("screening_DI_subspace.csv"))?;
                    for m in fit.summed.members() {
                        println!(
                            "{}: {} (test MAE {:.2}%)",
                            m.mechanism,
                            m.retained_params().join(" "),
                            m.surrogate().report().test_mae_pct
                        );
                    }
                }
            }
            if !holdout.is_empty() {
                save_dataset_csv(&holdout, &dir.join("holdout.csv"))?;
            }
            println!("{}", dir.display());
        }
        Command::Sobol(a) => {
            let n_base = a.n_base.unwrap_or(cfg.sobol.n_base);
            let result = if a.source {
                let specimen = ctx.specimen()?;
                let output = parse_output(&a.output)?;
                sobol_indices(
                    |x| simulate_bend(x, &specimen).map(|e| e.get(output)).unwrap_or(f64::NAN),
                    &cfg.distribution,
                    n_base,
                    cfg.seed,
                )?
            } else {
                let dir = a
                    .model
                    .as_ref()
                    .ok_or_else(|| Failure::Usage("sobol needs --model or --source".into()))?;
                let model = DirectRdsm::load(require(dir)?)?;
                let query = a.query.map(Into::into).unwrap_or(DirectQuery::FullFrozen);
                sobol_indices(
                    |x| model.predict_with(x, query).unwrap_or(f64::NAN),
                    &cfg.distribution,
                    n_base,
                    cfg.seed,
                )?
            };
            let path = ctx.output(&a.out, "sobol.csv", "sobol")?;
            save_sobol_csv(&result, &path)?;
            println!("ranking by S1: {}", result.ranking_by_s1().iter().take(5).cloned().collect::<Vec<_>>().join(" "));
        }
        Command::Uq(a) => {
            let model = DirectRdsm::load(require(&a.model)?)?;
            let ranking = a.params.clone().unwrap_or_else(|| {
                if cfg.uq.parameters.is_empty() {
                    model.retained_params().to_vec()
                } else {
                    cfg.uq.parameters.clone()
                }
            });
            let query = a.query.map(Into::into).unwrap_or(cfg.fit.query);
            let dist = a.distribution.map(Into::into).unwrap_or(cfg.uq.distribution);
            let report = uq_sweep(
                |x| model.predict_with(x, query),
                &nested_prefixes(&ranking),
                a.n.unwrap_or(cfg.uq.n_samples),
                cfg.seed,
                &dist,
            )?;
            let path = ctx.output(&a.out, "uq.csv", "uq")?;
            save_uq_csv(&report, &path)?;
            for r in &report.rows {
                println!("{}: mean {:.3} std {:.3}", r.params.join(" "), r.mean, r.std);
            }
        }
        Command::GateCheck(a) => {
            let gate = &cfg.fit.gate;
            if let Some(p) = &a.point {
                if p.len() != 3 {
                    return Err(Failure::Usage(format!("--point takes 3 comma-separated values, got {}", p.len())));
                }
                let engaged = gate.engaged(p[0], p[1], p[2])?;
                println!(
                    "engaged={engaged} signed_distance={}",
                    num(gate.signed_distance(p[0], p[1], p[2]))
                );
                return Ok(());
            }
            let Some(data_path) = &a.data else {
                return Err(Failure::Usage("gate-check needs --point or --data".into()));
            };
            let data = load_dataset_csv(require(data_path)?)?;
            let flags = cfg.fit.engagement.flags(&data, Mechanism::Di);
            let mut rows = Vec::with_capacity(data.len());
            let mut agree = 0;
            for (i, (row, di)) in data.rows.iter().zip(&flags).enumerate() {
                let c = gate.coordinates(&row.inputs)?;
                let g = gate.engaged_at(&row.inputs)?;
                agree += usize::from(g == *di);
                rows.push(vec![i.to_string(), num(c[0]), num(c[1]), num(c[2]), g.to_string(), di.to_string()]);
            }
            let path = ctx.output(&a.out, "gate.csv", "gate-check")?;
            write_rows(&path, &["row", "u", "v", "z", "gate_engaged", "di_engaged"], rows)?;
            println!("gate agrees with DI engagement on {agree} of {} rows", data.len());
        }
        Command::Compare(a) => {
            let validation = load_validation(&a.validation)?;
            let direct = DirectRdsm::load(require(&a.direct)?)?;
            let summed = SummedRdsm::load(require(&a.summed)?)?;
            let report = compare_approaches(&direct, &summed, &validation)?;
            let path = ctx.output(&a.out, "comparison.csv", "compare")?;
            save_comparison_csv(&report, &path)?;
            println!(
                "MAE direct {:.2}%, summed {:.2}% on {} rows",
                report.all.direct.mae_pct, report.all.summed.mae_pct, report.all.n_rows
            );
        }
        Command::PlotData(a) => plot_data(&ctx, a)?,
    }
    Ok(())
}

fn plot_data(ctx: &Context, a: &PlotArgs) -> CliResult<()> {
    match a.kind {
        PlotKind::Gate => {
            if a.levels < 2 {
                return Err(rdsm::Error::InvalidArgument("--levels must be at least 2".into()).into());
            }
            let path = ctx.output(&a.out, "plot_gate.csv", "plot-data")?;
            write_rows(&path, &["z", "u0", "v0", "u1", "v1"], gate_segments(&ctx.config.fit.gate, a.levels))?;
            println!("{}", path.display());
        }
        PlotKind::Parity => {
            let data = load_validation(a.data.as_ref().ok_or_else(|| Failure::Usage("parity needs --data".into()))?)?;
            if a.direct.is_none() && a.summed.is_none() {
                return Err(Failure::Usage("parity needs --direct or --summed".into()));
            }
            let direct = a.direct.as_ref().map(|p| DirectRdsm::load(require(p)?).map_err(Failure::from)).transpose()?;
            let summed = a.summed.as_ref().map(|p| SummedRdsm::load(require(p)?).map_err(Failure::from)).transpose()?;
            let rows: Vec<Vec<String>> = data
                .rows
                .par_iter()
                .enumerate()
                .map(|(i, row)| -> CliResult<Vec<String>> {
                    let d = direct.as_ref().map(|m| m.predict(&row.inputs)).transpose()?;
                    let s = summed.as_ref().map(|m| m.predict(&row.inputs)).transpose()?;
                    Ok(vec![
                        i.to_string(),
                        num(row.energy.get(Output::Total)),
                        d.map(num).unwrap_or_default(),
                        s.as_ref().map(|p| num(p.total)).unwrap_or_default(),
                    ])
                })
                .collect::<CliResult<_>>()?;
            let path = ctx.output(&a.out, "plot_parity.csv", "plot-data")?;
            write_rows(&path, &["row", "actual", "direct", "summed"], rows)?;
            println!("{}", path.display());
        }
        PlotKind::Stack => {
            let data = load_dataset_csv(require(
                a.data.as_ref().ok_or_else(|| Failure::Usage("stack needs --data".into()))?,
            )?)?;
            let summed = a.summed.as_ref().map(|p| SummedRdsm::load(require(p)?).map_err(Failure::from)).transpose()?;
            let mut order: Vec<usize> = (0..data.len()).collect();
            order.sort_by(|i, j| {
                let t = |k: usize| data.rows[k].energy.get(Output::Total);
                t(*i).total_cmp(&t(*j)).then(i.cmp(j))
            });
            let mut header = vec!["row", "PL", "DL", "DC", "DI", "PM", "TS"];
            if summed.is_some() {
                header.extend(["pred_PL", "pred_DL", "pred_DC", "pred_DI", "pred_PM", "pred_TS"]);
            }
            let rows: Vec<Vec<String>> = order
                .par_iter()
                .map(|&i| -> CliResult<Vec<String>> {
                    let row = &data.rows[i];
                    let mut r = vec![i.to_string()];
                    r.extend(row.energy.as_array().iter().map(|v| num(*v)));
                    if let Some(m) = &summed {
                        let p = m.predict(&row.inputs)?;
                        r.extend(p.breakdown.iter().map(|v| num(*v)));
                        r.push(num(p.total));
                    }
                    Ok(r)
                })
                .collect::<CliResult<_>>()?;
            let path = ctx.output(&a.out, "plot_stack.csv", "plot-data")?;
            write_rows(&path, &header, rows)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

/// Boundary segment of the gate at evenly spaced heights.
fn gate_segments(gate: &EngagementGate, levels: usize) -> Vec<Vec<String>> {
    let lerp = |a: f64, b: f64, t: f64| a * (1.0 - t) + b * t;
    (0..levels)
        .map(|k| {
            let z = k as f64 / (levels - 1) as f64;
            let mut r = vec![num(z)];
            for e in 0..2 {
                r.push(num(lerp(gate.lower[e][0], gate.upper[e][0], z)));
                r.push(num(lerp(gate.lower[e][1], gate.upper[e][1], z)));
            }
            r
        })
        .collect()
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            return report(&Failure::Usage(first));
        }
    };
    let command = args[1..].join(" ");
    match run(cli, command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}

fn report(f: &Failure) -> ExitCode {
    let (code, kind) = f.code_and_kind();
    eprintln!("error: kind={kind} msg={:?}", f.to_string());
    ExitCode::from(code)
}
