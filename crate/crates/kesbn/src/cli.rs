//! The `kesbn` command line.
//!
//! Exit status is 0 on success, 2 for usage errors and 1 for data or runtime
//! errors. Reports are JSON; datasets are CSV. Without `--out` the output
//! goes to standard output.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kesbn_core::data::forward_sample;
use kesbn_core::data::trap::{build_trap_joint, trap_dataset};
use kesbn_core::oracle::{enumerate_classes, inclusion_optimal_models, local_optima, MAX_CHECK_NODES};
use kesbn_core::search::run_kes;
use kesbn_core::{Dag, Fingerprint, ScoreKind, SearchConfig};

use crate::bn_file::load_bn;
use crate::dataset_csv::{load_csv, write_csv};
use crate::error::{Error, Result};
use crate::parallel::{run_experiment_parallel, thread_budget};
use crate::report::{
    to_json, AtlasClass, AtlasReport, DataInfo, ExperimentReport, FingerprintReport, InclusionReport, ModelReport,
    OptimaReport, RunReport, ScoredModel, SCHEMA_VERSION,
};

#[derive(Debug, Parser)]
#[command(name = "kesbn", version, about = "k-greedy equivalence search for Bayesian network structure")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the Trap dataset: independent groups X, Y, Z, U with two
    /// inclusion-optimal structures each.
    Trapgen(TrapgenArgs),
    /// Forward-sample a dataset from a Bayesian network file.
    Sample(SampleArgs),
    /// Run one search and report the final model.
    Learn(LearnArgs),
    /// Run many searches per k and compare them with the greedy reference.
    Experiment(ExperimentArgs),
    /// Exhaustive checks on four variables or fewer.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreName {
    Bic,
    Bdeu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleMode {
    /// Every equivalence class on n = |columns of --data| nodes with its
    /// inclusion boundary.
    Atlas,
    /// Strict and weak local optima of --data.
    LocalOptima,
    /// Inclusion-optimal models of the builtin single-group Trap distribution.
    InclusionOptimal,
}

fn parse_k(s: &str) -> std::result::Result<f64, String> {
    let k: f64 = s.trim().parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=1.0).contains(&k) {
        Ok(k)
    } else {
        Err(format!("k must lie in [0, 1], got {k}"))
    }
}

fn parse_ess(s: &str) -> std::result::Result<f64, String> {
    let e: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if e.is_finite() && e > 0.0 {
        Ok(e)
    } else {
        Err(format!("ess must be positive, got {e}"))
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_enum, default_value = "bic")]
    pub score: ScoreName,
    /// Equivalent sample size for BDeu.
    #[arg(long, default_value = "1", value_parser = parse_ess)]
    pub ess: f64,
}

impl ScoreArgs {
    fn kind(&self) -> ScoreKind {
        match self.score {
            ScoreName::Bic => ScoreKind::Bic,
            ScoreName::Bdeu => ScoreKind::Bdeu { ess: self.ess },
        }
    }
}

#[derive(Debug, Args)]
pub struct TrapgenArgs {
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub groups: u64,
    #[arg(long, default_value_t = 20_000)]
    pub rows: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub bn: PathBuf,
    #[arg(long)]
    pub rows: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Greediness: 0 is fully stochastic, 1 fully greedy.
    #[arg(long, default_value = "1", value_parser = parse_k)]
    pub k: f64,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Non-improving steps before stopping [default: 2 n (n - 1)].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub patience: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated greediness values.
    #[arg(long, value_delimiter = ',', default_value = "0,0.4,0.8,1", value_parser = parse_k)]
    pub k_list: Vec<f64>,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub patience: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub mode: OracleMode,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub score: ScoreArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| Error::io(path, e)),
        None => io::stdout().lock().write_all(bytes).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn search_config(k: f64, score: &ScoreArgs, seed: u64, patience: Option<u64>) -> SearchConfig {
    SearchConfig { seed, score: score.kind(), patience: patience.map(|p| p as usize), ..SearchConfig::with_k(k) }
}

fn trapgen(a: &TrapgenArgs) -> Result<()> {
    let data = trap_dataset(a.groups as usize, a.rows, a.seed)?;
    let mut buf = Vec::new();
    write_csv(&data, &mut buf)?;
    emit(a.out.as_deref(), &buf)
}

fn sample(a: &SampleArgs) -> Result<()> {
    let bn = load_bn(&a.bn)?;
    let data = forward_sample(&bn, a.rows, a.seed)?;
    let mut buf = Vec::new();
    write_csv(&data, &mut buf)?;
    emit(a.out.as_deref(), &buf)
}

fn learn(a: &LearnArgs) -> Result<()> {
    let data = load_csv(&a.data)?;
    let cfg = search_config(a.k, &a.score, a.seed, a.patience);
    let run = run_kes(&data, &cfg)?;
    emit(a.out.as_deref(), to_json(&RunReport::new(&data, &cfg, &run)?).as_bytes())
}

fn experiment(a: &ExperimentArgs) -> Result<()> {
    let data = load_csv(&a.data)?;
    let base = search_config(1.0, &a.score, a.seed, a.patience);
    let runs = a.runs as usize;
    let exp = run_experiment_parallel(&data, &a.k_list, runs, &base, thread_budget()?)?;
    emit(a.out.as_deref(), to_json(&ExperimentReport::new(&data, &base, runs, &exp)).as_bytes())
}

fn required_data(a: &OracleArgs) -> Result<kesbn_core::Dataset> {
    let path = a.data.as_ref().ok_or_else(|| Error::Usage("this mode needs --data".into()))?;
    let data = load_csv(path)?;
    if data.n_vars() > MAX_CHECK_NODES {
        return Err(kesbn_core::Error::TooLarge { n: data.n_vars(), limit: MAX_CHECK_NODES }.into());
    }
    Ok(data)
}

fn arc_list(g: &Dag) -> Vec<[usize; 2]> {
    g.arcs().into_iter().map(|a| [a.tail, a.head]).collect()
}

fn oracle(a: &OracleArgs) -> Result<()> {
    let text = match a.mode {
        OracleMode::Atlas => {
            let n = required_data(a)?.n_vars();
            let atlas = enumerate_classes(n)?;
            let classes = atlas
                .classes()
                .iter()
                .map(|(f, c)| AtlasClass {
                    fingerprint: f.into(),
                    members: c.members.iter().map(arc_list).collect(),
                    ib: c.ib.iter().map(FingerprintReport::from).collect(),
                })
                .collect();
            to_json(&AtlasReport {
                schema_version: SCHEMA_VERSION,
                command: "oracle".into(),
                mode: "atlas".into(),
                n,
                classes,
            })
        }
        OracleMode::LocalOptima => {
            let data = required_data(a)?;
            let atlas = enumerate_classes(data.n_vars())?;
            let kind = a.score.kind();
            let optima = local_optima(&atlas, &data, kind)?;
            let (names, cards) = (data.names(), data.cardinalities());
            let listing = |set: &std::collections::BTreeSet<Fingerprint>| {
                let mut v: Vec<ScoredModel> = set
                    .iter()
                    .map(|f| ScoredModel {
                        model: ModelReport::of(atlas.class(f).expect("atlas class").representative(), &names, &cards),
                        score: optima.scores[f],
                    })
                    .collect();
                v.sort_by(|x, y| y.score.total_cmp(&x.score));
                v
            };
            let (score, ess) = match kind {
                ScoreKind::Bic => ("bic", None),
                ScoreKind::Bdeu { ess } => ("bdeu", Some(ess)),
            };
            to_json(&OptimaReport {
                schema_version: SCHEMA_VERSION,
                command: "oracle".into(),
                mode: "local-optima".into(),
                data: DataInfo::of(&data),
                score: score.into(),
                ess,
                classes: atlas.len(),
                strict: listing(&optima.strict),
                weak: listing(&optima.weak),
            })
        }
        OracleMode::InclusionOptimal => {
            if a.data.is_some() {
                return Err(Error::Usage(
                    "inclusion-optimal mode uses the builtin single-group Trap distribution; drop --data".into(),
                ));
            }
            let joint = build_trap_joint()?;
            let names: Vec<String> = joint.variables().iter().map(|v| v.name.clone()).collect();
            let cards = joint.cardinalities();
            let atlas = enumerate_classes(joint.n_vars())?;
            let models = inclusion_optimal_models(&joint)?
                .iter()
                .map(|f| ModelReport::of(atlas.class(f).expect("atlas class").representative(), &names, &cards))
                .collect();
            to_json(&InclusionReport {
                schema_version: SCHEMA_VERSION,
                command: "oracle".into(),
                mode: "inclusion-optimal".into(),
                joint: "trap-group".into(),
                variables: names,
                models,
            })
        }
    };
    emit(a.out.as_deref(), text.as_bytes())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Trapgen(a) => trapgen(a),
        Command::Sample(a) => sample(a),
        Command::Learn(a) => learn(a),
        Command::Experiment(a) => experiment(a),
        Command::Oracle(a) => oracle(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Errors are reported on standard error.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("kesbn: {e}");
            e.exit_code()
        }
    }
}
