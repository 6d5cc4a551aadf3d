//! JSON reports written by the command-line tool.
//!
//! Every report carries `schema_version` and a `command` tag. Scores are
//! natural-log values; a score of minus infinity (a family too large to
//! count) is written as `null`. Fingerprints are the skeleton as sorted
//! `[a, b]` pairs with `a < b` plus the v-structures as `[a, c, b]` triples
//! with `a < b` and collider `c`.

use std::fs;
use std::path::Path;

use kesbn_core::search::{k_star, Experiment, RunResult};
use kesbn_core::{Dag, Dataset, Fingerprint, KRecord, ScoreKind, SearchConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

mod score {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

mod scores {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&x.is_finite().then_some(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<Option<f64>>::deserialize(d)?;
        Ok(raw.into_iter().map(|x| x.unwrap_or(f64::NEG_INFINITY)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FingerprintReport {
    pub skeleton: Vec<[usize; 2]>,
    pub vstructures: Vec<[usize; 3]>,
}

impl From<&Fingerprint> for FingerprintReport {
    fn from(f: &Fingerprint) -> Self {
        Self {
            skeleton: f.skeleton.iter().map(|&(a, b)| [a, b]).collect(),
            vstructures: f.vstructures.iter().map(|&(a, c, b)| [a, c, b]).collect(),
        }
    }
}

impl FingerprintReport {
    pub fn to_fingerprint(&self) -> Fingerprint {
        Fingerprint {
            skeleton: self.skeleton.iter().map(|&[a, b]| (a, b)).collect(),
            vstructures: self.vstructures.iter().map(|&[a, c, b]| (a, c, b)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataInfo {
    pub variables: Vec<String>,
    pub cardinalities: Vec<usize>,
    pub rows: usize,
    /// FNV-1a digest of the coded data, as 16 hex digits.
    pub digest: String,
}

impl DataInfo {
    pub fn of(data: &Dataset) -> Self {
        Self {
            variables: data.names(),
            cardinalities: data.cardinalities(),
            rows: data.n_rows(),
            digest: format!("{:016x}", data.digest()),
        }
    }
}

/// Search settings shared by every run of a command, with defaults resolved
/// for the data at hand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub score: String,
    pub ess: Option<f64>,
    pub seed: u64,
    pub patience: usize,
    pub step_cars: usize,
    pub cars_per_draw: usize,
    pub k_star_cap: f64,
}

impl SearchReport {
    pub fn of(cfg: &SearchConfig, n: usize) -> Self {
        let (score, ess) = match cfg.score {
            ScoreKind::Bic => ("bic", None),
            ScoreKind::Bdeu { ess } => ("bdeu", Some(ess)),
        };
        Self {
            score: score.to_string(),
            ess,
            seed: cfg.seed,
            patience: cfg.patience_for(n),
            step_cars: cfg.step_cars_for(n),
            cars_per_draw: cfg.cars_per_draw,
            k_star_cap: cfg.k_star_cap,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub arcs: Vec<[usize; 2]>,
    pub arc_names: Vec<[String; 2]>,
    pub fingerprint: FingerprintReport,
    pub dimension: u128,
}

impl ModelReport {
    pub fn of(g: &Dag, names: &[String], cardinalities: &[usize]) -> Self {
        let arcs: Vec<[usize; 2]> = g.arcs().into_iter().map(|a| [a.tail, a.head]).collect();
        Self {
            arc_names: arcs.iter().map(|&[t, h]| [names[t].clone(), names[h].clone()]).collect(),
            arcs,
            fingerprint: (&g.fingerprint()).into(),
            dimension: kesbn_core::score::dimension(g, cardinalities).unwrap_or(u128::MAX),
        }
    }
}

/// Output of `kesbn learn`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: String,
    pub data: DataInfo,
    pub search: SearchReport,
    pub k: f64,
    pub k_star: f64,
    pub model: ModelReport,
    #[serde(with = "score")]
    pub score: f64,
    pub iterations: usize,
    pub draws: usize,
    pub cache_hits: u64,
    pub cache_misses: u64,
    /// Start score followed by the score of every accepted model.
    #[serde(with = "scores")]
    pub trajectory: Vec<f64>,
}

impl RunReport {
    pub fn new(data: &Dataset, cfg: &SearchConfig, run: &RunResult) -> Result<Self> {
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            command: "learn".into(),
            data: DataInfo::of(data),
            search: SearchReport::of(cfg, data.n_vars()),
            k: cfg.k,
            k_star: k_star(cfg.k, cfg.k_star_cap)?,
            model: ModelReport::of(&run.dag, &data.names(), &data.cardinalities()),
            score: run.score,
            iterations: run.iterations,
            draws: run.draws,
            cache_hits: run.cache_hits,
            cache_misses: run.cache_misses,
            trajectory: run.trajectory.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceReport {
    #[serde(with = "score")]
    pub score: f64,
    pub model: ModelReport,
}

/// One row of the experiment table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KRecordReport {
    pub k: f64,
    pub k_star: f64,
    pub runs: usize,
    #[serde(with = "score")]
    pub best: f64,
    pub better: usize,
    pub worse: usize,
    pub equal: usize,
    pub distinct_better: usize,
    pub distinct_worse: usize,
    pub distinct_total: usize,
    /// Final scores of all runs, ascending.
    #[serde(with = "scores")]
    pub sorted_scores: Vec<f64>,
}

impl From<&KRecord> for KRecordReport {
    fn from(r: &KRecord) -> Self {
        Self {
            k: r.k,
            k_star: r.k_star,
            runs: r.runs,
            best: r.best,
            better: r.better,
            worse: r.worse,
            equal: r.equal,
            distinct_better: r.distinct_better,
            distinct_worse: r.distinct_worse,
            distinct_total: r.distinct_total,
            sorted_scores: r.sorted_scores.clone(),
        }
    }
}

/// Output of `kesbn experiment`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub command: String,
    pub data: DataInfo,
    pub search: SearchReport,
    pub runs: usize,
    pub ges: ReferenceReport,
    pub records: Vec<KRecordReport>,
}

impl ExperimentReport {
    pub fn new(data: &Dataset, base: &SearchConfig, runs: usize, exp: &Experiment) -> Self {
        let names = data.names();
        let cards = data.cardinalities();
        Self {
            schema_version: SCHEMA_VERSION,
            command: "experiment".into(),
            data: DataInfo::of(data),
            search: SearchReport::of(base, data.n_vars()),
            runs,
            ges: ReferenceReport {
                score: exp.reference.score,
                model: ModelReport::of(&exp.reference.dag, &names, &cards),
            },
            records: exp.summary.records.iter().map(KRecordReport::from).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasClass {
    pub fingerprint: FingerprintReport,
    /// Arc lists of the member DAGs.
    pub members: Vec<Vec<[usize; 2]>>,
    pub ib: Vec<FingerprintReport>,
}

/// Output of `kesbn oracle --mode atlas`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasReport {
    pub schema_version: u32,
    pub command: String,
    pub mode: String,
    pub n: usize,
    pub classes: Vec<AtlasClass>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredModel {
    pub model: ModelReport,
    #[serde(with = "score")]
    pub score: f64,
}

/// Output of `kesbn oracle --mode local-optima`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimaReport {
    pub schema_version: u32,
    pub command: String,
    pub mode: String,
    pub data: DataInfo,
    pub score: String,
    pub ess: Option<f64>,
    pub classes: usize,
    /// Classes scoring above every boundary neighbour, best first.
    pub strict: Vec<ScoredModel>,
    /// Classes no boundary neighbour beats, best first.
    pub weak: Vec<ScoredModel>,
}

/// Output of `kesbn oracle --mode inclusion-optimal`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub schema_version: u32,
    pub command: String,
    pub mode: String,
    pub joint: String,
    pub variables: Vec<String>,
    pub models: Vec<ModelReport>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

pub fn from_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::parse(origin, e.line() as u64, e.column() as u64, e.to_string()))
}

pub fn load<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text, &path.display().to_string())
}
