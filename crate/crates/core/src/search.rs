//! The k-greedy equivalence search.
//!
//! Every step samples a batch of models from the inclusion boundary of the
//! current model, keeps those that score strictly higher and moves to the
//! best of them. The batch is drawn with replacement, so the greediness `k`
//! is translated into an oversampling factor `k* = -ln(1 - k)`: drawing
//! `k* |IB|` items from `|IB|` leaves an expected distinct fraction of `k`.
//! `|IB|` is approximated by `n (n - 1)`.
//!
//! Since the boundary is sampled rather than enumerated, a run stops after a
//! fixed number of consecutive steps without improvement.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::cache::ScoreCache;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::{Arc, Dag, Fingerprint};
use crate::rng::{derive_seed, seeded, uniform_index};
use crate::score::{cached_family, compute_family, dag_score, ScoreKind};

/// Default ceiling on `k*`; also the value used for `k = 1`.
pub const DEFAULT_K_STAR_CAP: f64 = 20.0;

/// Relative slack under which two scores are treated as equal. Scores of
/// equivalent DAGs agree only up to rounding, so "strictly higher" means
/// higher by more than this.
pub const SCORE_REL_TOL: f64 = 1e-9;

/// Random rejection attempts before [`sample_ib_neighbor`] enumerates the
/// legal moves.
const REJECTION_ATTEMPTS: usize = 64;

#[inline]
pub fn score_tolerance(score: f64) -> f64 {
    SCORE_REL_TOL * score.abs().max(1.0)
}

/// Orders two scores, treating differences within [`score_tolerance`] as ties.
pub fn compare_scores(a: f64, b: f64) -> Ordering {
    let tol = score_tolerance(a).max(score_tolerance(b));
    if a > b + tol {
        Ordering::Greater
    } else if a < b - tol {
        Ordering::Less
    } else {
        Ordering::Equal
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    /// Greediness in `[0, 1]`: 0 is SES, 1 is GES.
    pub k: f64,
    pub k_star_cap: f64,
    /// Consecutive non-improving steps before stopping; `None` means
    /// `2 n (n - 1)`.
    pub patience: Option<usize>,
    /// Random covered-arc reversals before each neighbour draw.
    pub cars_per_draw: usize,
    /// Random covered-arc reversals at the start of each step; `None` means `n`.
    pub step_cars: Option<usize>,
    pub seed: u64,
    pub score: ScoreKind,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            k: 1.0,
            k_star_cap: DEFAULT_K_STAR_CAP,
            patience: None,
            cars_per_draw: 1,
            step_cars: None,
            seed: 0,
            score: ScoreKind::Bic,
        }
    }
}

impl SearchConfig {
    pub fn with_k(k: f64) -> Self {
        Self { k, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.k) {
            return Err(Error::Domain(format!("greediness k = {}", self.k)));
        }
        if self.k_star_cap.is_nan() || self.k_star_cap <= 0.0 {
            return Err(Error::Domain(format!("k* cap {}", self.k_star_cap)));
        }
        if self.patience == Some(0) {
            return Err(Error::Domain("patience 0".into()));
        }
        self.score.validate()
    }

    pub fn patience_for(&self, n: usize) -> usize {
        self.patience.unwrap_or_else(|| (2 * ib_size_estimate(n)).max(1))
    }

    pub fn step_cars_for(&self, n: usize) -> usize {
        self.step_cars.unwrap_or(n)
    }

    /// Neighbours drawn per step for `n` variables.
    pub fn draws_per_step(&self, n: usize) -> Result<usize> {
        let m = k_star(self.k, self.k_star_cap)? * ib_size_estimate(n) as f64;
        Ok((libm::round(m) as usize).max(1))
    }
}

/// `min(cap, -ln(1 - k))`.
pub fn k_star(k: f64, cap: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::Domain(format!("greediness k = {k}")));
    }
    if cap.is_nan() || cap <= 0.0 {
        return Err(Error::Domain(format!("k* cap {cap}")));
    }
    if k >= 1.0 {
        return Ok(cap);
    }
    Ok((-libm::log1p(-k)).min(cap))
}

/// Arcs that can be added to an empty graph on `n` nodes.
pub fn ib_size_estimate(n: usize) -> usize {
    n * n.saturating_sub(1)
}

/// A single arc addition or removal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcMove {
    Add(Arc),
    Remove(Arc),
}

impl ArcMove {
    pub fn arc(self) -> Arc {
        match self {
            ArcMove::Add(a) | ArcMove::Remove(a) => a,
        }
    }
}

/// The move for the ordered pair `(a, b)`, if any: remove `a -> b` when
/// present, add it when the pair is non-adjacent and no cycle results.
fn legal_move(g: &Dag, a: usize, b: usize) -> Option<ArcMove> {
    if g.has_arc(a, b) {
        Some(ArcMove::Remove(Arc::new(a, b)))
    } else if !g.adjacent(a, b) && !g.is_descendant(b, a) {
        Some(ArcMove::Add(Arc::new(a, b)))
    } else {
        None
    }
}

/// Uniform draw among the ordered pairs that admit a legal move.
fn random_move<R: Rng + ?Sized>(g: &Dag, rng: &mut R) -> Result<ArcMove> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::NoMove);
    }
    for _ in 0..REJECTION_ATTEMPTS {
        let a = uniform_index(rng, n);
        let mut b = uniform_index(rng, n - 1);
        if b >= a {
            b += 1;
        }
        if let Some(m) = legal_move(g, a, b) {
            return Ok(m);
        }
    }
    let moves: Vec<ArcMove> = (0..n)
        .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
        .filter_map(|(a, b)| legal_move(g, a, b))
        .collect();
    if moves.is_empty() {
        return Err(Error::NoMove);
    }
    Ok(moves[uniform_index(rng, moves.len())])
}

fn apply_move(g: &mut Dag, m: ArcMove) {
    let r = match m {
        ArcMove::Add(a) => g.insert_arc(a),
        ArcMove::Remove(a) => g.delete_arc(a),
    };
    debug_assert!(r.is_ok());
}

/// Parents of `head` after applying `m`, ascending.
fn parents_after(g: &Dag, m: ArcMove) -> Vec<usize> {
    let a = m.arc();
    let mut ps: Vec<usize> = g.parents(a.head).collect();
    match m {
        ArcMove::Add(_) => {
            let i = ps.partition_point(|&p| p < a.tail);
            ps.insert(i, a.tail);
        }
        ArcMove::Remove(_) => ps.retain(|&p| p != a.tail),
    }
    ps
}

/// Random member of the inclusion boundary of `g`'s model: `cars` lazy
/// covered-arc reversal steps, then one uniformly chosen legal arc addition
/// or removal.
pub fn sample_ib_neighbor<R: Rng + ?Sized>(g: &Dag, rng: &mut R, cars: usize) -> Result<Dag> {
    let mut rep = g.clone();
    for _ in 0..cars {
        rep.apply_lazy_car(rng);
    }
    let m = random_move(&rep, rng)?;
    apply_move(&mut rep, m);
    Ok(rep)
}

struct Candidate {
    dag: Dag,
    score: f64,
    fingerprint: Option<Fingerprint>,
}

impl Candidate {
    fn fingerprint(&mut self) -> &Fingerprint {
        let dag = &self.dag;
        self.fingerprint.get_or_insert_with(|| dag.fingerprint())
    }
}

struct StepOutcome {
    next: Option<(Dag, f64)>,
    draws: usize,
}

struct Step<'a> {
    data: &'a Dataset,
    kind: ScoreKind,
    draws: usize,
    step_cars: usize,
    cars_per_draw: usize,
}

impl Step<'_> {
    fn run<R: Rng + ?Sized>(&self, g: &Dag, g_score: f64, cache: &mut ScoreCache, rng: &mut R) -> Result<StepOutcome> {
        let n = g.node_count();
        let (data, kind) = (self.data, self.kind);
        let mut rep = g.clone();
        for _ in 0..self.step_cars {
            rep.apply_random_car(rng);
        }
        let mut family: Vec<f64> = (0..n).map(|x| cached_family(&rep, x, data, kind, cache)).collect();
        let mut rep_score: f64 = family.iter().sum();
        let threshold = g_score + score_tolerance(g_score);
        let mut best: Option<Candidate> = None;

        for _ in 0..self.draws {
            for _ in 0..self.cars_per_draw {
                if let Some(a) = rep.apply_random_car(rng) {
                    family[a.tail] = cached_family(&rep, a.tail, data, kind, cache);
                    family[a.head] = cached_family(&rep, a.head, data, kind, cache);
                    rep_score = family.iter().sum();
                }
            }
            let m = random_move(&rep, rng)?;
            let head = m.arc().head;
            let ps = parents_after(&rep, m);
            let new_family =
                cache.get_or_compute_sorted(head, ps.iter().copied(), || compute_family(data, kind, head, &ps));
            let approx = rep_score - family[head] + new_family;
            if approx <= threshold {
                continue;
            }
            if let Some(b) = &best {
                if approx < b.score - score_tolerance(b.score) {
                    continue;
                }
            }
            let mut dag = rep.clone();
            apply_move(&mut dag, m);
            let score = dag_score(&dag, data, kind, cache)?;
            if score <= threshold {
                continue;
            }
            let mut cand = Candidate { dag, score, fingerprint: None };
            best = match best {
                None => Some(cand),
                Some(mut b) => match compare_scores(cand.score, b.score) {
                    Ordering::Greater => Some(cand),
                    Ordering::Less => Some(b),
                    Ordering::Equal => {
                        if cand.fingerprint() < b.fingerprint() {
                            Some(cand)
                        } else {
                            Some(b)
                        }
                    }
                },
            };
        }
        Ok(StepOutcome { next: best.map(|b| (b.dag, b.score)), draws: self.draws })
    }
}

/// One step from `g`: the best strictly improving model in a sampled batch,
/// or `None` when the batch holds no improvement.
pub fn kes_step<R: Rng + ?Sized>(
    g: &Dag,
    data: &Dataset,
    cfg: &SearchConfig,
    cache: &mut ScoreCache,
    rng: &mut R,
) -> Result<Option<Dag>> {
    cfg.validate()?;
    let n = g.node_count();
    let g_score = dag_score(g, data, cfg.score, cache)?;
    if n < 2 {
        return Ok(None);
    }
    let step = Step {
        data,
        kind: cfg.score,
        draws: cfg.draws_per_step(n)?,
        step_cars: cfg.step_cars_for(n),
        cars_per_draw: cfg.cars_per_draw,
    };
    Ok(step.run(g, g_score, cache, rng)?.next.map(|(d, _)| d))
}

/// Outcome of one search run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub dag: Dag,
    pub score: f64,
    pub fingerprint: Fingerprint,
    /// Steps executed, improving or not.
    pub iterations: usize,
    /// Neighbours drawn over the whole run.
    pub draws: usize,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub seed: u64,
    /// Score of the empty start model followed by every accepted model's.
    pub trajectory: Vec<f64>,
}

impl RunResult {
    /// Whether the accepted scores increase strictly.
    pub fn is_monotone(&self) -> bool {
        self.trajectory.windows(2).all(|w| w[1] > w[0])
    }
}

/// Runs the search from the empty graph with a private cache.
pub fn run_kes(data: &Dataset, cfg: &SearchConfig) -> Result<RunResult> {
    run_kes_with_cache(data, cfg, &mut ScoreCache::new())
}

/// Runs the search from the empty graph, sharing `cache` (which must belong
/// to the same data and score kind). Hit and miss counts in the result cover
/// this run only.
pub fn run_kes_with_cache(data: &Dataset, cfg: &SearchConfig, cache: &mut ScoreCache) -> Result<RunResult> {
    cfg.validate()?;
    if data.n_rows() == 0 {
        return Err(Error::EmptyData);
    }
    let n = data.n_vars();
    let (hits0, misses0) = cache.stats();
    let mut rng = seeded(cfg.seed);
    let mut g = Dag::empty(n);
    let mut score = dag_score(&g, data, cfg.score, cache)?;
    let mut trajectory = alloc::vec![score];
    let (mut iterations, mut draws) = (0, 0);

    if n >= 2 {
        let step = Step {
            data,
            kind: cfg.score,
            draws: cfg.draws_per_step(n)?,
            step_cars: cfg.step_cars_for(n),
            cars_per_draw: cfg.cars_per_draw,
        };
        let patience = cfg.patience_for(n);
        let mut stale = 0;
        while stale < patience {
            let out = step.run(&g, score, cache, &mut rng)?;
            iterations += 1;
            draws += out.draws;
            match out.next {
                Some((next, next_score)) => {
                    debug_assert!(next_score > score);
                    g = next;
                    score = next_score;
                    trajectory.push(score);
                    stale = 0;
                }
                None => stale += 1,
            }
        }
    }

    let (hits, misses) = cache.stats();
    Ok(RunResult {
        fingerprint: g.fingerprint(),
        dag: g,
        score,
        iterations,
        draws,
        cache_hits: hits - hits0,
        cache_misses: misses - misses0,
        seed: cfg.seed,
        trajectory,
    })
}

/// Where a run landed relative to the GES reference.
pub fn compare_to_reference(run: &RunResult, reference: &RunResult) -> Ordering {
    if run.fingerprint == reference.fingerprint {
        return Ordering::Equal;
    }
    compare_scores(run.score, reference.score)
}

/// Aggregate of `runs` independent runs for one value of `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct KRecord {
    pub k: f64,
    pub k_star: f64,
    pub runs: usize,
    /// Highest final score.
    pub best: f64,
    /// Runs scoring strictly above the GES reference.
    pub better: usize,
    /// Runs scoring strictly below the GES reference.
    pub worse: usize,
    pub equal: usize,
    /// Distinct models among the `better` runs.
    pub distinct_better: usize,
    /// Distinct models among the `worse` runs.
    pub distinct_worse: usize,
    /// Distinct models over all runs.
    pub distinct_total: usize,
    /// Final scores in ascending order.
    pub sorted_scores: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSummary {
    pub base_seed: u64,
    pub dataset_digest: u64,
    pub ges_score: f64,
    pub ges_fingerprint: Fingerprint,
    pub records: Vec<KRecord>,
}

/// Configuration of the single GES reference run.
pub fn ges_reference_config(base: &SearchConfig) -> SearchConfig {
    SearchConfig { k: 1.0, ..*base }
}

/// Configuration of run `index` for greediness `k`.
pub fn run_config(base: &SearchConfig, k: f64, index: usize) -> SearchConfig {
    SearchConfig { k, seed: derive_seed(base.seed, index as u64), ..*base }
}

fn validate_experiment(ks: &[f64], runs: usize, base: &SearchConfig) -> Result<()> {
    if runs == 0 {
        return Err(Error::Domain("runs = 0".into()));
    }
    if ks.is_empty() {
        return Err(Error::Domain("empty k list".into()));
    }
    for &k in ks {
        SearchConfig { k, ..*base }.validate()?;
    }
    Ok(())
}

/// Builds the summary from finished runs; `results[i]` holds the runs for
/// `ks[i]` in index order.
pub fn summarize(
    data: &Dataset,
    base: &SearchConfig,
    ks: &[f64],
    reference: &RunResult,
    results: &[Vec<RunResult>],
) -> Result<ExperimentSummary> {
    let mut records = Vec::with_capacity(ks.len());
    for (&k, runs) in ks.iter().zip(results) {
        let (mut better, mut worse, mut equal) = (0, 0, 0);
        let mut fp_better = BTreeSet::new();
        let mut fp_worse = BTreeSet::new();
        let mut fp_all = BTreeSet::new();
        for r in runs {
            fp_all.insert(&r.fingerprint);
            match compare_to_reference(r, reference) {
                Ordering::Greater => {
                    better += 1;
                    fp_better.insert(&r.fingerprint);
                }
                Ordering::Less => {
                    worse += 1;
                    fp_worse.insert(&r.fingerprint);
                }
                Ordering::Equal => equal += 1,
            }
        }
        let mut sorted_scores: Vec<f64> = runs.iter().map(|r| r.score).collect();
        sorted_scores.sort_by(f64::total_cmp);
        records.push(KRecord {
            k,
            k_star: k_star(k, base.k_star_cap)?,
            runs: runs.len(),
            best: sorted_scores.last().copied().unwrap_or(f64::NEG_INFINITY),
            better,
            worse,
            equal,
            distinct_better: fp_better.len(),
            distinct_worse: fp_worse.len(),
            distinct_total: fp_all.len(),
            sorted_scores,
        });
    }
    Ok(ExperimentSummary {
        base_seed: base.seed,
        dataset_digest: data.digest(),
        ges_score: reference.score,
        ges_fingerprint: reference.fingerprint.clone(),
        records,
    })
}

/// Every run of an experiment together with its summary.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub summary: ExperimentSummary,
    pub reference: RunResult,
    pub runs: Vec<Vec<RunResult>>,
}

/// `runs` independent searches per `k`, compared with one GES run seeded
/// with the base seed. Run `i` uses `derive_seed(base.seed, i)`.
pub fn run_experiment(data: &Dataset, ks: &[f64], runs: usize, base: &SearchConfig) -> Result<ExperimentSummary> {
    Ok(run_experiment_detailed(data, ks, runs, base)?.summary)
}

/// Sequential [`run_experiment`] that keeps every run.
pub fn run_experiment_detailed(data: &Dataset, ks: &[f64], runs: usize, base: &SearchConfig) -> Result<Experiment> {
    validate_experiment(ks, runs, base)?;
    let reference = run_kes(data, &ges_reference_config(base))?;
    let results = ks
        .iter()
        .map(|&k| (0..runs).map(|i| run_kes(data, &run_config(base, k, i))).collect())
        .collect::<Result<Vec<Vec<RunResult>>>>()?;
    finish_experiment(data, base, ks, reference, results)
}

/// Assembles an [`Experiment`] from runs executed elsewhere (for example in
/// parallel); the outcome does not depend on execution order.
pub fn finish_experiment(
    data: &Dataset,
    base: &SearchConfig,
    ks: &[f64],
    reference: RunResult,
    runs: Vec<Vec<RunResult>>,
) -> Result<Experiment> {
    validate_experiment(ks, runs.first().map_or(0, Vec::len), base)?;
    let summary = summarize(data, base, ks, &reference, &runs)?;
    Ok(Experiment { summary, reference, runs })
}
