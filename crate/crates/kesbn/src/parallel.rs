//! Experiments spread over worker threads.
//!
//! Each run owns its RNG stream and score cache, so results do not depend on
//! how runs are scheduled; they are reassembled in index order before the
//! summary is built.

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::thread;

use kesbn_core::search::{finish_experiment, ges_reference_config, run_config, run_kes, Experiment, RunResult};
use kesbn_core::{Dataset, SearchConfig};

use crate::error::{Error, Result};

pub const THREADS_VAR: &str = "KESBN_THREADS";

/// Worker count: the machine's parallelism, capped by `KESBN_THREADS` when
/// set.
pub fn thread_budget() -> Result<usize> {
    let available = thread::available_parallelism().map_or(1, NonZeroUsize::get);
    match std::env::var(THREADS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(cap) if cap > 0 => Ok(cap.min(available)),
            _ => Err(Error::Usage(format!("{THREADS_VAR} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(available),
    }
}

/// Same result as [`kesbn_core::search::run_experiment_detailed`], computed
/// on up to `threads` threads.
pub fn run_experiment_parallel(
    data: &Dataset,
    ks: &[f64],
    runs: usize,
    base: &SearchConfig,
    threads: usize,
) -> Result<Experiment> {
    if runs == 0 || ks.is_empty() {
        return Err(kesbn_core::Error::Domain("an experiment needs at least one k and one run".into()).into());
    }
    let jobs = 1 + ks.len() * runs;
    let config = |job: usize| {
        if job == 0 {
            ges_reference_config(base)
        } else {
            let (ki, i) = ((job - 1) / runs, (job - 1) % runs);
            run_config(base, ks[ki], i)
        }
    };

    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let workers = threads.clamp(1, jobs);
    let mut done: Vec<(usize, kesbn_core::Result<RunResult>)> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    while !failed.load(Ordering::Relaxed) {
                        let job = next.fetch_add(1, Ordering::Relaxed);
                        if job >= jobs {
                            break;
                        }
                        let r = run_kes(data, &config(job));
                        if r.is_err() {
                            failed.store(true, Ordering::Relaxed);
                        }
                        out.push((job, r));
                    }
                    out
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    });

    done.sort_by_key(|(job, _)| *job);
    let mut results = Vec::with_capacity(jobs);
    for (_, r) in done {
        results.push(r?);
    }
    let mut results = results.into_iter();
    let reference = results.next().expect("reference run");
    let per_k: Vec<Vec<RunResult>> = (0..ks.len()).map(|_| results.by_ref().take(runs).collect()).collect();
    Ok(finish_experiment(data, base, ks, reference, per_k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kesbn_core::data::trap::trap_dataset;
    use kesbn_core::search::run_experiment_detailed;

    #[test]
    fn matches_sequential_for_any_thread_count() {
        let data = trap_dataset(1, 500, 6).unwrap();
        let base = SearchConfig { seed: 12, ..SearchConfig::default() };
        let ks = [0.0, 0.4];
        let seq = run_experiment_detailed(&data, &ks, 5, &base).unwrap();
        for threads in [1, 3, 8] {
            let par = run_experiment_parallel(&data, &ks, 5, &base, threads).unwrap();
            assert_eq!(par.summary, seq.summary);
            assert_eq!(par.runs, seq.runs);
            assert_eq!(par.reference, seq.reference);
        }
    }

    #[test]
    fn errors_surface() {
        let data = trap_dataset(1, 50, 6).unwrap();
        let bad = SearchConfig { patience: Some(0), ..SearchConfig::default() };
        assert!(run_experiment_parallel(&data, &[0.0], 2, &bad, 2).is_err());
        assert!(run_experiment_parallel(&data, &[], 2, &SearchConfig::default(), 2).is_err());
    }
}
