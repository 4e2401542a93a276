//! Repeated trials over a list of sparsities.
//!
//! CSV columns, in order: `schema, algo, class, n, d, k, trial, seed, mu,
//! eps, completed, wall_time_ns, samples, success, precision, recall,
//! l2_error, error`. Empty cells mean "not available".

use std::io::Write;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::{Instance, SignalClass};
use crate::report::{run, Algo, Rip, RunOptions, SCHEMA};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub algo: Algo,
    pub class: SignalClass,
    pub n: u64,
    pub d: usize,
    pub k_list: Vec<usize>,
    pub trials: usize,
    /// Trial `t` uses instance seed `seed_base + t` for every `k`.
    pub seed_base: u64,
    pub mu: f64,
    pub eps: f64,
    pub rip: Rip,
    pub alpha: Option<f64>,
    pub timing: bool,
    pub threads: usize,
}

impl BenchOptions {
    pub fn new(algo: Algo, class: SignalClass, n: u64, d: usize, k_list: Vec<usize>) -> Self {
        BenchOptions {
            algo,
            class,
            n,
            d,
            k_list,
            trials: 10,
            seed_base: 0,
            mu: 0.0,
            eps: 0.1,
            rip: Rip::Practical,
            alpha: None,
            timing: true,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub schema: String,
    pub algo: Algo,
    pub class: SignalClass,
    pub n: u64,
    pub d: usize,
    pub k: usize,
    pub trial: usize,
    pub seed: u64,
    pub mu: f64,
    pub eps: f64,
    pub completed: bool,
    pub wall_time_ns: Option<u64>,
    pub samples: Option<u64>,
    pub success: bool,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub l2_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    pub k: usize,
    pub trials: usize,
    pub completed: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub median_time_ns: Option<f64>,
    pub median_samples: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub schema: String,
    pub algo: Algo,
    pub class: SignalClass,
    pub n: u64,
    pub d: usize,
    pub mu: f64,
    pub eps: f64,
    pub trials: usize,
    pub seed_base: u64,
    pub per_k: Vec<KSummary>,
    /// Least-squares slope of `ln(median samples)` against `ln k`.
    pub samples_slope: Option<f64>,
    pub all_completed: bool,
}

pub fn run_bench(opts: &BenchOptions) -> (Vec<TrialRow>, Aggregate) {
    let jobs: Vec<(usize, usize)> =
        opts.k_list.iter().flat_map(|&k| (0..opts.trials).map(move |t| (k, t))).collect();
    let threads = opts.threads.max(1).min(jobs.len().max(1));
    let mut slots: Vec<Option<TrialRow>> = vec![None; jobs.len()];
    thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let jobs = &jobs;
                scope.spawn(move || {
                    (w..jobs.len())
                        .step_by(threads)
                        .map(|i| (i, trial(opts, jobs[i].0, jobs[i].1)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, row) in h.join().expect("trial worker panicked") {
                slots[i] = Some(row);
            }
        }
    });
    let rows: Vec<TrialRow> = slots.into_iter().map(|r| r.expect("every trial ran")).collect();
    let agg = aggregate(opts, &rows);
    (rows, agg)
}

fn trial(opts: &BenchOptions, k: usize, t: usize) -> TrialRow {
    let seed = opts.seed_base.wrapping_add(t as u64);
    let mut row = TrialRow {
        schema: SCHEMA.into(),
        algo: opts.algo,
        class: opts.class,
        n: opts.n,
        d: opts.d,
        k,
        trial: t,
        seed,
        mu: opts.mu,
        eps: opts.eps,
        completed: false,
        wall_time_ns: None,
        samples: None,
        success: false,
        precision: None,
        recall: None,
        l2_error: None,
        error: None,
    };
    let run_opts = RunOptions {
        eps: opts.eps,
        rip: opts.rip,
        alpha: opts.alpha,
        timing: opts.timing,
        ..RunOptions::new(opts.algo)
    };
    let outcome = Instance::generate(opts.class, opts.n, opts.d, k, seed, opts.mu).and_then(|i| run(&i, &run_opts));
    match outcome {
        Ok(rep) => {
            row.completed = true;
            row.wall_time_ns = rep.wall_time_ns;
            row.samples = Some(rep.samples);
            row.success = rep.metrics.success;
            row.precision = Some(rep.metrics.precision);
            row.recall = Some(rep.metrics.recall);
            row.l2_error = rep.metrics.l2_error;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn aggregate(opts: &BenchOptions, rows: &[TrialRow]) -> Aggregate {
    let per_k: Vec<KSummary> = opts
        .k_list
        .iter()
        .map(|&k| {
            let mine: Vec<&TrialRow> = rows.iter().filter(|r| r.k == k).collect();
            let done: Vec<&TrialRow> = mine.iter().copied().filter(|r| r.completed).collect();
            let successes = done.iter().filter(|r| r.success).count();
            KSummary {
                k,
                trials: mine.len(),
                completed: done.len(),
                successes,
                success_rate: if mine.is_empty() { 0.0 } else { successes as f64 / mine.len() as f64 },
                median_time_ns: median(done.iter().filter_map(|r| r.wall_time_ns.map(|v| v as f64)).collect()),
                median_samples: median(done.iter().filter_map(|r| r.samples.map(|v| v as f64)).collect()),
            }
        })
        .collect();
    let points: Vec<(f64, f64)> = per_k
        .iter()
        .filter_map(|s| s.median_samples.filter(|&m| m > 0.0).map(|m| ((s.k as f64).ln(), m.ln())))
        .collect();
    Aggregate {
        schema: SCHEMA.into(),
        algo: opts.algo,
        class: opts.class,
        n: opts.n,
        d: opts.d,
        mu: opts.mu,
        eps: opts.eps,
        trials: opts.trials,
        seed_base: opts.seed_base,
        all_completed: rows.iter().all(|r| r.completed),
        samples_slope: slope(&points),
        per_k,
    }
}

/// Median, averaging the two middle values for even counts.
pub fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

/// Ordinary least-squares slope; `None` with fewer than two distinct x.
pub fn slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (points.len() >= 2 && sxx > 0.0).then(|| sxy / sxx)
}

pub fn write_csv<W: Write>(rows: &[TrialRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
