//! Recovery runs and their `v1` reports.

use std::time::Instant;

use clap::ValueEnum;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sfft_core::exact::{exact_sparse_fft_with, slow_sparse_fft, AlphaSchedule, ExactConfig, FourierConfig};
use sfft_core::recursive::{robust_sft, RecursiveParams};
use sfft_core::robust::{robust_sparse_ft, HeavyMode, RobustParams};
use sfft_core::signal::{derive_seed, RipConfig, SignalOracle, SparseSpectrum};

use crate::error::{invalid, Result};
use crate::instance::{Instance, SignalClass};
use crate::io::SpectrumData;

pub const SCHEMA: &str = "v1";
/// Largest `log₂N` with a dense ground truth.
pub const VERIFY_MAX_LOG: u32 = 24;
/// Relative tolerance on values for the exact algorithms.
pub const EXACT_TOL: f64 = 1e-8;
const ALGO_STREAM: u64 = 0xa160;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Exact,
    Slow,
    Robust,
    Recursive,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Exact => "exact",
            Algo::Slow => "slow",
            Algo::Robust => "robust",
            Algo::Recursive => "recursive",
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Algo::Exact | Algo::Slow)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rip {
    Theory,
    Practical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub algo: Algo,
    /// Sparsity handed to the algorithm; the instance's `k` when unset.
    pub k: Option<usize>,
    /// Tail bound handed to the robust algorithms; the instance's `μ` when unset.
    pub mu: Option<f64>,
    pub eps: f64,
    pub rip: Rip,
    /// Algorithm seed; derived from the instance seed when unset.
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub timing: bool,
}

impl RunOptions {
    pub fn new(algo: Algo) -> Self {
        RunOptions { algo, k: None, mu: None, eps: 0.1, rip: Rip::Practical, seed: None, alpha: None, timing: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub n: u64,
    pub d: usize,
    pub k: usize,
    pub class: SignalClass,
    pub seed: u64,
    pub mu: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEcho {
    pub k: usize,
    pub mu: f64,
    pub seed: u64,
    pub rip: Rip,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub c_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_rip: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_heavy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub success: bool,
    pub precision: f64,
    pub recall: f64,
    /// `‖x̂ − χ̂‖₂` against the dense spectrum; absent above the dense cap.
    pub l2_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub instance: InstanceDescriptor,
    pub algo: Algo,
    pub wall_time_ns: Option<u64>,
    pub samples: u64,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub params: ParamEcho,
    pub recovered: SpectrumData,
}

/// Runs one algorithm on a fresh oracle of `inst` and scores the output.
pub fn run(inst: &Instance, opts: &RunOptions) -> Result<RunReport> {
    let dims = *inst.dims();
    let big_n = dims.size();
    let k = opts.k.unwrap_or(inst.meta.k);
    let mu = opts.mu.unwrap_or(inst.meta.mu);
    let seed = opts.seed.unwrap_or_else(|| derive_seed(inst.meta.seed, ALGO_STREAM));
    if !(opts.eps > 0.0 && opts.eps.is_finite()) {
        return invalid(format!("eps = {} must be positive", opts.eps));
    }
    if let Some(a) = opts.alpha {
        if !(a > 0.0 && a <= 0.5) {
            return invalid(format!("alpha = {a} must lie in (0, 1/2]"));
        }
    }
    let x = inst.oracle()?;
    let mode = match opts.rip {
        Rip::Theory => HeavyMode::Theory,
        Rip::Practical => HeavyMode::Practical,
    };
    let start = Instant::now();
    let (spectrum, params) = match opts.algo {
        Algo::Exact | Algo::Slow => {
            let rip = match opts.rip {
                Rip::Theory => RipConfig::theory(seed),
                Rip::Practical => RipConfig::practical(seed),
            };
            let cfg = ExactConfig {
                fourier: FourierConfig { rip, ..FourierConfig::default() },
                alpha: opts.alpha.map_or(AlphaSchedule::OneLevel, AlphaSchedule::Fixed),
                ..ExactConfig::default()
            };
            let c_rip = match opts.rip {
                Rip::Theory => rip.c_theory,
                Rip::Practical => rip.c_practical,
            };
            let (out, alpha) = if opts.algo == Algo::Exact {
                (exact_sparse_fft_with(&x, k, &cfg).0, Some(cfg.alpha.alpha(k.max(1), big_n)))
            } else {
                (slow_sparse_fft(&x, k, &cfg), None)
            };
            let echo = ParamEcho {
                k,
                mu,
                seed,
                rip: opts.rip,
                alpha,
                c_tol: cfg.fourier.c_tol,
                c_rip: Some(c_rip),
                c_heavy: None,
            };
            (out, echo)
        }
        Algo::Robust => {
            let params = RobustParams { mode, ..RobustParams::new(mu, opts.eps, seed) };
            let echo = robust_echo(k, opts.rip, None, &params);
            (robust_sparse_ft(&x, k, params)?, echo)
        }
        Algo::Recursive => {
            let mut params = RecursiveParams::new(mu, opts.eps, seed);
            params.robust.mode = mode;
            params.alpha = opts.alpha;
            let echo = robust_echo(k, opts.rip, Some(params.alpha_for(k, big_n)), &params.robust);
            (robust_sft(&x, k, params)?, echo)
        }
    };
    let elapsed = start.elapsed();
    let samples = x.sample_count();
    let metrics = score(inst, &x, &spectrum, opts.algo, opts.eps)?;
    Ok(RunReport {
        schema: SCHEMA.into(),
        instance: InstanceDescriptor {
            n: dims.n(),
            d: dims.d(),
            k: inst.meta.k,
            class: inst.meta.class,
            seed: inst.meta.seed,
            mu: inst.meta.mu,
            eps: opts.eps,
        },
        algo: opts.algo,
        wall_time_ns: opts.timing.then(|| elapsed.as_nanos().min(u64::MAX as u128) as u64),
        samples,
        metrics,
        params,
        recovered: SpectrumData::from_spectrum(&spectrum),
    })
}

fn robust_echo(k: usize, rip: Rip, alpha: Option<f64>, p: &RobustParams) -> ParamEcho {
    ParamEcho { k, mu: p.mu, seed: p.seed, rip, alpha, c_tol: p.c_tol, c_rip: None, c_heavy: Some(p.c_heavy) }
}

/// Recomputes the metrics of `report` from a dense ground truth.
pub fn verify(inst: &Instance, report: &RunReport) -> Result<RunReport> {
    let dims = inst.dims();
    if dims.depth() > VERIFY_MAX_LOG {
        return invalid(format!("N = 2^{} exceeds the dense verification cap 2^{VERIFY_MAX_LOG}", dims.depth()));
    }
    if report.recovered.n != dims.n() || report.recovered.d != dims.d() {
        return invalid("report and instance disagree on (n, d)");
    }
    let recovered = report.recovered.to_spectrum()?;
    let x = inst.oracle()?;
    let mut out = report.clone();
    out.metrics = score(inst, &x, &recovered, report.algo, report.instance.eps)?;
    Ok(out)
}

/// Ground truth is the dense spectrum of the oracle when `N ≤ 2^24`, else
/// the instance head (exact for noiseless instances).
///
/// Support counts entries above `max(1e-8·max|x̂|, 2μ)`: heads are at least
/// `3μ` and no tail entry exceeds `μ`, so this separates them.
fn score(inst: &Instance, x: &SignalOracle, chi: &SparseSpectrum, algo: Algo, eps: f64) -> Result<Metrics> {
    let mu = inst.meta.mu;
    let dense = if inst.dims().depth() <= VERIFY_MAX_LOG { Some(x.spectrum_dense()?) } else { None };
    let truth_max = match &dense {
        Some(xs) => xs.iter().map(|v| v.norm()).fold(0.0, f64::max),
        None => inst.head.max_abs(),
    };
    let tau = (EXACT_TOL * truth_max).max(2.0 * mu);
    let truth_at = |f: u64| match &dense {
        Some(xs) => xs[f as usize],
        None => inst.head.get_index(f),
    };
    let truth_support: Vec<u64> = match &dense {
        Some(xs) => (0..xs.len() as u64).filter(|&f| xs[f as usize].norm() > tau).collect(),
        None => inst.head.iter().filter(|(_, v)| v.norm() > tau).map(|(f, _)| f).collect(),
    };
    let found: Vec<u64> = chi.iter().filter(|(_, v)| v.norm() > tau).map(|(f, _)| f).collect();
    let hits = found.iter().filter(|&&f| truth_at(f).norm() > tau).count();
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let precision = ratio(hits, found.len());
    let recall = ratio(hits, truth_support.len());

    // Largest entrywise error, over every frequency where either side is nonzero.
    let max_err = match &dense {
        Some(xs) => xs.iter().enumerate().map(|(f, &v)| (v - chi.get_index(f as u64)).norm()).fold(0.0, f64::max),
        None => chi
            .iter()
            .map(|(f, _)| f)
            .chain(inst.head.iter().map(|(f, _)| f))
            .map(|f| (truth_at(f) - chi.get_index(f)).norm())
            .fold(0.0, f64::max),
    };
    let l2_error = dense.as_ref().map(|xs| dense_dist_sq(xs, chi).sqrt());
    let success = if algo.is_exact() {
        precision == 1.0 && recall == 1.0 && max_err <= EXACT_TOL * truth_max.max(f64::MIN_POSITIVE)
    } else {
        let floor = EXACT_TOL * truth_max.max(1.0);
        match l2_error {
            Some(e) => e * e <= (1.0 + eps) * mu * mu + floor * floor,
            None => mu == 0.0 && max_err <= floor,
        }
    };
    Ok(Metrics { success, precision, recall, l2_error })
}

/// `‖a − b‖₂²` between a dense spectrum and a sparse one.
pub fn dense_dist_sq(dense: &[C64], chi: &SparseSpectrum) -> f64 {
    dense.iter().enumerate().map(|(f, &v)| (v - chi.get_index(f as u64)).norm_sqr()).sum()
}
