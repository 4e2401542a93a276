use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sfft_bench::io::{read_json, to_json, write_text, SpectrumFile};
use sfft_bench::report::{Rip, RunOptions, RunReport};
use sfft_bench::{harness, run, run_bench, verify, Algo, BenchError, BenchOptions, Instance, Result, SignalClass};

#[derive(Parser)]
#[command(name = "sfft", about = "Sparse FFT instance generation, recovery and benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a k-sparse instance and write its spectrum file.
    Gen {
        #[arg(long, value_enum)]
        class: SignalClass,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tail energy of the noisy variant (0 for an exactly sparse signal).
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run one recovery algorithm on an instance.
    Run {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, value_enum, default_value = "practical")]
        rip: Rip,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Leave out the wall time so reports are byte-stable.
        #[arg(long)]
        no_timing: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Recompute a report's metrics from the dense spectrum.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Repeated trials over a list of sparsities.
    Bench {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long, value_enum, default_value = "comb")]
        class: SignalClass,
        #[arg(long, value_delimiter = ',', required = true)]
        k_list: Vec<usize>,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, value_enum, default_value = "practical")]
        rip: Rip,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        no_timing: bool,
        /// Per-trial rows; stdout when omitted.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Aggregate summary; stderr when omitted.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| BenchError::Io { path: "<stdout>".into(), source }),
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    Instance::from_file(&read_json::<SpectrumFile>(path)?)
}

fn main_inner(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Gen { class, n, d, k, seed, mu, out } => {
            let inst = Instance::generate(class, n, d, k, seed, mu)?;
            emit(out.as_deref(), &to_json(&inst.to_file())?)?;
        }
        Cmd::Run { algo, input, k, mu, eps, rip, seed, alpha, no_timing, out } => {
            let inst = load_instance(&input)?;
            let opts = RunOptions { algo, k, mu, eps, rip, seed, alpha, timing: !no_timing };
            emit(out.as_deref(), &to_json(&run(&inst, &opts)?)?)?;
        }
        Cmd::Verify { input, report, out } => {
            let inst = load_instance(&input)?;
            let rep: RunReport = read_json(&report)?;
            emit(out.as_deref(), &to_json(&verify(&inst, &rep)?)?)?;
        }
        Cmd::Bench {
            algo,
            class,
            k_list,
            n,
            d,
            trials,
            seed_base,
            mu,
            eps,
            rip,
            alpha,
            threads,
            no_timing,
            csv,
            json,
        } => {
            let opts = BenchOptions {
                trials,
                seed_base,
                mu,
                eps,
                rip,
                alpha,
                threads,
                timing: !no_timing,
                ..BenchOptions::new(algo, class, n, d, k_list)
            };
            let (rows, agg) = run_bench(&opts);
            let mut buf = Vec::new();
            harness::write_csv(&rows, &mut buf)?;
            emit(csv.as_deref(), &String::from_utf8_lossy(&buf))?;
            let summary = to_json(&agg)?;
            match json {
                Some(p) => write_text(&p, &summary)?,
                None => eprint!("{summary}"),
            }
            for r in rows.iter().filter(|r| !r.completed) {
                eprintln!("k={} trial={}: {}", r.k, r.trial, r.error.as_deref().unwrap_or("failed"));
            }
            return Ok(agg.all_completed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
