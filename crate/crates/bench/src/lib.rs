//! Instance generation, recovery runs, dense verification and benchmark
//! reports on top of `sfft-core`.

pub mod error;
pub mod io;
pub mod instance;
pub mod report;
pub mod harness;

pub use error::{BenchError, Result};
pub use harness::{run_bench, Aggregate, BenchOptions, TrialRow};
pub use instance::{Instance, SignalClass};
pub use report::{run, verify, Algo, Rip, RunOptions, RunReport};
