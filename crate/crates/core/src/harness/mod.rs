//! Experiment runner: shared channel traces, every algorithm on the same
//! trace, per-frame CSV series, JSON summaries, and a serial runtime bench.

mod bench;
mod config;
mod experiment;
mod verify;

use std::io::Write;
use std::path::Path;

pub use bench::{bench_runtime, BenchRow, BenchTable};
pub use config::{Algorithm, ExperimentConfig, ExperimentSection, QuantizerConfig, ENV_PREFIX};
pub use experiment::{
    aggregate, build_policy, derive_seed, reference_costs, run_experiment, run_policy, run_seed, AlgorithmAggregate,
    FrameRow, MetricsSummary, Reduction, RunSeries,
};

pub use verify::{random_instance, verify_allocator, VerifyReport, ORACLE_TOL};

use crate::{Error, Result};

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
