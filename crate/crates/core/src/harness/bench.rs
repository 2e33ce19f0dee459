use std::fmt;

use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use super::experiment::{build_policy, derive_seed};
use crate::channel::ChannelSim;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub algorithm: Algorithm,
    pub n_st: usize,
    /// Mean decision-path wall time per frame, warm-up excluded.
    pub mean_decide_seconds: f64,
    /// Mean wall time per frame including learning.
    pub mean_step_seconds: f64,
    pub mean_candidates: f64,
    pub mean_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchTable {
    pub frames: u64,
    pub warmup_frames: u64,
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn get(&self, algorithm: Algorithm, n_st: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm && r.n_st == n_st)
    }
}

impl fmt::Display for BenchTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<9} {:>4} {:>14} {:>14} {:>10} {:>12}",
            "algorithm", "N", "decide s/frame", "step s/frame", "candidates", "mean cost"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<9} {:>4} {:>14.3e} {:>14.3e} {:>10.2} {:>12.5}",
                r.algorithm.as_str(),
                r.n_st,
                r.mean_decide_seconds,
                r.mean_step_seconds,
                r.mean_candidates,
                r.mean_cost
            )?;
        }
        Ok(())
    }
}

/// Times every configured algorithm for each ST count, one at a time on
/// the calling thread. Each run covers `frames` frames of a fresh trace
/// from the first configured seed; the first `warmup_frames` are not timed.
pub fn bench_runtime(cfg: &ExperimentConfig, n_values: &[usize], frames: u64) -> Result<BenchTable> {
    let warmup = cfg.experiment.warmup_frames;
    if frames <= warmup {
        return Err(Error::Argument(format!("{frames} frames leave nothing after {warmup} warm-up frames")));
    }
    let seed = cfg.experiment.seeds.first().copied().unwrap_or(0);
    let mut rows = Vec::new();
    for &n in n_values {
        let params = cfg.system.resized(n)?;
        let mut sim = ChannelSim::new(&cfg.channel, &params, derive_seed(seed, 0))?;
        let trace = sim.trace(frames);
        for &algorithm in &cfg.experiment.algorithms {
            let mut policy = build_policy(algorithm, cfg, n, sim.means(), seed)?;
            let (mut decide, mut step, mut cand, mut cost) = (0.0, 0.0, 0.0, 0.0);
            for (i, ch) in trace.frames.iter().enumerate() {
                let t = i as u64 + 1;
                let rec = policy.step(&params, ch, t)?;
                if t > warmup {
                    decide += rec.decide_time.as_secs_f64();
                    step += rec.step_time.as_secs_f64();
                    cand += rec.candidates as f64;
                    cost += rec.decision.cost;
                }
            }
            let m = (frames - warmup) as f64;
            rows.push(BenchRow {
                algorithm,
                n_st: n,
                mean_decide_seconds: decide / m,
                mean_step_seconds: step / m,
                mean_candidates: cand / m,
                mean_cost: cost / m,
            });
        }
    }
    Ok(BenchTable {
        frames,
        warmup_frames: warmup,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_one_row_per_pair() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.algorithms = vec![Algorithm::PureTc, Algorithm::Cd];
        cfg.experiment.warmup_frames = 5;
        let table = bench_runtime(&cfg, &[2, 3], 20).unwrap();
        assert_eq!(table.rows.len(), 4);
        assert_eq!(table.get(Algorithm::PureTc, 3).unwrap().mean_candidates, 1.0);
        assert!(table.rows.iter().all(|r| r.mean_decide_seconds > 0.0));
        assert!(table.to_string().lines().count() == 5);
    }

    #[test]
    fn warmup_must_leave_frames() {
        let cfg = ExperimentConfig::default();
        assert!(bench_runtime(&cfg, &[2], 100).is_err());
    }
}
