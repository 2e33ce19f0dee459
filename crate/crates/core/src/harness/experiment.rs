use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use super::write_atomic;
use crate::agent::{DrtoAgent, OffloadPolicy};
use crate::baselines::{enumerate_optimal, BaselineKind, DdloEnsemble, StaticPolicy, MAX_ENUM_N};
use crate::channel::{ChannelSim, ChannelTrace, MeanGains};
use crate::system::SystemParams;
use crate::{Error, Result};

/// One CSV row. `K_t` is the number of placements solved that frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRow {
    pub t: u64,
    #[serde(rename = "K_t")]
    pub k_t: usize,
    pub k_star: Option<usize>,
    pub cost: f64,
    pub cost_ratio: Option<f64>,
    pub loss: Option<f64>,
    pub decide_micros: Option<f64>,
    pub step_micros: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSeries {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub rows: Vec<FrameRow>,
}

impl RunSeries {
    pub fn file_name(algorithm: Algorithm, seed: u64) -> String {
        format!("{algorithm}_seed{seed}.csv")
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.into_inner().map_err(|e| Error::io("<series>", e.into_error()))
    }

    pub fn read_csv(path: &Path, algorithm: Algorithm, seed: u64) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let rows = r.deserialize().collect::<std::result::Result<Vec<FrameRow>, _>>()?;
        Ok(Self { algorithm, seed, rows })
    }
}

/// Statistics of one or more series of the same algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmAggregate {
    pub algorithm: Algorithm,
    /// `None` when pooled over all seeds.
    pub seed: Option<u64>,
    pub frames: usize,
    pub mean_cost: f64,
    pub mean_ratio: Option<f64>,
    pub tail_mean_cost: f64,
    pub tail_mean_ratio: Option<f64>,
    pub tail_mean_loss: Option<f64>,
    /// Share of tail frames whose winner was the first candidate.
    pub tail_k1_share: Option<f64>,
    pub mean_decide_seconds: Option<f64>,
    pub mean_step_seconds: Option<f64>,
}

/// Percent cost reduction of `algorithm` relative to `versus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub algorithm: Algorithm,
    pub versus: Algorithm,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub n_st: usize,
    /// Starting placement of coordinate descent.
    pub cd_start: String,
    pub frames: usize,
    pub tail_frames: usize,
    pub per_run: Vec<AlgorithmAggregate>,
    pub per_algorithm: Vec<AlgorithmAggregate>,
    pub reductions: Vec<Reduction>,
    #[serde(skip)]
    pub series: Vec<RunSeries>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Pools `series` (all of one algorithm). Tail statistics use the last
/// `tail` rows of each series.
pub fn aggregate(series: &[&RunSeries], tail: usize) -> Result<AlgorithmAggregate> {
    let first = series.first().ok_or_else(|| Error::Argument("no series to aggregate".into()))?;
    if series.iter().any(|s| s.algorithm != first.algorithm) {
        return Err(Error::Argument("series of different algorithms".into()));
    }
    let all = || series.iter().flat_map(|s| s.rows.iter());
    let tails = || series.iter().flat_map(|s| &s.rows[s.rows.len().saturating_sub(tail)..]);
    let all_ratios = all().all(|r| r.cost_ratio.is_some());
    let tail_has_k = tails().all(|r| r.k_star.is_some());
    let seed = match series {
        [one] => Some(one.seed),
        _ => None,
    };
    Ok(AlgorithmAggregate {
        algorithm: first.algorithm,
        seed,
        frames: all().count(),
        mean_cost: mean(all().map(|r| r.cost)).unwrap_or(f64::NAN),
        mean_ratio: if all_ratios { mean(all().filter_map(|r| r.cost_ratio)) } else { None },
        tail_mean_cost: mean(tails().map(|r| r.cost)).unwrap_or(f64::NAN),
        tail_mean_ratio: if all_ratios { mean(tails().filter_map(|r| r.cost_ratio)) } else { None },
        tail_mean_loss: mean(tails().filter_map(|r| r.loss)),
        tail_k1_share: if tail_has_k {
            mean(tails().map(|r| if r.k_star == Some(1) { 1.0 } else { 0.0 }))
        } else {
            None
        },
        mean_decide_seconds: mean(all().filter_map(|r| r.decide_micros)).map(|m| m * 1e-6),
        mean_step_seconds: mean(all().filter_map(|r| r.step_micros)).map(|m| m * 1e-6),
    })
}

/// Mixes a run seed with a stream tag into an independent 64-bit seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn build_policy(
    algorithm: Algorithm,
    cfg: &ExperimentConfig,
    n_st: usize,
    means: &MeanGains,
    seed: u64,
) -> Result<Box<dyn OffloadPolicy>> {
    let stream = 1 + Algorithm::ALL.iter().position(|a| *a == algorithm).unwrap_or(0) as u64;
    let seed = derive_seed(seed, stream);
    Ok(match algorithm {
        Algorithm::Drto => Box::new(DrtoAgent::new(
            n_st,
            cfg.agent.clone(),
            cfg.quantizer.delta_big,
            means.clone(),
            seed,
        )?),
        Algorithm::Ddlo => Box::new(DdloEnsemble::new(n_st, cfg.agent.clone(), means.clone(), seed)?),
        Algorithm::Cd => Box::new(StaticPolicy::new(BaselineKind::CoordinateDescent)?),
        Algorithm::Enum => Box::new(StaticPolicy::new(BaselineKind::Enumeration)?),
        Algorithm::PureTc => Box::new(StaticPolicy::new(BaselineKind::PureTc)?),
        Algorithm::PureSat => Box::new(StaticPolicy::new(BaselineKind::PureSat)?),
    })
}

/// Exhaustive optimum of every frame.
pub fn reference_costs(params: &SystemParams, trace: &ChannelTrace) -> Result<Vec<f64>> {
    if params.n_st > MAX_ENUM_N {
        return Err(Error::Argument(format!(
            "cost ratios need exhaustive search, which is capped at N = {MAX_ENUM_N}; disable compute_ratio"
        )));
    }
    trace
        .frames
        .iter()
        .enumerate()
        .map(|(i, ch)| enumerate_optimal(params, ch).map(|d| d.cost).map_err(|e| e.at_frame(i as u64 + 1)))
        .collect()
}

/// Runs `policy` over `trace`, numbering frames from 1.
pub fn run_policy(
    policy: &mut dyn OffloadPolicy,
    params: &SystemParams,
    trace: &ChannelTrace,
    reference: Option<&[f64]>,
    record_timing: bool,
) -> Result<Vec<FrameRow>> {
    let mut rows = Vec::with_capacity(trace.frames.len());
    for (i, ch) in trace.frames.iter().enumerate() {
        let t = i as u64 + 1;
        let rec = policy.step(params, ch, t)?;
        let d = &rec.decision;
        if !d.cost.is_finite() {
            return Err(Error::Domain(format!("non-finite cost at frame {t}")));
        }
        rows.push(FrameRow {
            t,
            k_t: rec.candidates,
            k_star: rec.k_star,
            cost: d.cost,
            cost_ratio: reference.map(|r| d.cost / r[i]),
            loss: rec.loss,
            decide_micros: record_timing.then_some(rec.decide_time.as_secs_f64() * 1e6),
            step_micros: record_timing.then_some(rec.step_time.as_secs_f64() * 1e6),
        });
    }
    Ok(rows)
}

/// Every configured algorithm on one seed's trace. When `trace` is given
/// it replaces the simulated channel and is truncated to `total_frames`.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64, trace: Option<&ChannelTrace>) -> Result<(ChannelTrace, Vec<RunSeries>)> {
    let params = &cfg.system;
    let mut sim = ChannelSim::new(&cfg.channel, params, derive_seed(seed, 0))?;
    let trace = match trace {
        Some(tr) => {
            if tr.n_st() != Some(params.n_st) {
                return Err(Error::Config(format!(
                    "trace has {:?} STs, config has {}",
                    tr.n_st(),
                    params.n_st
                )));
            }
            let mut tr = tr.clone();
            tr.frames.truncate(cfg.experiment.total_frames as usize);
            tr
        }
        None => sim.trace(cfg.experiment.total_frames),
    };
    let reference = if cfg.experiment.compute_ratio {
        Some(reference_costs(params, &trace)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(cfg.experiment.algorithms.len());
    for &algorithm in &cfg.experiment.algorithms {
        let mut policy = build_policy(algorithm, cfg, params.n_st, sim.means(), seed)?;
        let rows = run_policy(
            policy.as_mut(),
            params,
            &trace,
            reference.as_deref(),
            cfg.experiment.record_timing,
        )?;
        out.push(RunSeries { algorithm, seed, rows });
    }
    Ok((trace, out))
}

fn summarize(cfg: &ExperimentConfig, series: Vec<RunSeries>) -> Result<MetricsSummary> {
    let tail = cfg.experiment.tail_frames as usize;
    let per_run = series.iter().map(|s| aggregate(&[s], tail)).collect::<Result<Vec<_>>>()?;
    let mut grouped: BTreeMap<Algorithm, Vec<&RunSeries>> = BTreeMap::new();
    for s in &series {
        grouped.entry(s.algorithm).or_default().push(s);
    }
    let per_algorithm = grouped.values().map(|g| aggregate(g, tail)).collect::<Result<Vec<_>>>()?;
    let mut reductions = Vec::new();
    for a in &per_algorithm {
        for p in per_algorithm
            .iter()
            .filter(|p| matches!(p.algorithm, Algorithm::PureTc | Algorithm::PureSat) && p.algorithm != a.algorithm)
        {
            reductions.push(Reduction {
                algorithm: a.algorithm,
                versus: p.algorithm,
                percent: 100.0 * (p.mean_cost - a.mean_cost) / p.mean_cost,
            });
        }
    }
    Ok(MetricsSummary {
        n_st: cfg.system.n_st,
        cd_start: "all-satellite".into(),
        frames: series.first().map_or(0, |s| s.rows.len()),
        tail_frames: tail,
        per_run,
        per_algorithm,
        reductions,
        series,
    })
}

/// Runs every algorithm on every seed and, when `write` is set, stores the
/// per-run series, the channel traces and `summary.json` under the output
/// directory.
pub fn run_experiment(cfg: &ExperimentConfig, trace: Option<&ChannelTrace>, write: bool) -> Result<MetricsSummary> {
    cfg.validate()?;
    let seeds = &cfg.experiment.seeds;
    let results: Vec<Result<(ChannelTrace, Vec<RunSeries>)>> = if cfg.experiment.parallel && seeds.len() > 1 {
        std::thread::scope(|s| {
            let handles: Vec<_> = seeds.iter().map(|&seed| s.spawn(move || run_seed(cfg, seed, trace))).collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::State("worker thread panicked".into()))))
                .collect()
        })
    } else {
        seeds.iter().map(|&seed| run_seed(cfg, seed, trace)).collect()
    };
    let dir = &cfg.experiment.output_dir;
    let mut all = Vec::new();
    for (seed, res) in seeds.iter().zip(results) {
        let (tr, series) = res?;
        if write {
            let mut buf = Vec::new();
            tr.write_csv(&mut buf)?;
            write_atomic(&dir.join(format!("trace_seed{seed}.csv")), &buf)?;
            for s in &series {
                write_atomic(&dir.join(RunSeries::file_name(s.algorithm, s.seed)), &s.to_csv()?)?;
            }
        }
        all.extend(series);
    }
    let summary = summarize(cfg, all)?;
    if write {
        write_atomic(&dir.join("summary.json"), &serde_json::to_vec_pretty(&summary)?)?;
    }
    Ok(summary)
}
