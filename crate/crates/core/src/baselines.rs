//! Reference algorithms. All of them share the bandwidth allocator and the
//! cost model with the learning agent.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{best_of, label_of, AgentConfig, FrameRecord, OffloadPolicy};
use crate::alloc::allocate;
use crate::channel::MeanGains;
use crate::nn::{self, AdamState, Mlp, ReplayMemory};
use crate::system::{ChannelState, OffloadDecision, Placement, SystemParams};
use crate::{Error, Result};

/// Largest ST count the exhaustive search accepts.
pub const MAX_ENUM_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    Enumeration,
    CoordinateDescent,
    Ddlo,
    PureTc,
    PureSat,
}

/// Best placement over all `2^N` candidates. Ties keep the lowest mask,
/// where bit `n` set means ST `n` runs on the satellite.
pub fn enumerate_optimal(params: &SystemParams, channel: &ChannelState) -> Result<OffloadDecision> {
    let n = params.n_st;
    if n > MAX_ENUM_N {
        return Err(Error::Argument(format!("enumeration limited to N <= {MAX_ENUM_N}, got {n}")));
    }
    let mut best: Option<OffloadDecision> = None;
    let mut x = vec![false; n];
    for mask in 0u32..(1u32 << n) {
        for (i, b) in x.iter_mut().enumerate() {
            *b = mask & (1 << i) != 0;
        }
        let d = allocate(params, channel, &x)?;
        if best.as_ref().is_none_or(|b| d.cost < b.cost) {
            best = Some(d);
        }
    }
    best.ok_or_else(|| Error::Degenerate("empty enumeration".into()))
}

/// Result of a coordinate descent run.
#[derive(Debug, Clone, PartialEq)]
pub struct CdOutcome {
    pub decision: OffloadDecision,
    /// Cost after the start point and after each accepted flip.
    pub accepted_costs: Vec<f64>,
    /// Number of bandwidth subproblems solved.
    pub evaluations: usize,
}

/// Starting point used by [`coordinate_descent`]: every task on the satellite.
pub fn cd_start(n_st: usize) -> Placement {
    vec![true; n_st]
}

/// Repeatedly applies the single-ST flip with the largest cost decrease
/// until no flip decreases the cost.
pub fn coordinate_descent(params: &SystemParams, channel: &ChannelState) -> Result<CdOutcome> {
    coordinate_descent_from(params, channel, cd_start(params.n_st))
}

pub fn coordinate_descent_from(params: &SystemParams, channel: &ChannelState, start: Placement) -> Result<CdOutcome> {
    let mut current = allocate(params, channel, &start)?;
    let mut accepted_costs = vec![current.cost];
    let mut evaluations = 1;
    loop {
        let mut best: Option<OffloadDecision> = None;
        let mut x = current.x.clone();
        for st in 0..x.len() {
            x[st] = !x[st];
            let d = allocate(params, channel, &x)?;
            evaluations += 1;
            x[st] = !x[st];
            if d.cost < current.cost && best.as_ref().is_none_or(|b| d.cost < b.cost) {
                best = Some(d);
            }
        }
        match best {
            Some(d) => {
                accepted_costs.push(d.cost);
                current = d;
            }
            None => break,
        }
    }
    Ok(CdOutcome {
        decision: current,
        accepted_costs,
        evaluations,
    })
}

/// Every task to the cloud (`PureTc`) or to the satellite (`PureSat`), with
/// optimized bandwidth.
pub fn pure_fixed(params: &SystemParams, channel: &ChannelState, kind: BaselineKind) -> Result<OffloadDecision> {
    let on_sat = match kind {
        BaselineKind::PureTc => false,
        BaselineKind::PureSat => true,
        other => return Err(Error::Argument(format!("{other:?} is not a fixed placement"))),
    };
    allocate(params, channel, &vec![on_sat; params.n_st])
}

/// Wraps a stateless baseline as an [`OffloadPolicy`].
#[derive(Debug, Clone, Copy)]
pub struct StaticPolicy {
    kind: BaselineKind,
}

impl StaticPolicy {
    pub fn new(kind: BaselineKind) -> Result<Self> {
        if kind == BaselineKind::Ddlo {
            return Err(Error::Argument("DDLO keeps state; use DdloEnsemble".into()));
        }
        Ok(Self { kind })
    }
}

impl OffloadPolicy for StaticPolicy {
    fn name(&self) -> &'static str {
        match self.kind {
            BaselineKind::Enumeration => "enum",
            BaselineKind::CoordinateDescent => "cd",
            BaselineKind::PureTc => "pure-tc",
            BaselineKind::PureSat => "pure-sat",
            BaselineKind::Ddlo => "ddlo",
        }
    }

    fn step(&mut self, params: &SystemParams, channel: &ChannelState, frame: u64) -> Result<FrameRecord> {
        let start = Instant::now();
        let (decision, candidates) = match self.kind {
            BaselineKind::Enumeration => (enumerate_optimal(params, channel), 1usize << params.n_st),
            BaselineKind::CoordinateDescent => match coordinate_descent(params, channel) {
                Ok(o) => (Ok(o.decision), o.evaluations),
                Err(e) => (Err(e), 0),
            },
            kind => (pure_fixed(params, channel, kind), 1),
        };
        let decision = decision.map_err(|e| e.at_frame(frame))?;
        let elapsed = start.elapsed();
        Ok(FrameRecord {
            frame,
            decision,
            candidates,
            k_star: None,
            loss: None,
            decide_time: elapsed,
            step_time: elapsed,
        })
    }
}

/// `N` independently initialized networks, each proposing its rounded
/// output; all of them learn from one shared replay memory.
#[derive(Debug, Clone)]
pub struct DdloEnsemble {
    cfg: AgentConfig,
    nets: Vec<Mlp>,
    opts: Vec<AdamState>,
    memory: ReplayMemory,
    means: MeanGains,
    rng: ChaCha8Rng,
}

impl DdloEnsemble {
    pub fn new(n_st: usize, cfg: AgentConfig, means: MeanGains, seed: u64) -> Result<Self> {
        Self::with_size(n_st, n_st, cfg, means, seed)
    }

    pub fn with_size(n_st: usize, members: usize, cfg: AgentConfig, means: MeanGains, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if members == 0 {
            return Err(Error::Argument("DDLO needs at least one network".into()));
        }
        let dims = nn::policy_dims(n_st);
        let nets = (0..members)
            .map(|i| {
                let mut init = ChaCha8Rng::seed_from_u64(seed);
                init.set_stream(i as u64 + 1);
                Mlp::random(&dims, cfg.init_std, &mut init)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            opts: nets.iter().map(|n| AdamState::new(n, cfg.learning_rate)).collect(),
            memory: ReplayMemory::new(cfg.memory_capacity)?,
            nets,
            cfg,
            means,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn nets(&self) -> &[Mlp] {
        &self.nets
    }

    /// Rounded proposal of every member, in member order, without dedup.
    pub fn proposals(&self, channel: &ChannelState) -> Result<Vec<Placement>> {
        let input = self.means.normalize(channel);
        self.nets
            .iter()
            .map(|net| Ok(net.forward(&input)?.iter().map(|&v| v > 0.5).collect()))
            .collect()
    }

    pub fn decide(&self, params: &SystemParams, channel: &ChannelState) -> Result<FrameRecord> {
        let start = Instant::now();
        let mut unique: Vec<Placement> = Vec::with_capacity(self.nets.len());
        for x in self.proposals(channel)? {
            if !unique.contains(&x) {
                unique.push(x);
            }
        }
        let (idx, decision) = best_of(params, channel, &unique)?;
        let elapsed = start.elapsed();
        Ok(FrameRecord {
            frame: channel.frame,
            decision,
            candidates: unique.len(),
            k_star: Some(idx + 1),
            loss: None,
            decide_time: elapsed,
            step_time: elapsed,
        })
    }

    pub fn step(&mut self, params: &SystemParams, channel: &ChannelState, frame: u64) -> Result<FrameRecord> {
        let start = Instant::now();
        let mut rec = self.decide(params, channel).map_err(|e| e.at_frame(frame))?;
        rec.frame = frame;
        self.memory.push(self.means.normalize(channel), label_of(&rec.decision.x));
        if frame.is_multiple_of(self.cfg.delta_train) {
            let mut total = 0.0;
            for (net, opt) in self.nets.iter_mut().zip(&mut self.opts) {
                let batch = self.memory.sample(self.cfg.batch_size, &mut self.rng)?;
                total += nn::train_batch(net, opt, &batch).map_err(|e| e.at_frame(frame))?;
            }
            rec.loss = Some(total / self.nets.len() as f64);
        }
        rec.step_time = start.elapsed();
        Ok(rec)
    }
}

impl OffloadPolicy for DdloEnsemble {
    fn name(&self) -> &'static str {
        "ddlo"
    }

    fn step(&mut self, params: &SystemParams, channel: &ChannelState, frame: u64) -> Result<FrameRecord> {
        DdloEnsemble::step(self, params, channel, frame)
    }
}
