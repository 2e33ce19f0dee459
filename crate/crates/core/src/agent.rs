//! The learning offloading agent.
//!
//! Per frame: the policy network maps normalized channel gains to a relaxed
//! placement, the quantizer expands it into `K_t` binary candidates, each
//! candidate gets its optimal bandwidth split, and the cheapest one is
//! applied. The winner is stored in replay memory, the network is trained
//! every `delta_train` frames, and `K_t` follows the winning indices.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alloc::allocate;
use crate::channel::MeanGains;
use crate::nn::{self, AdamState, Mlp, ReplayMemory};
use crate::quantizer::{quantize, QuantizerState};
use crate::system::{ChannelState, OffloadDecision, Placement, SystemParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Train once every `delta_train` frames.
    pub delta_train: u64,
    pub batch_size: usize,
    pub memory_capacity: usize,
    pub learning_rate: f64,
    /// Standard deviation of the initial weights.
    pub init_std: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            delta_train: 10,
            batch_size: 128,
            memory_capacity: nn::DEFAULT_CAPACITY,
            learning_rate: nn::DEFAULT_LEARNING_RATE,
            init_std: nn::DEFAULT_INIT_STD,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta_train == 0 || self.batch_size == 0 || self.memory_capacity == 0 {
            return Err(Error::Config(
                "agent delta_train, batch_size and memory_capacity must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.init_std > 0.0) {
            return Err(Error::Config("agent learning_rate and init_std must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one frame for any offloading algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame: u64,
    pub decision: OffloadDecision,
    /// Number of placements whose bandwidth subproblem was solved.
    pub candidates: usize,
    /// 1-based index of the winning candidate, for candidate-list methods.
    pub k_star: Option<usize>,
    /// Mean training loss, on frames where training happened.
    pub loss: Option<f64>,
    /// Decision path only.
    pub decide_time: Duration,
    /// Decision plus memory update and training.
    pub step_time: Duration,
}

/// Anything that picks one decision per frame.
pub trait OffloadPolicy: Send {
    fn name(&self) -> &'static str;

    fn step(&mut self, params: &SystemParams, channel: &ChannelState, frame: u64) -> Result<FrameRecord>;
}

/// Solves every candidate and keeps the cheapest; ties go to the earliest.
pub(crate) fn best_of(
    params: &SystemParams,
    channel: &ChannelState,
    candidates: &[Placement],
) -> Result<(usize, OffloadDecision)> {
    let mut best: Option<(usize, OffloadDecision)> = None;
    for (i, x) in candidates.iter().enumerate() {
        let d = allocate(params, channel, x)?;
        if best.as_ref().is_none_or(|(_, b)| d.cost < b.cost) {
            best = Some((i, d));
        }
    }
    best.ok_or_else(|| Error::Degenerate("no candidate placement".into()))
}

pub(crate) fn label_of(x: &[bool]) -> Vec<f64> {
    x.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

/// Learning agent with order-preserving candidates and adaptive `K_t`.
#[derive(Debug, Clone)]
pub struct DrtoAgent {
    cfg: AgentConfig,
    net: Mlp,
    opt: AdamState,
    memory: ReplayMemory,
    quantizer: QuantizerState,
    means: MeanGains,
    rng: ChaCha8Rng,
}

impl DrtoAgent {
    pub fn new(n_st: usize, cfg: AgentConfig, delta_big: usize, means: MeanGains, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if means.st.len() != n_st {
            return Err(Error::Argument(format!("{} mean gains for {n_st} STs", means.st.len())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Mlp::random(&nn::policy_dims(n_st), cfg.init_std, &mut rng)?;
        Ok(Self {
            opt: AdamState::new(&net, cfg.learning_rate),
            memory: ReplayMemory::new(cfg.memory_capacity)?,
            quantizer: QuantizerState::new(n_st, delta_big)?,
            net,
            cfg,
            means,
            rng,
        })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn optimizer(&self) -> &AdamState {
        &self.opt
    }

    /// Replaces the network and optimizer, e.g. from a checkpoint.
    pub fn restore(&mut self, net: Mlp, opt: AdamState) -> Result<()> {
        if net.layer_dims() != self.net.layer_dims() || !opt.matches(&net) {
            return Err(Error::Config("checkpoint shape does not match the agent".into()));
        }
        self.net = net;
        self.opt = opt;
        Ok(())
    }

    pub fn quantizer(&self) -> &QuantizerState {
        &self.quantizer
    }

    pub fn memory(&self) -> &ReplayMemory {
        &self.memory
    }

    /// Decision with the current `K_t`. Does not learn.
    pub fn decide(&self, params: &SystemParams, channel: &ChannelState) -> Result<FrameRecord> {
        let start = Instant::now();
        let input = self.means.normalize(channel);
        let x_hat = self.net.forward(&input)?;
        let k = self.quantizer.k_current();
        let candidates = quantize(&x_hat, k)?;
        let (idx, decision) = best_of(params, channel, &candidates)?;
        let decide_time = start.elapsed();
        Ok(FrameRecord {
            frame: channel.frame,
            decision,
            candidates: k,
            k_star: Some(idx + 1),
            loss: None,
            decide_time,
            step_time: decide_time,
        })
    }

    /// One full frame: set `K_t`, decide, remember, and train on schedule.
    pub fn step(&mut self, params: &SystemParams, channel: &ChannelState, frame: u64) -> Result<FrameRecord> {
        if frame == 0 {
            return Err(Error::Argument("frames are numbered from 1".into()));
        }
        let start = Instant::now();
        self.quantizer.maybe_adjust_k(frame);
        let mut rec = self.decide(params, channel).map_err(|e| e.at_frame(frame))?;
        rec.frame = frame;
        self.quantizer.record_best(rec.k_star.unwrap_or(1))?;
        self.memory.push(self.means.normalize(channel), label_of(&rec.decision.x));
        if frame.is_multiple_of(self.cfg.delta_train) {
            let batch = self.memory.sample(self.cfg.batch_size, &mut self.rng)?;
            let loss = nn::train_batch(&mut self.net, &mut self.opt, &batch).map_err(|e| e.at_frame(frame))?;
            rec.loss = Some(loss);
        }
        rec.step_time = start.elapsed();
        Ok(rec)
    }
}

impl OffloadPolicy for DrtoAgent {
    fn name(&self) -> &'static str {
        "drto"
    }

    fn step(&mut self, params: &SystemParams, channel: &ChannelState, frame: u64) -> Result<FrameRecord> {
        DrtoAgent::step(self, params, channel, frame)
    }
}
