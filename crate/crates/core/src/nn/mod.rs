//! Policy network, optimizer and replay memory.

mod adam;
mod mlp;
mod replay;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use adam::AdamState;
pub use mlp::{Dense, Gradients, Mlp, PROB_CLIP};
pub use replay::{Experience, ReplayMemory, DEFAULT_CAPACITY};

use crate::{Error, Result};

/// Hidden layer widths of the policy network.
pub const HIDDEN_DIMS: [usize; 2] = [120, 80];
pub const DEFAULT_LEARNING_RATE: f64 = 0.01;
pub const DEFAULT_INIT_STD: f64 = 0.1;

/// `[N + 1, 120, 80, N]`: all 1st-hop gains plus the 2nd-hop gain in, one
/// relaxed placement entry per ST out.
pub fn policy_dims(n_st: usize) -> Vec<usize> {
    vec![n_st + 1, HIDDEN_DIMS[0], HIDDEN_DIMS[1], n_st]
}

/// One Adam step on the mean cross-entropy of `batch`. Returns the loss
/// measured before the update.
pub fn train_batch(net: &mut Mlp, opt: &mut AdamState, batch: &[&Experience]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Argument("empty training batch".into()));
    }
    let inputs: Vec<&[f64]> = batch.iter().map(|e| e.state.as_slice()).collect();
    let labels: Vec<&[f64]> = batch.iter().map(|e| e.label.as_slice()).collect();
    let (loss, grads) = net.loss_and_gradients(&inputs, &labels)?;
    if !loss.is_finite() {
        let first = &batch[0];
        return Err(Error::Training(format!(
            "loss is {loss} on a batch of {} (first state {:?}, label {:?})",
            batch.len(),
            first.state,
            first.label
        )));
    }
    opt.apply(net, &grads)?;
    if !net.is_finite() {
        return Err(Error::Training(format!(
            "parameters became non-finite after step {}",
            opt.step_count()
        )));
    }
    Ok(loss)
}

/// Network plus optimizer state, stored as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub net: Mlp,
    pub optimizer: AdamState,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        crate::harness::write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        if !ckpt.optimizer.matches(&ckpt.net) {
            return Err(Error::Config(format!(
                "{}: optimizer state does not match network shape",
                path.display()
            )));
        }
        Ok(ckpt)
    }
}
