//! Order-preserving quantization of relaxed placements and the adaptive
//! candidate count.

use std::collections::VecDeque;

use crate::system::Placement;
use crate::{Error, Result};

/// Default number of frames between candidate-count adjustments.
pub const DEFAULT_DELTA_BIG: usize = 64;

/// Turns `x_hat` into `k` binary placements.
///
/// Candidate 1 rounds at 0.5 (0.5 itself maps to the cloud). Candidate `k`
/// for `k >= 2` thresholds at the entry that is `(k-1)`-th closest to 0.5:
/// entries above the pivot go to the satellite, entries below to the cloud,
/// and entries equal to the pivot go to the satellite iff the pivot is at
/// most 0.5. Distance ties are ordered by ST index.
pub fn quantize(x_hat: &[f64], k: usize) -> Result<Vec<Placement>> {
    let n = x_hat.len();
    if k < 1 || k > n {
        return Err(Error::Argument(format!("candidate count {k} outside 1..={n}")));
    }
    if let Some(v) = x_hat.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(Error::Argument(format!("relaxed placement entry {v} outside (0, 1)")));
    }

    let mut candidates = Vec::with_capacity(k);
    candidates.push(x_hat.iter().map(|&v| v > 0.5).collect());
    if k == 1 {
        return Ok(candidates);
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ascending ST index among equal distances.
    order.sort_by(|&a, &b| (x_hat[a] - 0.5).abs().total_cmp(&(x_hat[b] - 0.5).abs()));
    for &pivot_idx in &order[..k - 1] {
        let pivot = x_hat[pivot_idx];
        let ties_up = pivot <= 0.5;
        candidates.push(
            x_hat
                .iter()
                .map(|&v| v > pivot || (v == pivot && ties_up))
                .collect(),
        );
    }
    Ok(candidates)
}

/// Adaptive candidate count `K_t` and the window of recent winning indices.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerState {
    n_st: usize,
    k_current: usize,
    delta_big: usize,
    /// 1-based winning candidate indices of the most recent frames.
    window: VecDeque<usize>,
}

impl QuantizerState {
    pub fn new(n_st: usize, delta_big: usize) -> Result<Self> {
        if n_st == 0 || delta_big == 0 {
            return Err(Error::Argument(format!(
                "n_st and delta_big must be positive, got {n_st} and {delta_big}"
            )));
        }
        Ok(Self {
            n_st,
            k_current: n_st,
            delta_big,
            window: VecDeque::with_capacity(delta_big),
        })
    }

    pub fn k_current(&self) -> usize {
        self.k_current
    }

    /// Overrides the current candidate count until the next adjustment.
    pub fn set_k(&mut self, k: usize) -> Result<()> {
        if k < 1 || k > self.n_st {
            return Err(Error::Argument(format!("candidate count {k} outside 1..={}", self.n_st)));
        }
        self.k_current = k;
        Ok(())
    }

    pub fn delta_big(&self) -> usize {
        self.delta_big
    }

    pub fn window(&self) -> impl Iterator<Item = usize> + '_ {
        self.window.iter().copied()
    }

    /// Records the 1-based index of the frame's winning candidate.
    pub fn record_best(&mut self, k_star: usize) -> Result<()> {
        if k_star < 1 || k_star > self.k_current {
            return Err(Error::Argument(format!(
                "winning index {k_star} outside 1..={}",
                self.k_current
            )));
        }
        if self.window.len() == self.delta_big {
            self.window.pop_front();
        }
        self.window.push_back(k_star);
        Ok(())
    }

    /// Sets and returns `K_t` for frame `frame` (1-based), using the winners
    /// recorded for the preceding frames:
    ///
    /// ```text
    /// K_t = N                                          t = 1
    ///       min(max(k*_{t-1}, ..., k*_{t-Delta}) + 1, N)  t mod Delta = 0
    ///       K_{t-1}                                    otherwise
    /// ```
    ///
    /// Before `Delta` frames have been recorded the window max runs over
    /// whatever is available.
    pub fn maybe_adjust_k(&mut self, frame: u64) -> usize {
        assert!(frame >= 1, "frames are numbered from 1");
        if frame == 1 {
            self.k_current = self.n_st;
        } else if frame.is_multiple_of(self.delta_big as u64) {
            if let Some(max) = self.window.iter().max() {
                self.k_current = (max + 1).min(self.n_st);
            }
        }
        self.k_current
    }
}
