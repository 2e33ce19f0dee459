use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alloc::{build_problem, kkt_spread, solve_closed_form, solve_numeric_oracle, AllocProblem};
use crate::system::{ChannelState, Placement, SystemParams};
use crate::{Error, Result};

/// Relative stopping tolerance handed to the numeric solver.
pub const ORACLE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub trials: usize,
    /// Largest `|closed - numeric| / numeric`.
    pub max_relative_gap: f64,
    /// Largest marginal-cost spread of the closed-form shares.
    pub max_kkt_spread: f64,
    /// Cases where the numeric solver beat the closed form.
    pub numeric_better: usize,
}

/// A random system, channel and placement with up to `max_n` STs.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, max_n: usize) -> (SystemParams, ChannelState, Placement) {
    let n = rng.random_range(1..=max_n);
    let mut params = SystemParams::with_n_st(n);
    params.p_st = (0..n).map(|_| rng.random_range(0.2..2.0)).collect();
    params.p_sat = rng.random_range(0.5..5.0);
    params.lambda = rng.random_range(0.0..=1.0);
    params.intensity = rng.random_range(1.0..20.0);
    let snr_db = |rng: &mut R| rng.random_range(-5.0..30.0);
    let h_st = (0..n)
        .map(|i| 10f64.powf(snr_db(rng) / 10.0) * params.noise / params.p_st[i])
        .collect();
    let h_tc = 10f64.powf(snr_db(rng) / 10.0) * params.noise / params.p_sat;
    let channel = ChannelState::new(h_st, h_tc, 1).expect("positive gains");
    let x = (0..n).map(|_| rng.random_bool(0.5)).collect();
    (params, channel, x)
}

/// Compares the closed-form split with the numeric solver on `trials`
/// random instances.
pub fn verify_allocator(trials: usize, max_n: usize, seed: u64) -> Result<VerifyReport> {
    if trials == 0 || max_n == 0 {
        return Err(Error::Argument("trials and max_n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = VerifyReport {
        trials,
        max_relative_gap: 0.0,
        max_kkt_spread: 0.0,
        numeric_better: 0,
    };
    for _ in 0..trials {
        let (params, channel, x) = random_instance(&mut rng, max_n);
        let prob: AllocProblem = build_problem(&params, &channel, &x)?;
        let closed = solve_closed_form(&prob)?;
        let numeric = solve_numeric_oracle(&prob, ORACLE_TOL)?;
        let gap = (closed.cost - numeric.cost).abs() / numeric.cost;
        report.max_relative_gap = report.max_relative_gap.max(gap);
        report.max_kkt_spread = report.max_kkt_spread.max(kkt_spread(&prob, &closed.alpha));
        if numeric.cost < closed.cost * (1.0 - 1e-12) {
            report.numeric_better += 1;
        }
    }
    Ok(report)
}
