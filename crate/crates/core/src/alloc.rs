//! Optimal bandwidth split for a fixed placement.
//!
//! With `x` fixed, every term of the offloading cost is either independent of
//! the bandwidth shares or proportional to `1/alpha_j` for one link `j`, so
//! the cost regroups as
//!
//! ```text
//! F(alpha) = const + sum_{j in A} c_j / alpha_j,   sum_j alpha_j <= 1
//! ```
//!
//! where `A` holds every 1st-hop link plus the forwarding link of each
//! cloud-bound ST. The objective is strictly decreasing in each `alpha_j`, so
//! any optimum spends the whole budget, and the Lagrange conditions
//! `c_j / alpha_j^2 = mu` give
//!
//! ```text
//! alpha_j = sqrt(c_j) / sum_i sqrt(c_i),   F* = const + (sum_i sqrt(c_i))^2.
//! ```
//!
//! [`solve_numeric_oracle`] reaches the same point by projected gradient
//! descent and exists only to cross-check the closed form.

use crate::system::{first_hop_efficiency, second_hop_efficiency, ChannelState, OffloadDecision, SystemParams};
use crate::{Error, Result};

/// Cost of a placement as a function of the bandwidth shares.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocProblem {
    pub n_st: usize,
    /// Indices into `0..2N` of the links that need bandwidth, ascending.
    pub active: Vec<usize>,
    /// `c_j` for each entry of `active`.
    pub coeffs: Vec<f64>,
    /// Share-independent part of the cost (computation latency and energy).
    pub const_term: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Length `2N`, zero outside the active set.
    pub alpha: Vec<f64>,
    pub cost: f64,
}

impl AllocProblem {
    /// Evaluates `const + sum c_j / alpha_j` for a full-length share vector.
    /// Returns infinity when an active share is not positive.
    pub fn cost_at(&self, alpha: &[f64]) -> f64 {
        let mut total = self.const_term;
        for (&j, &c) in self.active.iter().zip(&self.coeffs) {
            if alpha[j] <= 0.0 {
                return f64::INFINITY;
            }
            total += c / alpha[j];
        }
        total
    }

    fn check(&self) -> Result<()> {
        if self.active.is_empty() {
            return Err(Error::Degenerate("no active link".into()));
        }
        if let Some(c) = self.coeffs.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::Degenerate(format!("link coefficient {c} is not positive and finite")));
        }
        Ok(())
    }
}

/// Groups the cost of placement `x` into per-link coefficients.
pub fn build_problem(params: &SystemParams, channel: &ChannelState, x: &[bool]) -> Result<AllocProblem> {
    let n = params.n_st;
    if x.len() != n || channel.n_st() != n {
        return Err(Error::Argument(format!(
            "placement has {} entries and channel {} STs, system has {n}",
            x.len(),
            channel.n_st()
        )));
    }
    let lambda = params.lambda;
    let per_hz = params.task_bits / params.bandwidth_total;

    let mut active = Vec::with_capacity(2 * n);
    let mut coeffs = Vec::with_capacity(2 * n);
    for st in 0..n {
        active.push(st);
        let weight = lambda + (1.0 - lambda) * params.p_st[st];
        coeffs.push(weight * per_hz / first_hop_efficiency(params, channel, st));
    }

    let fwd_coeff = (lambda + (1.0 - lambda) * params.p_sat) * per_hz / second_hop_efficiency(params, channel);
    let sat_const = lambda * params.sat_compute_latency() + (1.0 - lambda) * params.sat_compute_energy();
    let tc_const = lambda * params.tc_compute_latency();
    let mut const_term = 0.0;
    for (st, &on_sat) in x.iter().enumerate() {
        if on_sat {
            const_term += sat_const;
        } else {
            active.push(n + st);
            coeffs.push(fwd_coeff);
            const_term += tc_const;
        }
    }
    Ok(AllocProblem {
        n_st: n,
        active,
        coeffs,
        const_term,
    })
}

/// Exact minimizer: shares proportional to `sqrt(c_j)`.
pub fn solve_closed_form(prob: &AllocProblem) -> Result<Allocation> {
    prob.check()?;
    let roots: Vec<f64> = prob.coeffs.iter().map(|c| c.sqrt()).collect();
    let sum: f64 = roots.iter().sum();
    let mut alpha = vec![0.0; 2 * prob.n_st];
    for (&j, r) in prob.active.iter().zip(&roots) {
        alpha[j] = r / sum;
    }
    Ok(Allocation {
        alpha,
        cost: prob.const_term + sum * sum,
    })
}

/// Relative spread `(max - min) / mean` of the marginal costs
/// `c_j / alpha_j^2` over the active links. Zero at the optimum.
pub fn kkt_spread(prob: &AllocProblem, alpha: &[f64]) -> f64 {
    let marginals: Vec<f64> = prob
        .active
        .iter()
        .zip(&prob.coeffs)
        .map(|(&j, c)| c / (alpha[j] * alpha[j]))
        .collect();
    let lo = marginals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = marginals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = marginals.iter().sum::<f64>() / marginals.len() as f64;
    (hi - lo) / mean
}

/// Builds and solves the bandwidth subproblem for `x`.
pub fn allocate(params: &SystemParams, channel: &ChannelState, x: &[bool]) -> Result<OffloadDecision> {
    let prob = build_problem(params, channel, x)?;
    let Allocation { alpha, cost } = solve_closed_form(&prob)?;
    Ok(OffloadDecision {
        x: x.to_vec(),
        alpha,
        cost,
    })
}

const ORACLE_MAX_ITERS: usize = 200_000;
const ORACLE_TRACE_LEN: usize = 8;

/// Projected gradient descent with Armijo backtracking on the probability
/// simplex over the active links. Stops when an accepted step changes the
/// cost by less than `tol` relative.
pub fn solve_numeric_oracle(prob: &AllocProblem, tol: f64) -> Result<Allocation> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    prob.check()?;
    let m = prob.active.len();
    let objective = |a: &[f64]| -> f64 {
        let mut total = prob.const_term;
        for (c, &v) in prob.coeffs.iter().zip(a) {
            if v <= 0.0 {
                return f64::INFINITY;
            }
            total += c / v;
        }
        total
    };

    let mut a = vec![1.0 / m as f64; m];
    let mut f = objective(&a);
    let mut step = 1e-3;
    let mut trace = Vec::with_capacity(ORACLE_TRACE_LEN);
    let mut grad = vec![0.0; m];
    let mut trial = vec![0.0; m];

    for iter in 0..ORACLE_MAX_ITERS {
        for ((g, c), v) in grad.iter_mut().zip(&prob.coeffs).zip(&a) {
            *g = -c / (v * v);
        }
        step *= 2.0;
        let next_f = loop {
            for ((t, v), g) in trial.iter_mut().zip(&a).zip(&grad) {
                *t = v - step * g;
            }
            project_to_simplex(&mut trial);
            // Armijo: sufficient decrease along the projected direction.
            let decrease: f64 = grad.iter().zip(&trial).zip(&a).map(|((g, t), v)| g * (t - v)).sum();
            let ft = objective(&trial);
            if ft <= f + 1e-4 * decrease {
                break ft;
            }
            step *= 0.5;
            if step < 1e-300 {
                // No descent left at machine precision; keep the iterate.
                trial.copy_from_slice(&a);
                break f;
            }
        };
        let change = (f - next_f).abs() / f.abs().max(f64::MIN_POSITIVE);
        a.copy_from_slice(&trial);
        f = next_f;
        if trace.len() == ORACLE_TRACE_LEN {
            trace.remove(0);
        }
        trace.push(f);
        if change < tol && iter > 0 {
            let mut alpha = vec![0.0; 2 * prob.n_st];
            for (&j, v) in prob.active.iter().zip(&a) {
                alpha[j] = *v;
            }
            return Ok(Allocation { alpha, cost: f });
        }
    }
    Err(Error::NonConvergence {
        iterations: ORACLE_MAX_ITERS,
        trace,
    })
}

/// Euclidean projection onto `{v >= 0, sum v = 1}`.
fn project_to_simplex(v: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(coeffs: &[f64]) -> AllocProblem {
        AllocProblem {
            n_st: coeffs.len(),
            active: (0..coeffs.len()).collect(),
            coeffs: coeffs.to_vec(),
            const_term: 0.0,
        }
    }

    fn snr_channel(params: &SystemParams, snr1: f64, snr2: f64) -> ChannelState {
        let h_st = params.p_st.iter().map(|p| snr1 * params.noise / p).collect();
        ChannelState::new(h_st, snr2 * params.noise / params.p_sat, 0).unwrap()
    }

    /// Exhaustive search over a grid of the 2-link simplex.
    fn grid_two_links(c0: f64, c1: f64, step: f64) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0);
        let cells = (1.0 / step).round() as usize;
        for i in 1..cells {
            let a = i as f64 * step;
            let f = c0 / a + c1 / (1.0 - a);
            if f < best.0 {
                best = (f, a);
            }
        }
        best
    }

    #[test]
    fn build_problem_single_st() {
        let p = SystemParams::with_n_st(1);
        let ch = snr_channel(&p, 3.0, 3.0);
        let prob = build_problem(&p, &ch, &[true]).unwrap();
        assert_eq!(prob.active, vec![0]);
        assert!((prob.coeffs[0] - 0.5).abs() < 1e-12);
        assert!((prob.const_term - 15.0).abs() < 1e-12);
    }

    #[test]
    fn active_set_size_follows_placement() {
        let p = SystemParams::with_n_st(4);
        let ch = snr_channel(&p, 3.0, 3.0);
        assert_eq!(build_problem(&p, &ch, &[true; 4]).unwrap().active.len(), 4);
        assert_eq!(build_problem(&p, &ch, &[false; 4]).unwrap().active.len(), 8);
        let mixed = build_problem(&p, &ch, &[true, false, true, false]).unwrap();
        assert_eq!(mixed.active, vec![0, 1, 2, 3, 5, 7]);
    }

    #[test]
    fn closed_form_examples() {
        let sol = solve_closed_form(&problem(&[1.0, 4.0])).unwrap();
        assert!((sol.alpha[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((sol.alpha[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((sol.cost - 9.0).abs() < 1e-12);
        let (grid_cost, grid_alpha) = grid_two_links(1.0, 4.0, 1e-4);
        assert!(grid_cost >= sol.cost);
        assert!(grid_cost - sol.cost < 1e-6);
        assert!((grid_alpha - 1.0 / 3.0).abs() < 1e-4);

        let sym = solve_closed_form(&problem(&[2.5, 2.5])).unwrap();
        assert_eq!(sym.alpha[..2], [0.5, 0.5]);
        assert!(sym.alpha[2..].iter().all(|&a| a == 0.0));
        let single = solve_closed_form(&problem(&[7.0])).unwrap();
        assert_eq!(single.alpha[0], 1.0);
        assert!((single.cost - 7.0).abs() < 1e-12);
    }

    #[test]
    fn empty_problem_is_degenerate() {
        let prob = AllocProblem {
            n_st: 1,
            active: vec![],
            coeffs: vec![],
            const_term: 1.0,
        };
        assert!(matches!(solve_closed_form(&prob), Err(Error::Degenerate(_))));
        assert!(matches!(solve_numeric_oracle(&prob, 1e-9), Err(Error::Degenerate(_))));
    }

    #[test]
    fn oracle_matches_closed_form_example() {
        let sol = solve_numeric_oracle(&problem(&[1.0, 4.0]), 1e-10).unwrap();
        assert!((sol.cost - 9.0).abs() <= 1e-6 * 9.0);
        for tol in [1e-2, 1e-12] {
            let single = solve_numeric_oracle(&problem(&[3.0]), tol).unwrap();
            assert_eq!(single.alpha[0], 1.0);
        }
        assert!(matches!(solve_numeric_oracle(&problem(&[1.0]), 0.0), Err(Error::Argument(_))));
    }

    #[test]
    fn oracle_sweep_against_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let m = rng.random_range(1..=14);
            let coeffs: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.random_range(-2.0..1.0))).collect();
            let mut prob = problem(&coeffs);
            prob.const_term = rng.random_range(0.0..50.0);
            let exact = solve_closed_form(&prob).unwrap();
            let approx = solve_numeric_oracle(&prob, 1e-13).unwrap();
            let gap = (approx.cost - exact.cost) / exact.cost;
            assert!(gap.abs() < 1e-6, "gap {gap} for {coeffs:?}");
        }
    }

    #[test]
    fn simplex_projection_basics() {
        let mut v = vec![0.2, 0.3, 0.5];
        project_to_simplex(&mut v);
        assert!((v[0] - 0.2).abs() < 1e-15 && (v[2] - 0.5).abs() < 1e-15);
        let mut v = vec![2.0, 0.0];
        project_to_simplex(&mut v);
        assert_eq!(v, vec![1.0, 0.0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        fn random_problem() -> impl Strategy<Value = AllocProblem> {
            (1usize..8).prop_flat_map(|n| {
                (
                    prop::collection::vec(-10.0f64..30.0, n),
                    -10.0f64..30.0,
                    prop::collection::vec(any::<bool>(), n),
                    0.0f64..=1.0,
                )
                    .prop_map(move |(snr1, snr2, x, lambda)| {
                        let mut p = SystemParams::with_n_st(n);
                        p.lambda = lambda;
                        let h_st = snr1.iter().map(|db| 10f64.powf(db / 10.0) * p.noise).collect();
                        let h_tc = 10f64.powf(snr2 / 10.0) * p.noise / p.p_sat;
                        let ch = ChannelState::new(h_st, h_tc, 0).unwrap();
                        build_problem(&p, &ch, &x).unwrap()
                    })
            })
        }

        proptest! {
            #[test]
            fn kkt_and_feasibility(prob in random_problem()) {
                let sol = solve_closed_form(&prob).unwrap();
                let total: f64 = sol.alpha.iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
                for j in 0..2 * prob.n_st {
                    if !prob.active.contains(&j) {
                        prop_assert_eq!(sol.alpha[j], 0.0);
                    }
                }
                let marg: Vec<f64> = prob.active.iter().zip(&prob.coeffs)
                    .map(|(&j, c)| c / (sol.alpha[j] * sol.alpha[j])).collect();
                let hi = marg.iter().cloned().fold(f64::MIN, f64::max);
                let lo = marg.iter().cloned().fold(f64::MAX, f64::min);
                prop_assert!((hi - lo) / hi < 1e-6);
                // alpha_j proportional to sqrt(c_j)
                let r0 = sol.alpha[prob.active[0]] / prob.coeffs[0].sqrt();
                for (&j, c) in prob.active.iter().zip(&prob.coeffs) {
                    prop_assert!((sol.alpha[j] / c.sqrt() - r0).abs() <= 1e-9 * r0);
                }
                prop_assert!((prob.cost_at(&sol.alpha) - sol.cost).abs() <= 1e-9 * sol.cost);
            }

            #[test]
            fn perturbations_never_improve(prob in random_problem(), seed in any::<u64>()) {
                let sol = solve_closed_form(&prob).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..100 {
                    let mut alt = sol.alpha.clone();
                    for &j in &prob.active {
                        alt[j] *= rng.random_range(0.5..1.5);
                    }
                    let s: f64 = alt.iter().sum();
                    if s > 1.0 {
                        alt.iter_mut().for_each(|a| *a /= s);
                    }
                    prop_assert!(prob.cost_at(&alt) >= sol.cost * (1.0 - 1e-12));
                }
            }
        }
    }
}
