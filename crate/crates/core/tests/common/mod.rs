//! Independent reference implementations used by the integration and
//! acceptance tests. None of them call the code paths they check.

#![allow(dead_code)]

use drto_core::nn::Mlp;
use drto_core::system::{cost_sat_path, cost_tc_path, ChannelState, PathCost, SystemParams};

/// Direct transcription of the candidate rules: candidate 1 rounds at 0.5
/// (0.5 itself goes to 0), candidate k pivots on the (k-1)-th entry closest
/// to 0.5, ties in distance broken by ST index.
pub fn quantize_ref(x_hat: &[f64], k: usize) -> Vec<Vec<bool>> {
    let mut out = vec![x_hat.iter().map(|&v| v > 0.5).collect::<Vec<bool>>()];
    let mut order: Vec<usize> = (0..x_hat.len()).collect();
    order.sort_by(|&a, &b| {
        let da = (x_hat[a] - 0.5).abs();
        let db = (x_hat[b] - 0.5).abs();
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    for j in 1..k {
        let pivot = x_hat[order[j - 1]];
        out.push(
            x_hat
                .iter()
                .map(|&v| {
                    if v > pivot {
                        true
                    } else if v == pivot {
                        pivot <= 0.5
                    } else {
                        false
                    }
                })
                .collect(),
        );
    }
    out
}

/// `K_t` for `t = 1..=k_stars.len()` given the winning index of every frame.
/// `K_1 = N`; at `t mod delta == 0`, `K_t = min(max(k*_{t-delta..t-1}) + 1, N)`
/// over the frames that exist; otherwise `K_t = K_{t-1}`.
pub fn k_schedule_ref(n: usize, delta: usize, k_stars: &[usize]) -> Vec<usize> {
    let mut ks = Vec::with_capacity(k_stars.len());
    for t in 1..=k_stars.len() {
        let k = if t == 1 {
            n
        } else if t % delta == 0 {
            let lo = t.saturating_sub(delta).max(1);
            let window = &k_stars[lo - 1..t - 1];
            (window.iter().copied().max().unwrap() + 1).min(n)
        } else {
            ks[t - 2]
        };
        ks.push(k);
    }
    ks
}

fn weighted(params: &SystemParams, c: PathCost) -> f64 {
    params.lambda * c.latency + (1.0 - params.lambda) * c.energy
}

/// Minimum cost over all placements and all bandwidth splits on a grid of
/// `1/units`, by dynamic programming over STs. Every link gets at least one
/// grid unit; the budget need not be fully used.
pub fn grid_brute_force(params: &SystemParams, channel: &ChannelState, units: usize) -> f64 {
    let share = |b: usize| b as f64 / units as f64;
    let mut best = vec![f64::INFINITY; units + 1];
    best[0] = 0.0;
    for st in 0..params.n_st {
        // cheapest cost of this ST using exactly b units
        let mut per_st = vec![f64::INFINITY; units + 1];
        for b in 1..=units {
            let sat = weighted(params, cost_sat_path(params, channel, st, share(b)).unwrap());
            per_st[b] = per_st[b].min(sat);
        }
        let tc_cost: Vec<(f64, f64)> = (1..=units)
            .map(|b| {
                let first = cost_tc_path(params, channel, st, share(b), 1.0).unwrap();
                let fwd_only = cost_tc_path(params, channel, st, 1.0, share(b)).unwrap();
                let base = cost_tc_path(params, channel, st, 1.0, 1.0).unwrap();
                // split the TC path cost into a 1st-hop part and a 2nd-hop part
                (weighted(params, first), weighted(params, fwd_only) - weighted(params, base))
            })
            .collect();
        for b1 in 1..units {
            for b2 in 1..=units - b1 {
                let c = tc_cost[b1 - 1].0 + tc_cost[b2 - 1].1;
                if c < per_st[b1 + b2] {
                    per_st[b1 + b2] = c;
                }
            }
        }
        let mut next = vec![f64::INFINITY; units + 1];
        for (used, &acc) in best.iter().enumerate() {
            if !acc.is_finite() {
                continue;
            }
            for b in 1..=units - used {
                let c = acc + per_st[b];
                if c < next[used + b] {
                    next[used + b] = c;
                }
            }
        }
        best = next;
    }
    best.into_iter().fold(f64::INFINITY, f64::min)
}

/// Largest relative deviation between backpropagated gradients and central
/// differences of the batch loss with step `h`.
pub fn max_gradient_error(net: &Mlp, inputs: &[Vec<f64>], labels: &[Vec<f64>], h: f64) -> f64 {
    let ins: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let outs: Vec<&[f64]> = labels.iter().map(Vec::as_slice).collect();
    let (_, grads) = net.loss_and_gradients(&ins, &outs).unwrap();
    let loss = |n: &Mlp| n.loss_and_gradients(&ins, &outs).unwrap().0;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-7);
    let mut worst: f64 = 0.0;
    for l in 0..net.layers().len() {
        for i in 0..net.layers()[l].weights.len() {
            let mut up = net.clone();
            up.layers_mut()[l].weights[i] += h;
            let mut down = net.clone();
            down.layers_mut()[l].weights[i] -= h;
            let numeric = (loss(&up) - loss(&down)) / (2.0 * h);
            worst = worst.max(rel(grads.weights[l][i], numeric));
        }
        for i in 0..net.layers()[l].biases.len() {
            let mut up = net.clone();
            up.layers_mut()[l].biases[i] += h;
            let mut down = net.clone();
            down.layers_mut()[l].biases[i] -= h;
            let numeric = (loss(&up) - loss(&down)) / (2.0 * h);
            worst = worst.max(rel(grads.biases[l][i], numeric));
        }
    }
    worst
}

/// Order-preservation check: `x_hat[n] <= x_hat[m]` implies
/// `candidate[n] <= candidate[m]`.
pub fn preserves_order(x_hat: &[f64], candidate: &[bool]) -> bool {
    (0..x_hat.len()).all(|n| (0..x_hat.len()).all(|m| !(x_hat[n] <= x_hat[m]) || candidate[n] <= candidate[m]))
}
