mod common;

use drto_core::agent::{AgentConfig, DrtoAgent};
use drto_core::baselines::{coordinate_descent, enumerate_optimal, pure_fixed, BaselineKind};
use drto_core::channel::{ChannelConfig, ChannelSim};
use drto_core::nn::{policy_dims, Mlp};
use drto_core::system::SystemParams;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn agent_approaches_enumeration_on_three_sts() {
    let params = SystemParams::with_n_st(3);
    let mut sim = ChannelSim::new(&ChannelConfig::default(), &params, 5).unwrap();
    let mut agent = DrtoAgent::new(3, AgentConfig::default(), 64, sim.means().clone(), 5).unwrap();
    let (mut drto, mut best) = (0.0, 0.0);
    for t in 1..=6000 {
        let ch = sim.sample_frame(t);
        let rec = agent.step(&params, &ch, t).unwrap();
        let opt = enumerate_optimal(&params, &ch).unwrap().cost;
        assert!(rec.decision.cost >= opt * (1.0 - 1e-12));
        if t > 5000 {
            drto += rec.decision.cost;
            best += opt;
        }
    }
    assert!(drto / best < 1.02, "ratio {}", drto / best);
    assert!(agent.quantizer().k_current() <= 3);
}

#[test]
fn gradients_of_policy_sized_net_match_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dims = [4, 12, 8, 3];
    assert_eq!(policy_dims(3)[0], 4);
    let net = Mlp::random(&dims, 0.3, &mut rng).unwrap();
    let inputs = vec![vec![1.0, 0.5, 2.0, 0.1], vec![0.3, 1.7, 0.9, 1.2]];
    let labels = vec![vec![1.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]];
    let err = common::max_gradient_error(&net, &inputs, &labels, 1e-5);
    assert!(err < 1e-4, "{err}");
}

#[test]
fn grid_oracle_agrees_with_enumeration_on_single_st() {
    let params = SystemParams::with_n_st(1);
    let mut sim = ChannelSim::new(&ChannelConfig::default(), &params, 2).unwrap();
    for t in 1..=5 {
        let ch = sim.sample_frame(t);
        let exact = enumerate_optimal(&params, &ch).unwrap().cost;
        let grid = common::grid_brute_force(&params, &ch, 1000);
        assert!(grid >= exact * (1.0 - 1e-12));
        assert!(grid <= exact * 1.005);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn framewise_ordering_chain(seed in any::<u64>(), n in 1usize..=6, lambda in 0.0f64..=1.0) {
        let mut params = SystemParams::with_n_st(n);
        params.lambda = lambda;
        let mut sim = ChannelSim::new(&ChannelConfig::default(), &params, seed).unwrap();
        let ch = sim.sample_frame(1);
        let en = enumerate_optimal(&params, &ch).unwrap().cost;
        let cd = coordinate_descent(&params, &ch).unwrap().decision.cost;
        let tc = pure_fixed(&params, &ch, BaselineKind::PureTc).unwrap().cost;
        let sat = pure_fixed(&params, &ch, BaselineKind::PureSat).unwrap().cost;
        let hi = tc.max(sat) * (1.0 + 1e-12);
        prop_assert!(en <= cd * (1.0 + 1e-12));
        prop_assert!(cd <= hi);
        prop_assert!(en <= tc.min(sat) * (1.0 + 1e-12));
    }

    #[test]
    fn quantizer_matches_reference(x in prop::collection::vec(0.001f64..0.999, 1..=10), k_frac in 0.0f64..1.0) {
        let k = 1 + ((x.len() as f64 - 1.0) * k_frac).round() as usize;
        let got = drto_core::quantizer::quantize(&x, k).unwrap();
        prop_assert_eq!(&got, &common::quantize_ref(&x, k));
        for c in &got {
            prop_assert!(common::preserves_order(&x, c));
        }
    }
}
