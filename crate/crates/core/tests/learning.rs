mod common;

use common::{pt08, random_policies, three_prosumers};
use gridgame_core::learning::{
    certify_epsilon_ne, compute_horizon, deviation_gaps, estimate_payoffs, estimation_error, learn_equilibrium,
    weight_modulus, EstimationMode, HorizonInputs, LearningConfig, PeriodSchedule, SlotRole,
};
use gridgame_core::mdp::{
    best_response_lp, occupation_of, policy_from_occupation, prospect_reward, stationary_distribution,
    RewardEstimator, StationaryDistribution,
};
use gridgame_core::prospect::ProspectParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn estimates_converge_to_stationary_values() {
    let market = three_prosumers(pt08());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..5 {
        let policies = random_policies(&market, &mut rng);
        let errs: Vec<f64> = [5, 30, 300, 3000]
            .iter()
            .map(|&t| estimation_error(&market, &policies, t, EstimationMode::ExactPropagation, 0, 0).unwrap())
            .collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1]);
        assert!(errs[3] < 1e-3, "{errs:?}");
    }
}

#[test]
fn trajectory_estimates_are_unbiased_in_the_long_run() {
    let market = three_prosumers(ProspectParams::Eut);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let policies = random_policies(&market, &mut rng);
    let exact = estimate_payoffs(&market, &policies, 20_000, EstimationMode::ExactPropagation, 0, 0).unwrap();
    let sampled = estimate_payoffs(&market, &policies, 20_000, EstimationMode::TrajectorySampling, 0, 9).unwrap();
    for (a, b) in exact.iter().zip(&sampled) {
        assert!((a - b).abs() < 0.05, "{a} vs {b}");
    }
}

#[test]
fn best_responding_prosumer_has_no_gap() {
    let market = three_prosumers(pt08());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut policies = random_policies(&market, &mut rng);
    let dists: Vec<StationaryDistribution> = policies
        .iter()
        .zip(market.prosumers())
        .map(|(p, pro)| stationary_distribution(p, pro.kernel()).unwrap())
        .collect();
    let pro = market.prosumer(1);
    let k = prospect_reward(&market, 1, &policies, &dists, pro.behavior(), &RewardEstimator::default()).unwrap();
    policies[1] = policy_from_occupation(&best_response_lp(&k, pro.kernel()).unwrap());
    let gaps = deviation_gaps(&market, &policies, &RewardEstimator::default()).unwrap();
    assert!(gaps[1].abs() < 1e-10);
    assert!(gaps.iter().all(|g| *g >= -1e-10));
    let own = occupation_of(&policies[1], pro.kernel()).unwrap();
    assert!(own.balance_residual(pro.kernel()) < 1e-12);

    let cert = certify_epsilon_ne(&market, &policies, 0.01, 0.0).unwrap();
    assert_eq!(cert.holds, cert.worst_gap <= 0.03);
    assert_eq!(cert.threshold, 0.03);
}

#[test]
fn horizon_formula() {
    let h = HorizonInputs {
        epsilon: 0.1,
        delta: 0.5,
        lambda: 0.5,
        n_players: 1,
        joint_states: 2.0,
        joint_actions: 2.0,
        delta1: 1.0,
        delta2: 1.0,
    };
    // T0 = ln(0.1)/ln(0.5) = 3.3219..., T = ceil(3 * T0 * 4 / 0.1).
    let t0 = 0.1f64.ln() / 0.5f64.ln();
    assert_eq!(compute_horizon(&h).unwrap(), (120.0 * t0).ceil() as u64);
    assert!(compute_horizon(&HorizonInputs { lambda: 0.0, ..h }).is_err());
}

#[test]
fn weight_modulus_controls_the_weighting_function() {
    let params = pt08();
    let eps = 0.01;
    let delta = weight_modulus(&params, eps);
    assert!(delta > 0.0 && delta < eps);
    assert_eq!(weight_modulus(&ProspectParams::Eut, eps), eps);
    let mut worst: f64 = 0.0;
    for j in 0..=100_000 {
        let p = j as f64 / 100_000.0 * (1.0 - delta);
        worst = worst.max(params.weight_clamped(p + delta) - params.weight_clamped(p));
    }
    assert!(worst <= eps + 1e-9, "{worst}");
    // Slightly larger steps break the bound somewhere near zero.
    let wider = delta * 1.05;
    let broken = (0..=100_000).any(|j| {
        let p = j as f64 / 100_000.0 * 0.01;
        params.weight_clamped(p + wider) - params.weight_clamped(p) > eps
    });
    assert!(broken);
}

#[test]
fn schedule_roles() {
    let s = PeriodSchedule::new(vec![2, 3]).unwrap();
    assert_eq!(s.r(), 3);
    assert_eq!(s.slot_count(), 7);
    assert_eq!(s.period_length(10), 70);
    assert_eq!(s.role(0), SlotRole::Sample { prosumer: 0, vertex: 0 });
    assert_eq!(s.role(1), SlotRole::Sample { prosumer: 0, vertex: 1 });
    assert_eq!(s.role(2), SlotRole::Surplus { prosumer: 0 });
    assert_eq!(s.role(5), SlotRole::Sample { prosumer: 1, vertex: 2 });
    assert_eq!(s.role(6), SlotRole::Base);
}

#[test]
fn learning_is_deterministic_and_traces_every_period() {
    let market = three_prosumers(pt08());
    let cfg = LearningConfig { tail_periods: 2, ..LearningConfig::new(0.01, 5, 4, 21) };
    let a = learn_equilibrium(&market, &cfg).unwrap();
    let b = learn_equilibrium(&market, &cfg).unwrap();
    assert_eq!(a.trace.len(), b.trace.len());
    for (x, y) in a.trace.iter().zip(&b.trace) {
        assert_eq!(x.outcome.v_hat, y.outcome.v_hat);
    }
    assert_eq!(a.periods_used, 4);
    assert!(!a.converged);
    assert_eq!(a.vertex_counts, vec![8, 8, 8]);
}

#[test]
fn loose_epsilon_terminates_with_a_certificate() {
    let market = three_prosumers(pt08());
    let mut cfg = LearningConfig::new(0.2, 30, 500, 1);
    cfg.tail_periods = 3;
    let res = learn_equilibrium(&market, &cfg).unwrap();
    assert!(res.converged, "no termination within 500 periods");
    let frozen: Vec<_> = res.trace.iter().rev().take(3).collect();
    assert!(frozen.iter().all(|r| !r.resampled && r.policies == res.final_policies));
    let err = (0..20)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(k);
            estimation_error(&market, &random_policies(&market, &mut rng), 30, EstimationMode::ExactPropagation, 0, 0)
                .unwrap()
        })
        .fold(0.0, f64::max);
    let cert = certify_epsilon_ne(&market, &res.final_policies, 0.2, 2.0 * err).unwrap();
    assert!(cert.holds, "{cert:?}");
}
