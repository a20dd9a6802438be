use gridgame_core::model::{demand_threshold, discretize_gaussian, price_fairness, step_storage, GenPmf, ProsumerSpec};
use gridgame_core::prospect::ProspectParams;
use proptest::prelude::*;

fn density(x: f64, mu: f64, sigma2: f64) -> f64 {
    (-(x - mu) * (x - mu) / (2.0 * sigma2)).exp() / (2.0 * std::f64::consts::PI * sigma2).sqrt()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn gaussian_bins_match_quadrature() {
    for (mu, sigma2) in [(0.5, 2.0), (1.0, 1.0), (0.0, 0.3), (-1.5, 4.0)] {
        let pmf = discretize_gaussian(mu, sigma2, 10).unwrap();
        let mut interior = 0.0;
        for k in -9..=9 {
            let q = simpson(|x| density(x, mu, sigma2), k as f64 - 0.5, k as f64 + 0.5, 400);
            interior += q;
            assert!((pmf.prob(k) - q).abs() < 1e-10, "mu {mu} sigma2 {sigma2} k {k}: {} vs {q}", pmf.prob(k));
        }
        let lower = simpson(|x| density(x, mu, sigma2), mu - 40.0, -9.5, 20_000);
        assert!((pmf.prob(-10) - lower).abs() < 1e-10);
        assert!((pmf.prob(10) - (1.0 - interior - lower)).abs() < 1e-9);
        assert!((pmf.atoms().iter().map(|a| a.1).sum::<f64>() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn lambda_of_the_three_prosumer_instance() {
    let lambdas: Vec<f64> = [(0.5, 2.0), (0.5, 1.0), (1.0, 1.0)]
        .iter()
        .map(|&(mu, s2)| discretize_gaussian(mu, s2, 10).unwrap().lambda(2))
        .collect();
    // The smallest bin is the far left one of N(1, 1): P(-2.5 < X < -1.5).
    let q = simpson(|x| density(x, 1.0, 1.0), -2.5, -1.5, 400);
    approx::assert_abs_diff_eq!(lambdas[2], q, epsilon = 1e-12);
    assert!(lambdas[2] < lambdas[0] && lambdas[2] < lambdas[1]);
}

/// Probability of landing in each storage level, written out case by case.
fn kernel_oracle(pmf: &GenPmf, s_max: i64, s: i64, d: i64, l: i64, x: i64) -> f64 {
    let shift = s + d - l;
    pmf.atoms()
        .iter()
        .filter(|&&(g, _)| {
            let y = g + shift;
            if x == 0 {
                y <= 0
            } else if x == s_max {
                y >= s_max
            } else {
                y == x
            }
        })
        .map(|a| a.1)
        .sum()
}

#[test]
fn kernel_matches_case_analysis() {
    for (s_max, l_max, tau, mu, s2) in [(2u32, 1u32, 1u32, 0.5, 2.0), (3, 2, 2, 0.0, 2.0), (4, 2, 0, 1.0, 0.5)] {
        let pmf = discretize_gaussian(mu, s2, 10).unwrap();
        let spec = ProsumerSpec::threshold(1, s_max, l_max, tau, pmf.clone(), ProspectParams::Eut);
        let space = spec.action_space();
        let k = spec.build_kernel().unwrap();
        for s in 0..=s_max {
            for a in 0..space.n_actions() {
                let act = space.action(s, a);
                for x in 0..=s_max {
                    let want = kernel_oracle(&pmf, s_max as i64, s as i64, act.demand as i64, act.consume as i64, x as i64);
                    assert!((k.prob(x as usize, a, s as usize) - want).abs() < 1e-15);
                }
            }
        }
    }
}

#[test]
fn fairness_prices() {
    let p = price_fairness(&[1, 3, 0], 2.0);
    assert_eq!(p, vec![0.5, 1.5, 0.0]);
    assert_eq!(price_fairness(&[0, 0], 1.0), vec![0.0, 0.0]);
}

proptest! {
    #[test]
    fn storage_stays_in_range(s in 0i64..6, g in -10i64..=10, d in 0i64..8, l in 0i64..4, s_max in 1i64..6) {
        let x = step_storage(s.min(s_max), g, d, l, s_max);
        prop_assert!((0..=s_max).contains(&x));
    }

    #[test]
    fn threshold_demand_restores_the_threshold(tau in 0u32..5, l in 0u32..4, s in 0u32..8) {
        let d = demand_threshold(tau, l, s, u32::MAX);
        prop_assert_eq!(s as i64 + d as i64 - l as i64, (tau as i64).max(s as i64 - l as i64));
    }

    #[test]
    fn prices_sum_to_alpha(ds in prop::collection::vec(0u32..10, 1..8), alpha in 0.1f64..5.0) {
        let p = price_fairness(&ds, alpha);
        let total: f64 = p.iter().sum();
        if ds.iter().any(|&d| d > 0) {
            prop_assert!((total - alpha).abs() < 1e-12);
        } else {
            prop_assert_eq!(total, 0.0);
        }
    }
}
