mod common;

use common::canonical;
use refund_core::badnews::consumption_belief;
use refund_core::learning::{ex_ante_utility, quitting_belief, trial_belief, value_v0};
use refund_core::mechanism::{implementing_mechanism, RefundMechanism};
use refund_core::oracle::*;
use refund_core::Execution;

#[test]
fn dp_error_halves_with_step() {
    let p = canonical();
    let m = RefundMechanism::no_return(0.5);
    let mu0 = 0.4;
    let exact = value_v0(mu0, 0.5, &p).unwrap().value;
    let cfg = SimConfig {
        dt: 0.02,
        grid_n: 200_000,
        ..SimConfig::default()
    };
    let pts = dp_convergence(&m, mu0, &p, &cfg, exact, 3, Execution::default()).unwrap();
    for w in pts.windows(2) {
        let ratio = w[0].error / w[1].error;
        assert!((ratio - 2.0).abs() < 0.1, "{pts:?}");
    }
}

#[test]
fn no_learning_policy_earns_price() {
    let p = canonical();
    let m = RefundMechanism::free_return(0.4);
    let cfg = SimConfig {
        n_paths: 1000,
        ..SimConfig::default()
    };
    let r = simulate_paths(&m, 0.5, 0.5, &p, &cfg, Execution::default()).unwrap();
    assert_eq!(r.revenue.mean, 0.4);
    assert_eq!(r.revenue.se, 0.0);
    assert_eq!(r.return_rate.mean, 0.0);
}

#[test]
fn simulated_buyer_value_matches_ex_ante_utility() {
    let p = canonical();
    let m = RefundMechanism::free_return(0.5);
    let e = path_expectations(&m, 0.25, 0.5, &p).unwrap();
    let u = ex_ante_utility(0.25, 0.5, 0.5, &p).unwrap();
    assert!((e.buyer_value - u).abs() < 1e-14);
    assert!((u - 0.078403).abs() < 1e-6);
    let cfg = SimConfig {
        n_paths: 100_000,
        seed: 11,
        ..SimConfig::default()
    };
    let r = simulate_paths(&m, 0.25, 0.5, &p, &cfg, Execution::default()).unwrap();
    assert!(r.buyer_value.covers(u, 3.0), "{:?} vs {u}", r.buyer_value);
    assert!(r.learning_cost.covers(e.learning_cost, 3.0));
}

#[test]
fn coverage_across_seeds() {
    let p = canonical();
    let (beta, t_b, mu0) = (0.3, 0.55, 0.5);
    let m = implementing_mechanism(beta, t_b, &p).unwrap();
    let e = path_expectations(&m, beta, mu0, &p).unwrap();
    let (mut rev_hits, mut rate_hits) = (0, 0);
    for seed in 0..50 {
        let cfg = SimConfig {
            n_paths: 4000,
            seed,
            ..SimConfig::default()
        };
        let r = simulate_paths(&m, beta, mu0, &p, &cfg, Execution::default()).unwrap();
        rev_hits += r.revenue.covers(e.revenue, 3.0) as usize;
        rate_hits += r.return_rate.covers(e.return_rate, 3.0) as usize;
    }
    assert!(rev_hits >= 45 && rate_hits >= 45, "{rev_hits} {rate_hits}");
}

#[test]
fn sequential_and_parallel_agree_exactly() {
    let p = canonical();
    let m = implementing_mechanism(0.35, 0.6, &p).unwrap();
    let cfg = SimConfig {
        n_paths: 20_000,
        seed: 7,
        ..SimConfig::default()
    };
    let a = simulate_paths(&m, 0.35, 0.5, &p, &cfg, Execution::Sequential).unwrap();
    let b = simulate_paths(&m, 0.35, 0.5, &p, &cfg, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    let c = simulate_paths(&m, 0.35, 0.5, &p, &cfg, Execution::Parallel).unwrap();
    assert_eq!(b, c);
    let other = SimConfig { seed: 8, ..cfg };
    let d = simulate_paths(&m, 0.35, 0.5, &p, &other, Execution::Parallel).unwrap();
    assert_ne!(a.revenue.mean, d.revenue.mean);
}

#[test]
fn no_return_buyer_walks_at_quitting_belief() {
    let p = canonical();
    for t_b in [0.4, 0.5, 0.6] {
        let m = RefundMechanism::no_return(t_b);
        let q = quitting_belief(t_b, &p).unwrap();
        let mu0 = 0.5 * (q + trial_belief(t_b, &p).unwrap());
        let r = dp_best_response(&m, mu0, &p, &SimConfig::default()).unwrap();
        assert_eq!(r.stop_action, Action::Walk);
        assert!((r.stop_belief - q).abs() <= r.cell, "{t_b}: {r:?}");
    }
}

#[test]
fn badnews_dp_matches_consumption_belief() {
    let p = canonical();
    for t_b in [0.3, 0.5] {
        let m = RefundMechanism::free_return(t_b);
        let r = dp_best_response_badnews(&m, 0.4, &p, &SimConfig::default()).unwrap();
        let target = consumption_belief(t_b, &p).unwrap();
        assert_eq!(r.stop_action, Action::Keep);
        assert!(
            (r.stop_belief - target).abs() <= r.cell * (1.0 + 1e-9),
            "{t_b}: {r:?}"
        );
        assert!(r.value_at_prior >= 0.0);
    }
}
