mod common;

use common::{canonical, hand_value, log_odds, rk4_values, simpson};
use proptest::prelude::*;
use refund_core::learning::*;
use refund_core::numeric::linspace;
use refund_core::ModelParams;

#[test]
fn belief_path_matches_rk4_of_drift() {
    // mu' = -lambda mu (1 - mu), integrated with small RK4 steps.
    let f = |mu: f64| -mu * (1.0 - mu);
    let (mut mu, h) = (0.5, 1e-4);
    let steps = (2f64.ln() / h).round() as usize;
    for _ in 0..steps {
        let k1 = f(mu);
        let k2 = f(mu + h / 2.0 * k1);
        let k3 = f(mu + h / 2.0 * k2);
        let k4 = f(mu + h * k3);
        mu += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    let tau = steps as f64 * h;
    assert!((belief_path(0.5, tau, 1.0).unwrap() - mu).abs() < 1e-12);
    assert!((mu - 1.0 / 3.0).abs() < 1e-4);
}

#[test]
fn cost_identity_against_quadrature() {
    let p = canonical();
    let mc = |mu: f64| marginal_cost(mu, &p).unwrap();
    let area = simpson(&mc, 0.2, 0.8, 1e-13);
    assert!((area - 0.1 * (4f64.ln() - 0.25f64.ln())).abs() < 1e-10);
    let t0 = time_to_belief(0.8, 0.2, 1.0).unwrap();
    assert!((p.k * t0 - area).abs() < 1e-10);
    assert!((time_to_belief(0.8, 0.2, 2.0).unwrap() - 4f64.ln()).abs() < 1e-14);
}

#[test]
fn closed_form_matches_ode_at_example() {
    let p = canonical();
    let v = rk4_values(0.2, 0.0, &[0.4], 0.5, &p, 1e-4)[0];
    let closed = value_v0(0.4, 0.5, &p).unwrap().value;
    assert!((closed - v).abs() < 1e-6);
    assert!((closed - hand_value(0.4, 0.5, &p)).abs() < 1e-15);
}

#[test]
fn closed_form_matches_ode_across_region() {
    let p = canonical();
    let r = learning_region(&p).unwrap();
    for t in linspace(r.price_low, r.price_high, 7)
        .into_iter()
        .skip(1)
        .take(5)
    {
        let q = quitting_belief(t, &p).unwrap();
        let big_q = trial_belief(t, &p).unwrap();
        let pts = linspace(q + 1e-4, big_q, 300);
        let ode = rk4_values(q, 0.0, &pts, t, &p, 1e-4);
        for (mu, y) in pts.iter().zip(ode) {
            let closed = value_v0(*mu, t, &p).unwrap().value;
            assert!((closed - y).abs() < 1e-6, "t={t} mu={mu}: {closed} vs {y}");
        }
    }
}

#[test]
fn region_examples() {
    let r = learning_region(&canonical()).unwrap();
    assert!((r.mu_low - 0.112702).abs() < 1e-6);
    assert!((r.mu_high - 0.887298).abs() < 1e-6);
    let p2 = ModelParams::new(1.0, 0.2, 1.0).unwrap();
    let r2 = learning_region(&p2).unwrap();
    assert!((r2.mu_low - 0.27639).abs() < 1e-5);
    assert!((r2.mu_high - 0.72361).abs() < 1e-5);
    let tight = ModelParams::new(1.0, 0.25 - 1e-10, 1.0).unwrap();
    let rt = learning_region(&tight).unwrap();
    assert!((rt.mu_low - 0.5).abs() < 1e-4 && (rt.mu_high - 0.5).abs() < 1e-4);
    // Cutoffs coincide at the lowest price.
    let p = canonical();
    let q = quitting_belief(r.price_low, &p).unwrap();
    let big_q = trial_belief(r.price_low, &p).unwrap();
    assert!((q - r.mu_low).abs() < 1e-9 && (big_q - r.mu_low).abs() < 1e-6);
}

#[test]
fn trial_belief_examples() {
    let p = canonical();
    let t_half = trial_belief_inverse(0.5, &p).unwrap();
    assert!((trial_belief(t_half, &p).unwrap() - 0.5).abs() < 1e-9);
    let big_q = trial_belief(0.5, &p).unwrap();
    let q = quitting_belief(0.5, &p).unwrap();
    let c = p.k / p.lambda;
    let lhs = -1.0 / q + log_odds(q);
    let rhs = 1.0 / (1.0 - big_q) + log_odds(big_q) - p.v / c;
    assert!((lhs - rhs).abs() < 1e-8);
    let vp = value_v0(big_q, 0.5, &p).unwrap();
    assert!((vp.value - (big_q - 0.5)).abs() < 1e-10);
    assert!(trial_belief(0.95, &p).is_err());
}

#[test]
fn round_trips_over_region() {
    let p = canonical();
    let r = learning_region(&p).unwrap();
    for mu in linspace(r.mu_low, r.mu_high, 41)
        .into_iter()
        .skip(1)
        .take(39)
    {
        let t = quitting_belief_inverse(mu, &p).unwrap();
        assert!((quitting_belief(t, &p).unwrap() - mu).abs() < 1e-9);
        let t = trial_belief_inverse(mu, &p).unwrap();
        assert!((trial_belief(t, &p).unwrap() - mu).abs() < 1e-9, "mu={mu}");
    }
}

#[test]
fn smooth_pasting_at_quitting_belief() {
    let p = canonical();
    let q = quitting_belief(0.5, &p).unwrap();
    let mut prev = f64::INFINITY;
    for eps in [1e-2, 1e-3, 1e-4, 1e-5] {
        let slope =
            (value_v0(q + eps, 0.5, &p).unwrap().value - value_v0(q, 0.5, &p).unwrap().value) / eps;
        assert!(slope.abs() < prev);
        prev = slope.abs();
    }
    assert!(prev < 1e-4);
}

#[test]
fn slope_matches_ode_rearrangement() {
    let p = canonical();
    for (mu, t) in [(0.3, 0.5), (0.45, 0.6), (0.25, 0.4)] {
        let vp = value_v0(mu, t, &p).unwrap();
        let ode = common::ode_slope(mu, vp.value, t, &p);
        assert!((vp.slope - ode).abs() < 1e-12);
    }
}

#[test]
fn ex_ante_utility_example_and_maximizer() {
    let p = canonical();
    let u = ex_ante_utility(0.25, 0.5, 0.5, &p).unwrap();
    let hand = 0.5 * (2.0 / 3.0) * 0.5 - 0.5 * 0.1 * (2.0 / 3.0) - 0.5 * 0.1 * 3f64.ln();
    assert!((u - hand).abs() < 1e-14);
    assert!((u - 0.078403).abs() < 1e-6);
    assert_eq!(ex_ante_utility(0.5, 0.5, 0.5, &p).unwrap(), 0.0);

    let q = quitting_belief(0.5, &p).unwrap();
    let at_q = ex_ante_utility(q, 0.5, 0.5, &p).unwrap();
    for beta in linspace(0.01, 0.5, 500) {
        assert!(ex_ante_utility(beta, 0.5, 0.5, &p).unwrap() <= at_q + 1e-15);
    }
}

#[test]
fn cutoffs_increase_in_price() {
    let p = canonical();
    let r = learning_region(&p).unwrap();
    let prices = linspace(r.price_low, r.price_high, 50);
    let qs: Vec<f64> = prices
        .iter()
        .map(|&t| quitting_belief(t, &p).unwrap())
        .collect();
    let big: Vec<f64> = prices
        .iter()
        .map(|&t| trial_belief(t, &p).unwrap())
        .collect();
    assert!(qs.windows(2).all(|w| w[1] > w[0]));
    assert!(big.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn value_outside_region_is_piecewise_linear() {
    let p = canonical();
    for (mu, t) in [(0.05, 0.01), (0.95, 0.93), (0.5, 0.95)] {
        let vp = value_v0(mu, t, &p).unwrap();
        assert_eq!(vp.value, (mu * p.v - t).max(0.0));
    }
    assert_eq!(value_v0(1.0, 0.5, &p).unwrap().value, 0.5);
}

fn params_strategy() -> impl Strategy<Value = ModelParams> {
    (0.5f64..3.0, 0.05f64..0.95, 0.3f64..4.0)
        .prop_map(|(v, frac, lambda)| ModelParams::new(v, frac * lambda * v / 4.0, lambda).unwrap())
}

proptest! {
    #[test]
    fn prop_v0_continuous_nondecreasing_with_boundary_conditions(
        p in params_strategy(),
        price_frac in 0.02f64..0.98,
    ) {
        let r = learning_region(&p).unwrap();
        let t = r.price_low + price_frac * (r.price_high - r.price_low);
        let prof = ValueProfile::new(t, &p).unwrap();
        let (q, big_q) = prof.cutoffs.unwrap();
        let at_q = prof.eval(q);
        prop_assert!(at_q.value.abs() < 1e-12 && at_q.slope.abs() < 1e-9);
        let at_big = prof.eval(big_q);
        prop_assert!((at_big.value - (big_q * p.v - t)).abs() < 1e-9);
        let mut prev = 0.0;
        for mu in linspace(q, 1.0, 200) {
            let val = prof.eval(mu).value;
            prop_assert!(val >= prev - 1e-12);
            prop_assert!(val - prev < p.v * (1.0 - q) / 199.0 + 1e-9);
            prev = val;
        }
    }

    #[test]
    fn prop_cost_identity(p in params_strategy(), a in 0.02f64..0.98, b in 0.02f64..0.98) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let t0 = time_to_belief(hi, lo, p.lambda).unwrap();
        let integral = information_cost(lo, hi, p.k, p.lambda);
        prop_assert!((p.k * t0 - integral).abs() < 1e-10);
        let path = belief_path(hi, t0, p.lambda).unwrap();
        prop_assert!((path - lo).abs() < 1e-10);
    }

    #[test]
    fn prop_utility_at_quitting_belief_is_v0(
        p in params_strategy(),
        price_frac in 0.02f64..0.98,
        prior_frac in 0.0f64..1.0,
    ) {
        let r = learning_region(&p).unwrap();
        let t = r.price_low + price_frac * (r.price_high - r.price_low);
        let q = quitting_belief(t, &p).unwrap();
        let big_q = trial_belief(t, &p).unwrap();
        let mu0 = q + prior_frac * (big_q - q);
        prop_assume!(mu0 > q && mu0 < 1.0);
        let u = ex_ante_utility(q, mu0, t, &p).unwrap();
        let v0 = value_v0(mu0, t, &p).unwrap().value;
        prop_assert!((u - v0).abs() < 1e-10, "{} vs {}", u, v0);
    }

    #[test]
    fn prop_marginal_cost_symmetric(p in params_strategy(), mu in 0.001f64..0.999) {
        let a = marginal_cost(mu, &p).unwrap();
        let b = marginal_cost(1.0 - mu, &p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }
}
