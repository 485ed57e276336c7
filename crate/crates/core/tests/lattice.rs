use claimlab::analytic::{bs_price, OptionKind, PriceSpec};
use claimlab::lattice::*;
use claimlab::Error;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn r(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

#[test]
fn series_bet_exact_values() {
    let expected = [r(100, 1), r(50, 1), r(75, 2), r(125, 4)];
    for (n, want) in expected.iter().enumerate() {
        assert_eq!(&world_series_bet(n as u32), want);
        assert_eq!(&world_series_tree_price(n as u32).unwrap(), want);
    }
}

#[test]
fn series_bet_matches_tree_for_longer_series() {
    for n in 4..=8 {
        assert_eq!(world_series_bet(n), world_series_tree_price(n).unwrap());
    }
}

#[test]
fn crr_converges_to_closed_form() {
    let spec = PriceSpec { spot: 100.0, strike: 100.0, rate: 0.05, sigma: 0.2, t: 0.0, maturity: 1.0 };
    let tree = BinomialTree::crr(100.0, 0.2, 0.05, 1.0, 1024).unwrap();
    for kind in [OptionKind::Call, OptionKind::Put] {
        let payoff = move |s: f64| kind.payoff(s, 100.0);
        let v = price_european(&tree, TreeClaim::Terminal(&payoff)).unwrap().value;
        let exact = bs_price(kind, &spec).unwrap();
        assert!((v - exact).abs() < 0.02, "{kind:?}: {v} vs {exact}");
    }
}

#[test]
fn american_call_never_exercised_early() {
    let tree = BinomialTree::crr(100.0, 0.25, 0.04, 1.0, 512).unwrap();
    let call = |s: f64| (s - 95.0f64).max(0.0);
    let put = |s: f64| (95.0 - s).max(0.0);
    let euro_call = price_european(&tree, TreeClaim::Terminal(&call)).unwrap().value;
    assert!((price_american(&tree, &call) - euro_call).abs() <= 1e-12);
    let euro_put = price_european(&tree, TreeClaim::Terminal(&put)).unwrap().value;
    assert!(price_american(&tree, &put) > euro_put + 1e-3);
}

#[test]
fn path_claim_ledger_replicates() {
    let tree = BinomialTree::crr(100.0, 0.3, 0.03, 1.0, 10).unwrap();
    let asian = |_: &[bool], prices: &[f64]| {
        let avg = prices.iter().sum::<f64>() / prices.len() as f64;
        (avg - 100.0).max(0.0)
    };
    let priced = price_european(&tree, TreeClaim::Path(&asian)).unwrap();
    assert_eq!(priced.ledger.indexing, NodeIndexing::Filtration);
    assert!(priced.ledger.replication_residual(&tree) < 1e-10);
    assert!(priced.ledger.self_financing_residual(&tree) < 1e-10);
    // A path claim depending only on the terminal price agrees with the recombining tree.
    let term = |_: &[bool], prices: &[f64]| (prices[prices.len() - 1] - 100.0).max(0.0);
    let call = |s: f64| (s - 100.0f64).max(0.0);
    let a = price_european(&tree, TreeClaim::Path(&term)).unwrap().value;
    let b = price_european(&tree, TreeClaim::Terminal(&call)).unwrap().value;
    assert!((a - b).abs() < 1e-12);
}

fn tree_strategy() -> impl Strategy<Value = (f64, f64, f64, f64, usize)> {
    (50.0..150.0f64, 1.01..1.3f64, 0.7..0.99f64, 0.0..0.08f64, 1usize..40)
        .prop_filter("band", |(_, u, d, r, n)| {
            let g = (r / *n as f64).exp();
            *d < g && g < *u
        })
}

proptest! {
    #[test]
    fn tower_law_and_replication((s0, u, d, rate, n) in tree_strategy(), k in 60.0..140.0f64) {
        let dt = 1.0 / n as f64;
        let tree = BinomialTree::from_multipliers(s0, u, d, rate, dt, n).unwrap();
        let payoff = move |s: f64| (s - k).max(0.0);
        let p = price_european(&tree, TreeClaim::Terminal(&payoff)).unwrap();
        // Value at the root is the discounted sum over terminal nodes of binomial weights.
        let q = tree.q(0, 0);
        let mut direct = 0.0;
        let mut w = (1.0 - q).powi(n as i32);
        for j in 0..=n {
            direct += w * payoff(tree.price(n, j));
            w *= (n - j) as f64 / (j + 1) as f64 * q / (1.0 - q);
        }
        direct *= tree.discount().powi(n as i32);
        prop_assert!((p.value - direct).abs() <= 1e-9 * (1.0 + direct));
        prop_assert!(p.ledger.replication_residual(&tree) <= 1e-9 * (1.0 + s0));
        prop_assert!(p.ledger.self_financing_residual(&tree) <= 1e-9);
    }

    #[test]
    fn tree_parity((s0, u, d, rate, n) in tree_strategy(), k in 60.0..140.0f64) {
        let dt = 1.0 / n as f64;
        let tree = BinomialTree::from_multipliers(s0, u, d, rate, dt, n).unwrap();
        let call = move |s: f64| (s - k).max(0.0);
        let put = move |s: f64| (k - s).max(0.0);
        let c = price_european(&tree, TreeClaim::Terminal(&call)).unwrap().value;
        let p = price_european(&tree, TreeClaim::Terminal(&put)).unwrap().value;
        prop_assert!((c - p - (s0 - k * (-rate).exp())).abs() <= 1e-9 * s0);
    }

    #[test]
    fn no_free_lunch_is_refused(s in 1.0..100.0f64, up in 0.5..2.0f64, rate in 0.0..0.1f64, dt in 0.01..1.0f64) {
        let grown = (rate * dt).exp();
        // Down-move at or above the forward makes the bond dominated.
        let res = risk_neutral_q(s, s * up.max(grown) * 1.1, s * grown, rate, dt);
        prop_assert!(matches!(res, Err(Error::Arbitrage(_))));
        let res = risk_neutral_q(s, s * up, s * up, rate, dt);
        prop_assert!(matches!(res, Err(Error::Arbitrage(_))));
    }

    #[test]
    fn numeraire_change_leaves_price((s0, u, d, rate, n) in tree_strategy(), k in 60.0..140.0f64, w in 0.1..5.0f64) {
        let dt = 1.0 / n as f64;
        let tree = BinomialTree::from_multipliers(s0, u, d, rate, dt, n).unwrap();
        let terminal: Vec<f64> = (0..=n).map(|j| w + tree.price(n, j)).collect();
        let numeraire = tradable_process(&tree, &terminal).unwrap();
        let payoff = move |s: f64| (k - s).max(0.0);
        let check = verify_numeraire_invariance(&tree, &payoff, &numeraire).unwrap();
        prop_assert!(check.discrepancy <= 1e-10 * (1.0 + check.bank_price));
    }
}
