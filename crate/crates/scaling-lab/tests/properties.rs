//! Property tests for the structural invariants of the acceptance class.

use proptest::prelude::*;

use scaling_lab::accept::{check_balance, BalancingFunction};
use scaling_lab::quad::{acceptance_rate, QuadratureSpec, Theta};

fn arb_builtin() -> impl Strategy<Value = BalancingFunction> {
    prop_oneof![
        Just(BalancingFunction::mh()),
        Just(BalancingFunction::barker()),
        (0.0..=1.0_f64).prop_map(|e| BalancingFunction::lazy(e).unwrap()),
        (1u32..=10).prop_map(|r| BalancingFunction::generalized_barker(r).unwrap()),
        (0.05..=8.0_f64).prop_map(|h| BalancingFunction::bedard(h).unwrap()),
    ]
}

fn arb_mix() -> impl Strategy<Value = BalancingFunction> {
    (arb_builtin(), arb_builtin(), 0.0..=1.0_f64).prop_map(|(a, b, w)| {
        BalancingFunction::mix(vec![(w, a), (1.0 - w, b)]).unwrap()
    })
}

fn arb_g() -> impl Strategy<Value = BalancingFunction> {
    prop_oneof![arb_builtin(), arb_mix()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// g(z) = z g(1/z) across fourteen orders of magnitude.
    #[test]
    fn balance_identity(g in arb_g(), log_z in -7.0..7.0_f64) {
        let z = 10f64.powf(log_z);
        let report = check_balance(&g, &[z], 1e-12).unwrap();
        prop_assert!(report.pass, "{}: violation {:e}", g, report.max_violation);
    }

    /// Range stays inside [0, 1] everywhere, including extreme arguments.
    #[test]
    fn range_bound(g in arb_g(), b in -700.0..700.0_f64) {
        let v = g.log_evaluate(b).unwrap();
        prop_assert!((0.0..=1.0).contains(&v), "{}: g(e^{}) = {}", g, b, v);
    }

    /// Log-scale evaluation agrees with the direct one wherever e^b exists.
    #[test]
    fn log_scale_consistency(g in arb_g(), b in -700.0..700.0_f64) {
        let direct = g.evaluate(b.exp()).unwrap();
        let logscale = g.log_evaluate(b).unwrap();
        prop_assert!((direct - logscale).abs() <= 1e-12, "{}: {} vs {}", g, direct, logscale);
    }

    /// Convexity: a mixture's value is the weighted value of its parts.
    #[test]
    fn mixture_is_pointwise_convex(
        a in arb_builtin(),
        b in arb_builtin(),
        w in 0.0..=1.0_f64,
        log_z in -7.0..7.0_f64,
    ) {
        let z = 10f64.powf(log_z);
        let m = BalancingFunction::mix(vec![(w, a.clone()), (1.0 - w, b.clone())]).unwrap();
        let expect = w * a.evaluate(z).unwrap() + (1.0 - w) * b.evaluate(z).unwrap();
        prop_assert!((m.evaluate(z).unwrap() - expect).abs() <= 1e-12);
    }

    /// The acceptance-rate integral stays a probability for any member.
    #[test]
    fn acceptance_rate_is_probability(g in arb_g(), log_t in -3.0..2.0_f64) {
        let theta = Theta::new(10f64.powf(log_t)).unwrap();
        let m = acceptance_rate(&g, theta, &QuadratureSpec::default()).unwrap();
        prop_assert!((0.0..=1.0).contains(&m), "{}: M = {}", g, m);
    }
}
