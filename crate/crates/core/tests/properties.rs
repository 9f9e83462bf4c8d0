use clearnet::centrality;
use clearnet::clearing;
use clearnet::equivalence;
use clearnet::generate::generate_random_system;
use clearnet::io::{parse_json, to_json, SystemDocument};
use clearnet::nalgebra::DVector;
use clearnet::spectral;
use clearnet::{ClearingParams, FinancialSystem, Rate};
use proptest::prelude::*;

fn system() -> impl Strategy<Value = FinancialSystem> {
    (any::<u64>(), 1usize..12, 0.1f64..=1.0, 0.1f64..10.0).prop_map(|(seed, n, density, scale)| {
        generate_random_system(seed, n, density, scale).unwrap()
    })
}

/// A system with some external assets knocked down.
fn shocked() -> impl Strategy<Value = FinancialSystem> {
    (system(), prop::collection::vec(0.0f64..=1.0, 12)).prop_map(|(s, cuts)| {
        let mut a = s.pre_shock_assets().clone();
        for i in 0..s.bank_count() {
            a[i] *= cuts[i];
        }
        s.with_external_assets(a).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn payments_within_bounds(s in shocked(), r in 0.0f64..=1.0) {
        let sol = clearing::fictitious_default_sequence(&s, &ClearingParams::new(r)).unwrap();
        let l = s.total_liabilities();
        for i in 0..s.bank_count() {
            prop_assert!(sol.payments[i] >= -1e-12 * l[i].max(1.0));
            prop_assert!(sol.payments[i] <= l[i] * (1.0 + 1e-12) + 1e-12);
        }
        prop_assert!(sol.iterations <= s.node_count());
        prop_assert!(sol.default_history.windows(2).all(|w| w[0].is_subset_of(&w[1])));
    }

    #[test]
    fn homogeneous_of_degree_one(s in shocked(), r in 0.0f64..=1.0, c in 1e-3f64..1e3) {
        let params = ClearingParams::new(r);
        let base = clearing::fictitious_default_sequence(&s, &params).unwrap();
        let scaled = clearing::fictitious_default_sequence(&s.scaled(c).unwrap(), &params).unwrap();
        let norm = base.payments.amax().max(1.0);
        for i in 0..s.bank_count() {
            prop_assert!((scaled.payments[i] / c - base.payments[i]).abs() <= 1e-9 * norm);
        }
    }

    #[test]
    fn fewer_assets_never_fewer_defaults(s in shocked(), r in 0.0f64..=1.0, cut in 0.0f64..=1.0) {
        let params = ClearingParams::new(r);
        let before = clearing::fictitious_default_sequence(&s, &params).unwrap();
        let lower = s.with_external_assets(s.external_assets().map(|x| x * cut)).unwrap();
        let after = clearing::fictitious_default_sequence(&lower, &params).unwrap();
        prop_assert!(before.defaults.is_subset_of(&after.defaults));
        for i in 0..s.bank_count() {
            prop_assert!(after.payments[i] <= before.payments[i] + 1e-9 * before.payments[i].max(1.0));
        }
    }

    #[test]
    fn agrees_with_fixed_point_iteration(s in shocked(), r in 0.05f64..=1.0) {
        let params = ClearingParams::new(r);
        let sol = clearing::fictitious_default_sequence(&s, &params).unwrap();
        let oracle = clearing::picard_clearing_oracle(&s, &params, None).unwrap();
        for i in 0..s.bank_count() {
            prop_assert!((sol.payments[i] - oracle[i]).abs() <= 1e-8);
        }
    }

    #[test]
    fn full_shock_losses_are_katz(s in system(), r in 0.0f64..=1.0, m in 0.01f64..0.99) {
        let tol = 1e-8 * s.total_liabilities().amax().max(1.0);
        let rep = equivalence::verify_full_shock_equivalence(&s, &ClearingParams::new(r), &Rate::Uniform(m), tol).unwrap();
        prop_assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn katz_is_linear_in_beta(s in system(), r in 0.0f64..=1.0, w in -3.0f64..3.0) {
        let c = s.relative_claims().bank_block();
        let n = c.nrows();
        let b1 = DVector::from_fn(n, |i, _| (i as f64 + 1.0).sqrt());
        let b2 = DVector::from_fn(n, |i, _| if i % 2 == 0 { 1.0 } else { -2.0 });
        let rate = Rate::Uniform(r);
        let s1 = centrality::generalized_katz(&c, &rate, &b1).unwrap().sigma;
        let s2 = centrality::generalized_katz(&c, &rate, &b2).unwrap().sigma;
        let s12 = centrality::generalized_katz(&c, &rate, &(&b1 + &b2 * w)).unwrap().sigma;
        prop_assert!((s12 - (s1 + s2 * w)).amax() <= 1e-9);
    }

    #[test]
    fn collatz_wielandt_never_exceeds_radius(s in system(), x in prop::collection::vec(0.01f64..10.0, 13)) {
        let c = s.relative_claims().matrix();
        let x = DVector::from_fn(c.nrows(), |i, _| x[i]);
        let rho = spectral::spectral_radius(c, 1e-12, spectral::DEFAULT_MAX_ITER).unwrap();
        let cw = spectral::collatz_wielandt_value(c, &x).unwrap();
        prop_assert!(cw <= rho + 1e-9, "cw {cw} rho {rho}");
    }

    #[test]
    fn documents_round_trip(s in shocked()) {
        let doc = SystemDocument::from_system(&s, None);
        let back = parse_json(&to_json(&doc)).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.to_system().unwrap(), s);
    }
}
