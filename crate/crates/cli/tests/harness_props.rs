use ebus_harness::fuzz::weight_with_exponent;
use ebus_harness::oracle::oracle_probabilities;
use ebus_harness::stats::{chi_square_sf, gamma_q, js_divergence};
use num_bigint::BigUint;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::gamma_ur;

fn distribution(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

fn any_weight() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.0),
        (1u64..1 << 52).prop_map(f64::from_bits),
        (-1074i32..=1023, any::<u64>()).prop_map(|(e, seed)| {
            let mut rng = ebus::rng::seeded(seed);
            weight_with_exponent(&mut rng, e)
        }),
    ]
}

proptest! {
    #[test]
    fn oracle_numerators_sum_to_denominator(ws in prop::collection::vec(any_weight(), 1..40)) {
        prop_assume!(ws.iter().any(|&w| w > 0.0));
        let ps = oracle_probabilities(&ws).unwrap();
        let total: BigUint = ps.iter().map(|p| &p.num).sum();
        prop_assert_eq!(&total, &ps[0].den);
        prop_assert!(ps[0].den.bits() <= 2226);
        let f: f64 = ps.iter().map(|p| p.to_f64()).sum();
        prop_assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_ratios_match_normal_weights(a in 1e-300f64..1e300, b in 1e-300f64..1e300) {
        let ps = oracle_probabilities(&[a, b]).unwrap();
        let got = ps[0].to_f64() / ps[1].to_f64();
        prop_assert!((got / (a / b) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jsd_bounds_and_symmetry(
        raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..30),
    ) {
        let (p, q): (Vec<f64>, Vec<f64>) = raw.into_iter().map(|(a, b)| (a + 1e-9, b + 1e-9)).unzip();
        let (p, q) = (distribution(p), distribution(q));
        let d = js_divergence(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - js_divergence(&q, &p).unwrap()).abs() < 1e-15);
        prop_assert!(js_divergence(&p, &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn chi_square_sf_matches_statrs(x in 0.0f64..400.0, k in 1u32..300) {
        let ours = chi_square_sf(x, f64::from(k));
        let theirs = 1.0 - ChiSquared::new(f64::from(k)).unwrap().cdf(x);
        // statrs computes the complement; compare relative in the bulk,
        // absolute where it loses digits.
        prop_assert!((ours - theirs).abs() < 1e-9 * theirs.max(1e-6), "{ours} vs {theirs}");
    }

    #[test]
    fn gamma_q_matches_statrs(a in 0.05f64..200.0, x in 0.0f64..400.0) {
        let ours = gamma_q(a, x);
        let theirs = gamma_ur(a, x);
        prop_assert!((ours - theirs).abs() < 1e-10 * theirs.max(1e-4), "Q({a}, {x}) = {ours} vs {theirs}");
    }
}
