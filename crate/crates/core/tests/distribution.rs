//! Statistical checks of the sampling paths against exact probabilities.

use ebus::level_store::Entry;
use ebus::rng::seeded;
use ebus::sampler::{sample_level, sample_within, SamplerStats};
use ebus::{Ebus, Ebus32};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    ChiSquared::new((counts.len() - 1) as f64).unwrap().sf(stat)
}

#[test]
fn one_to_two_level_ratio() {
    let mut s = Ebus::from_weights(&[1.0, 2.0]).unwrap();
    let mut rng = seeded(100);
    let n = 1_000_000;
    let mut counts = [0u64; 2];
    for _ in 0..n {
        counts[s.sample(&mut rng).unwrap()] += 1;
    }
    let sigma = (n as f64 * 2.0 / 9.0).sqrt();
    assert!(
        (counts[0] as f64 - n as f64 / 3.0).abs() < 4.0 * sigma,
        "{counts:?}"
    );
}

#[test]
fn one_one_two() {
    let mut s = Ebus::from_weights(&[1.0, 1.0, 2.0]).unwrap();
    let mut rng = seeded(101);
    let mut counts = [0u64; 3];
    for _ in 0..1_000_000 {
        counts[s.sample(&mut rng).unwrap()] += 1;
    }
    let p = chi_square_p(&counts, &[0.25, 0.25, 0.5]);
    assert!(p > 1e-4, "{counts:?} p={p}");
}

#[test]
fn f32_weights_sample_the_same_law() {
    let mut s = Ebus32::from_weights(&[1.0f32, 1.0, 2.0]).unwrap();
    let mut rng = seeded(111);
    let mut counts = [0u64; 3];
    for _ in 0..300_000 {
        counts[s.sample(&mut rng).unwrap()] += 1;
    }
    assert!(
        chi_square_p(&counts, &[0.25, 0.25, 0.5]) > 1e-4,
        "{counts:?}"
    );
}

#[test]
fn within_level_extreme_significands() {
    let entries = [
        Entry {
            sig: 1 << 63,
            index: 0,
        },
        Entry {
            sig: u64::MAX,
            index: 1,
        },
    ];
    // exact: 2^63 / (2^64 + 2^63 - 1) and (2^64 - 1) / (2^64 + 2^63 - 1)
    let total = (1u128 << 64) + (1 << 63) - 1;
    let p0 = (1u128 << 63) as f64 / total as f64;
    let mut rng = seeded(102);
    let mut counts = [0u64; 2];
    for _ in 0..1_000_000 {
        counts[sample_within(&entries, &mut rng).unwrap().0.index] += 1;
    }
    let p = chi_square_p(&counts, &[p0, 1.0 - p0]);
    assert!(p > 1e-4, "{counts:?} p={p}");
}

#[test]
fn tiny_weight_never_blocks_large_one() {
    let mut s = Ebus::from_weights(&[3.0, 1e-300]).unwrap();
    let mut rng = seeded(103);
    let n = 10_000_000u64;
    let mut big = 0u64;
    for _ in 0..n {
        big += u64::from(s.sample(&mut rng).unwrap() == 0);
    }
    // P(index 1) ~ 3e-301: any occurrence over 1e7 draws is a failure in
    // practice.
    assert_eq!(big, n);
}

#[test]
fn refinement_is_rare_at_good_shift() {
    let ws: Vec<f64> = (1..=1000).map(|i| (i as f64).sqrt()).collect();
    let mut s = Ebus::from_weights(&ws).unwrap();
    let mut rng = seeded(104);
    for _ in 0..1_000_000 {
        s.sample(&mut rng).unwrap();
    }
    assert!(s.total_approx() >= 1 << 32);
    // Expected below 2^-20 per call.
    assert!(s.stats().refinements <= 10, "{:?}", s.stats());
}

#[test]
fn single_level_store_always_returns_it() {
    let s = Ebus::from_weights(&[1.25, 1.5, 1.75]).unwrap();
    let mut rng = seeded(105);
    let mut stats = SamplerStats::default();
    let off = ebus::float_decode::level_index(-63).unwrap();
    for _ in 0..10_000 {
        assert_eq!(sample_level(s.store(), &mut rng, &mut stats).unwrap(), off);
    }
}

#[test]
fn bulk_matches_exact_quarters() {
    let mut s = Ebus::from_weights(&[1.0, 1.0, 2.0]).unwrap();
    let mut rng = seeded(106);
    let out = s.sample_many(1_000_000, &mut rng).unwrap();
    let mut counts = [0u64; 3];
    for j in out {
        counts[j] += 1;
    }
    assert!(
        chi_square_p(&counts, &[0.25, 0.25, 0.5]) > 1e-4,
        "{counts:?}"
    );
}

#[test]
fn boundary_heavy_configuration_stays_exact() {
    // With a tiny good threshold the buckets stay small, so the boundary
    // path is taken often; the law must not change.
    let params = ebus::PolicyParams {
        initial_exp: 12,
        level_reset_exp: 16,
        good_exp: 12,
        strong_exp: 12,
        global_step: 2,
    };
    let ws = [1.0, 1.0 + f64::EPSILON, 3.0 * 2f64.powi(-20), 0.7];
    let mut s = Ebus::from_weights_with_params(&ws, params).unwrap();
    let mut rng = seeded(107);
    let mut counts = [0u64; 4];
    for _ in 0..1_000_000 {
        counts[s.sample(&mut rng).unwrap()] += 1;
    }
    let total: f64 = ws.iter().sum();
    let probs: Vec<f64> = ws.iter().map(|w| w / total).collect();
    assert!(s.stats().refinements > 100, "{:?}", s.stats());
    assert!(chi_square_p(&counts, &probs) > 1e-4, "{counts:?}");
}
