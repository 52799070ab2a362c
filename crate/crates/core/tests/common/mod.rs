#![allow(dead_code)]

use metric_distortion::adversary::{distortion_of, Lottery};
use metric_distortion::PreferenceProfile;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn labels(m: usize) -> Vec<String> {
    (0..m).map(|i| char::from(b'a' + i as u8).to_string()).collect()
}

/// Profiles with `1..=max_m` facilities and `1..=max_groups` groups of weight
/// `1..=max_weight`.
pub fn profiles(max_m: usize, max_groups: usize, max_weight: u64) -> impl Strategy<Value = PreferenceProfile> {
    (1..=max_m).prop_flat_map(move |m| {
        prop::collection::vec(
            (1..=max_weight, Just((0..m).collect::<Vec<_>>()).prop_shuffle()),
            1..=max_groups,
        )
        .prop_map(move |groups| PreferenceProfile::from_indices(labels(m), groups).unwrap())
    })
}

pub fn random_profile(rng: &mut impl Rng, max_m: usize, max_groups: usize, max_weight: u64) -> PreferenceProfile {
    let m = rng.gen_range(1..=max_m);
    let groups = (0..rng.gen_range(1..=max_groups))
        .map(|_| {
            let mut ranking: Vec<usize> = (0..m).collect();
            ranking.shuffle(rng);
            (rng.gen_range(1..=max_weight), ranking)
        })
        .collect();
    PreferenceProfile::from_indices(labels(m), groups).unwrap()
}

/// A lottery with random weights on a random nonempty support.
pub fn random_lottery(rng: &mut impl Rng, m: usize) -> Lottery<f64> {
    let mut w: Vec<f64> = (0..m)
        .map(|_| {
            if rng.gen_bool(0.7) {
                rng.gen_range(0.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    w[rng.gen_range(0..m)] += 0.1;
    let total: f64 = w.iter().sum();
    Lottery::normalized(w.into_iter().map(|x| x / total).collect(), 1e-9).unwrap()
}

/// Distortion as a plain number, `+inf` when unbounded.
pub fn distortion(profile: &PreferenceProfile, q: &Lottery<f64>) -> f64 {
    distortion_of(profile, q).unwrap().value.to_f64()
}

/// Minimum distortion over `q = (t, 1 - t)` for a two-facility profile, by
/// golden-section search on the convex function `t -> distortion`, seeded
/// with a uniform grid so the bracket contains the minimizer.
pub fn two_facility_oracle(profile: &PreferenceProfile) -> (f64, f64) {
    assert_eq!(profile.m(), 2);
    let f = |t: f64| distortion(profile, &Lottery::new(vec![t, 1.0 - t]).unwrap());
    let steps = 40;
    let grid: Vec<f64> = (0..=steps).map(|k| f(k as f64 / steps as f64)).collect();
    let best = (0..=steps)
        .min_by(|&a, &b| grid[a].partial_cmp(&grid[b]).unwrap())
        .unwrap();
    let (mut lo, mut hi) = (
        (best.saturating_sub(1)) as f64 / steps as f64,
        ((best + 1).min(steps)) as f64 / steps as f64,
    );
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (hi - ratio * (hi - lo), lo + ratio * (hi - lo));
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-10 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    let t = (lo + hi) / 2.0;
    let candidates = [(f(t), t), (grid[best], best as f64 / steps as f64)];
    candidates
        .into_iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
        .unwrap()
}
